use super::collateral::CollateralSurfaces;
use super::regress::{seed_for, solve_series, Problem, Tag, Target};
use super::{Ctx, Surface};
use crate::error::Result;
use crate::portfolio::MtMCube;

/// Loss realised when a defaulted netting set is liquidated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreditLoss {
    pub default_step: usize,
    pub liquidation_step: usize,
    /// Discounted amount, net of recovery and collateral.
    pub amount: f64,
}

#[derive(Debug, Clone)]
pub struct CvaSurfaces {
    pub per_set: Vec<Surface>,
    pub total: Surface,
    /// `[set][path]`
    pub losses: Vec<Vec<Option<CreditLoss>>>,
    pub frozen: usize,
    /// Negative regression outputs floored at zero.
    pub clipped: usize,
}

/// Discounted running labels `y_i = f_i dt + exp(-(L_{i+1} - L_i)) y_{i+1}`
/// with `y_N = 0`, where `f` is the rate of the cash flow and `L` the
/// integrated default intensity.
pub fn hazard_labels(rate: &Surface, cum: &Surface, dt: f64) -> Surface {
    let (n, nt) = (rate.n_paths(), rate.n_times());
    let mut y = Surface::zeros(n, nt);
    for i in (0..nt.saturating_sub(1)).rev() {
        for p in 0..n {
            let surv = (-(cum.get(p, i + 1) - cum.get(p, i))).exp();
            y.set(p, i, rate.get(p, i) * dt + surv * y.get(p, i + 1));
        }
    }
    y
}

/// CVA labels of an uncollateralised netting set: the exposure at the end
/// of the margin period, weighted by the counterparty's default density.
pub fn nocsa_cva_labels(mtm: &MtMCube, gamma: &Surface, cum: &Surface, c: usize, recovery: f64, dt: f64) -> Surface {
    let mut rate = Surface::zeros(mtm.n_paths(), mtm.n_times());
    for p in 0..mtm.n_paths() {
        for i in 0..mtm.n_times() {
            rate.set(p, i, (1.0 - recovery) * mtm.gap_target(p, i, c).max(0.0) * gamma.get(p, i));
        }
    }
    hazard_labels(&rate, cum, dt)
}

pub(crate) fn compute_cva(ctx: &Ctx, coll: &CollateralSurfaces) -> Result<CvaSurfaces> {
    let mtm = ctx.inp.mtm;
    let spec = ctx.inp.collateral;
    let (n, nt, ns) = (ctx.n, ctx.nt, ctx.n_sets());
    let ratio = ctx.inp.cube.grid().ratio();
    let rec = &ctx.inp.cube.params().counterparty_recovery;

    let labels: Vec<Surface> = (0..ns)
        .map(|c| {
            if spec.is_csa(c) {
                let mut rate = Surface::zeros(n, nt);
                for p in 0..n {
                    for i in 0..nt {
                        rate.set(p, i, (1.0 - rec[c]) * (1.0 - spec.alpha_rim) * coll.gap[c].get(p, i) * ctx.gamma[c].get(p, i));
                    }
                }
                hazard_labels(&rate, &ctx.cum[c], ctx.dt)
            } else {
                nocsa_cva_labels(mtm, &ctx.gamma[c], &ctx.cum[c], c, rec[c], ctx.dt)
            }
        })
        .collect();

    let cfg = &ctx.cfg.hyper.cva;
    let (fits, frozen) = solve_series(ns, nt, ctx.cfg.min_alive, Target::Mean, |c, i| {
        (i + 1 < nt).then(|| Problem {
            x: ctx.feats.netting_set(c, i, &ctx.all_paths()),
            y: labels[c].at(i).to_vec(),
            disc: ctx.disc.at(i).to_vec(),
            train: ctx.alive[c][i].clone(),
            time0: i == 0,
            cfg: cfg.clone().with_seed(seed_for(ctx.cfg.seed, Tag::Cva, c, i, 0)),
        })
    })?;

    let losses: Vec<Vec<Option<CreditLoss>>> = (0..ns)
        .map(|c| {
            (0..n)
                .map(|p| {
                    mtm.liquidation(p, c).map(|l| {
                        let (vm, im) = if spec.is_csa(c) {
                            (l.value_at_default, coll.rim[c].get(p, (l.default_step - 1) / ratio))
                        } else {
                            (0.0, 0.0)
                        };
                        CreditLoss {
                            default_step: l.default_step,
                            liquidation_step: l.liquidation_step,
                            amount: (1.0 - rec[c]) * (l.exposure_at_liquidation - vm - im).max(0.0),
                        }
                    })
                })
                .collect()
        })
        .collect();

    let mut per_set: Vec<Surface> = (0..ns).map(|_| Surface::zeros(n, nt)).collect();
    let mut total = Surface::zeros(n, nt);
    let mut clipped = 0;
    let mut learned = |v: f64| {
        if v < 0.0 {
            clipped += 1;
        }
        v.max(0.0)
    };
    for c in 0..ns {
        for i in 0..nt.saturating_sub(1) {
            let s = mtm.step(i);
            for p in 0..n {
                let v = match losses[c][p] {
                    None => learned(fits[c][i].first[p]),
                    Some(l) if s < l.default_step => learned(fits[c][i].first[p]),
                    Some(l) if s < l.liquidation_step => l.amount,
                    Some(_) => 0.0,
                };
                per_set[c].set(p, i, v);
            }
        }
        total.add_assign(&per_set[c]);
    }
    Ok(CvaSurfaces { per_set, total, losses, frozen, clipped })
}
