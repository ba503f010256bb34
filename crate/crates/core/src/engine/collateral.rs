use super::regress::{seed_for, solve_series, Fitted, Problem, Tag, Target};
use super::{Ctx, Surface};
use crate::error::Result;
use crate::regressor::NetConfig;

/// Collateral per netting set, on every path as if the counterparty were
/// still alive (mask with the survival indicator where it matters).
#[derive(Debug, Clone)]
pub struct CollateralSurfaces {
    /// Variation margin: the clean value for CSA sets, zero otherwise.
    pub vm: Vec<Surface>,
    /// Initial margin received (VaR at `alpha_rim` of the gap).
    pub rim: Vec<Surface>,
    /// Initial margin posted (VaR at `alpha_pim` of the negative gap).
    pub pim: Vec<Surface>,
    /// Expected gap beyond the received IM, `ES - VaR` at `alpha_rim`.
    pub gap: Vec<Surface>,
    pub frozen: usize,
    /// Negative IM quantiles floored at zero.
    pub clipped: usize,
}

pub(crate) fn compute_collateral(ctx: &Ctx) -> Result<CollateralSurfaces> {
    let mtm = ctx.inp.mtm;
    let spec = ctx.inp.collateral;
    let (n, nt, ns) = (ctx.n, ctx.nt, ctx.n_sets());
    let csa: Vec<usize> = (0..ns).filter(|&c| spec.is_csa(c)).collect();
    let mut vm: Vec<Surface> = (0..ns).map(|_| Surface::zeros(n, nt)).collect();
    for &c in &csa {
        for p in 0..n {
            for i in 0..nt {
                vm[c].set(p, i, mtm.clean_value(p, i, c));
            }
        }
    }
    let build = |sign: f64, cfg: &NetConfig, tag: Tag| {
        let csa = &csa;
        let cfg = cfg.clone();
        move |s: usize, i: usize| -> Option<Problem> {
            let c = csa[s];
            // nothing is left to margin at the horizon
            if i + 1 >= nt {
                return None;
            }
            let y = (0..n).map(|p| sign * (mtm.gap_target(p, i, c) - mtm.clean_value(p, i, c))).collect();
            Some(Problem {
                x: ctx.feats.netting_set(c, i, &ctx.all_paths()),
                y,
                disc: ctx.disc.at(i).to_vec(),
                train: ctx.alive[c][i].clone(),
                time0: i == 0,
                cfg: cfg.clone().with_seed(seed_for(ctx.cfg.seed, tag, c, i, 0)),
            })
        }
    };
    let h = &ctx.cfg.hyper;
    let m = ctx.cfg.min_alive;
    let (rim_fit, f1) = solve_series(csa.len(), nt, m, Target::VarEs(spec.alpha_rim), build(1.0, &h.im, Tag::Rim))?;
    let (pim_fit, f2) = solve_series(csa.len(), nt, m, Target::VarEs(spec.alpha_pim), build(-1.0, &h.im, Tag::Pim))?;
    let (gap_fit, f3) = solve_series(csa.len(), nt, m, Target::VarEs(spec.alpha_rim), build(1.0, &h.gap_cva, Tag::Gap))?;

    let mut clipped = 0;
    let mut to_surface = |fits: &[Fitted], quantile: bool| {
        let mut s = Surface::zeros(n, nt);
        for (i, f) in fits.iter().enumerate() {
            if f.first.is_empty() {
                continue;
            }
            for p in 0..n {
                let v = if quantile { f.first[p] } else { f.second[p] - f.first[p] };
                if quantile && v < 0.0 {
                    clipped += 1;
                }
                s.set(p, i, v.max(0.0));
            }
        }
        s
    };
    let mut rim: Vec<Surface> = (0..ns).map(|_| Surface::zeros(n, nt)).collect();
    let mut pim = rim.clone();
    let mut gap = rim.clone();
    for (s, &c) in csa.iter().enumerate() {
        rim[c] = to_surface(&rim_fit[s], true);
        pim[c] = to_surface(&pim_fit[s], true);
        gap[c] = to_surface(&gap_fit[s], false);
    }
    Ok(CollateralSurfaces { vm, rim, pim, gap, frozen: f1 + f2 + f3, clipped })
}
