use super::collateral::CollateralSurfaces;
use super::cva::hazard_labels;
use super::regress::{seed_for, solve_series, Problem, Tag, Target};
use super::{Ctx, Surface};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct MvaSurfaces {
    /// Zero once the counterparty has defaulted.
    pub per_set: Vec<Surface>,
    pub total: Surface,
    pub frozen: usize,
    pub clipped: usize,
}

/// Cost of funding the posted IM of each CSA set until the counterparty's
/// default or the horizon.
pub(crate) fn compute_mva(ctx: &Ctx, coll: &CollateralSurfaces) -> Result<MvaSurfaces> {
    let (n, nt, ns) = (ctx.n, ctx.nt, ctx.n_sets());
    let spread = ctx.inp.cube.params().im_spread();
    let csa: Vec<usize> = (0..ns).filter(|&c| ctx.inp.collateral.is_csa(c)).collect();
    let labels: Vec<Surface> = csa
        .iter()
        .map(|&c| hazard_labels(&coll.pim[c].map(|v| spread * v), &ctx.cum[c], ctx.dt))
        .collect();
    let cfg = &ctx.cfg.hyper.mva;
    let (fits, frozen) = solve_series(csa.len(), nt, ctx.cfg.min_alive, Target::Mean, |s, i| {
        let c = csa[s];
        (i + 1 < nt).then(|| Problem {
            x: ctx.feats.netting_set(c, i, &ctx.all_paths()),
            y: labels[s].at(i).to_vec(),
            disc: ctx.disc.at(i).to_vec(),
            train: ctx.alive[c][i].clone(),
            time0: i == 0,
            cfg: cfg.clone().with_seed(seed_for(ctx.cfg.seed, Tag::Mva, c, i, 0)),
        })
    })?;
    let mut per_set: Vec<Surface> = (0..ns).map(|_| Surface::zeros(n, nt)).collect();
    let mut total = Surface::zeros(n, nt);
    let mut clipped = 0;
    for (s, &c) in csa.iter().enumerate() {
        for i in 0..nt.saturating_sub(1) {
            for p in 0..n {
                let mut v = ctx.alive_mask(p, i, c) * fits[s][i].first[p];
                if v < 0.0 {
                    clipped += 1;
                    v = 0.0;
                }
                per_set[c].set(p, i, v);
                total.set(p, i, total.get(p, i) + v);
            }
        }
    }
    Ok(MvaSurfaces { per_set, total, frozen, clipped })
}
