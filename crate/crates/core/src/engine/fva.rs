use super::regress::{regress, seed_for, Problem, Tag, Target};
use super::{Ctx, Surface};
use crate::error::Result;

pub(crate) struct FvaSolution {
    pub fva: Surface,
    /// Negative conditional expectations floored at zero.
    pub clipped: usize,
    /// Largest pathwise residual of the one-step equation, relative to the
    /// size of its terms.
    pub max_residual: f64,
}

/// Backward solution of `x_i = E_i[x_{i+1}] + dt lambda (g_i - x_i)^+`,
/// `x_N = 0`: the cost of funding the uncollateralised balance `g - x`
/// at the bank's spread.
pub(crate) fn solve_fva(ctx: &Ctx, g: &Surface, tag: Tag, k: usize) -> Result<FvaSolution> {
    let (n, nt) = (ctx.n, ctx.nt);
    let a = ctx.dt * ctx.inp.cube.params().funding_spread();
    let mut fva = Surface::zeros(n, nt);
    let mut clipped = 0;
    let mut max_residual: f64 = 0.0;
    for i in (0..nt.saturating_sub(1)).rev() {
        let pb = Problem {
            x: ctx.feats.portfolio(i, ctx.inp.mtm),
            y: fva.at(i + 1).to_vec(),
            disc: ctx.disc.at(i).to_vec(),
            train: ctx.all_paths(),
            time0: i == 0,
            cfg: ctx.cfg.hyper.fva.clone().with_seed(seed_for(ctx.cfg.seed, tag, 0, i, k)),
        };
        let e = regress(&pb, Target::Mean)?.first;
        for p in 0..n {
            let mut ep = e[p];
            if ep < 0.0 {
                clipped += 1;
                ep = 0.0;
            }
            let gp = g.get(p, i);
            let x = if gp <= ep { ep } else { (ep + a * gp) / (1.0 + a) };
            let scale = 1f64.max(x.abs()).max(ep.abs()).max((a * gp).abs());
            max_residual = max_residual.max((x - ep - a * (gp - x).max(0.0)).abs() / scale);
            fva.set(p, i, x);
        }
    }
    Ok(FvaSolution { fva, clipped, max_residual })
}
