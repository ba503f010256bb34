use super::regress::{regress, seed_for, solve_series, Problem, Tag, Target};
use super::{Ctx, Surface};
use crate::error::Result;
use crate::stats;

pub(crate) fn ec_horizon_steps(ctx: &Ctx) -> usize {
    ((ctx.cfg.ec_horizon_years / ctx.dt).round() as usize).max(1)
}

/// Economic capital: conditional ES of the loss over the capital horizon
/// (truncated at the final time), floored at zero.
pub(crate) fn compute_ec(ctx: &Ctx, loss: &Surface, k: usize) -> Result<(Surface, usize)> {
    let (n, nt) = (ctx.n, ctx.nt);
    let m = ec_horizon_steps(ctx);
    let cfg = &ctx.cfg.hyper.ec;
    let (fits, _) = solve_series(1, nt, 0, Target::VarEs(ctx.cfg.ec_level), |_, i| {
        (i + 1 < nt).then(|| Problem {
            x: ctx.feats.portfolio(i, ctx.inp.mtm),
            y: (0..n).map(|p| loss.get(p, (i + m).min(nt - 1)) - loss.get(p, i)).collect(),
            disc: ctx.disc.at(i).to_vec(),
            train: ctx.all_paths(),
            time0: i == 0,
            cfg: cfg.clone().with_seed(seed_for(ctx.cfg.seed, Tag::Ec, 0, i, k)),
        })
    })?;
    let mut ec = Surface::zeros(n, nt);
    let mut clipped = 0;
    for i in 0..nt.saturating_sub(1) {
        for p in 0..n {
            let v = fits[0][i].second[p];
            if v < 0.0 {
                clipped += 1;
            }
            ec.set(p, i, v.max(0.0));
        }
    }
    Ok((ec, clipped))
}

/// Sample ES of the loss over the capital horizon at each time, ignoring
/// the conditioning information.
pub(crate) fn unconditional_ec(ctx: &Ctx, loss: &Surface) -> Vec<f64> {
    let (n, nt) = (ctx.n, ctx.nt);
    let m = ec_horizon_steps(ctx);
    (0..nt)
        .map(|i| {
            if i + 1 >= nt {
                return 0.0;
            }
            let y: Vec<f64> = (0..n).map(|p| loss.get(p, (i + m).min(nt - 1)) - loss.get(p, i)).collect();
            stats::var_es(&y, ctx.cfg.ec_level).1.max(0.0)
        })
        .collect()
}

pub(crate) struct KvaSolution {
    pub kva: Surface,
    pub clipped: usize,
    pub max_residual: f64,
}

/// Backward solution of `x_i = E_i[exp(-h dt) x_{i+1}] + h dt max(EC_i, x_i)`,
/// `x_N = 0`: the hurdle rate paid on the capital at risk, which is the
/// larger of economic capital and the KVA itself.
pub(crate) fn solve_kva(ctx: &Ctx, ec: &Surface, k: usize) -> Result<KvaSolution> {
    let (n, nt) = (ctx.n, ctx.nt);
    let hd = ctx.inp.cube.params().hurdle * ctx.dt;
    let decay = (-hd).exp();
    let mut kva = Surface::zeros(n, nt);
    let mut clipped = 0;
    let mut max_residual: f64 = 0.0;
    for i in (0..nt.saturating_sub(1)).rev() {
        let pb = Problem {
            x: ctx.feats.portfolio(i, ctx.inp.mtm),
            y: kva.at(i + 1).iter().map(|v| decay * v).collect(),
            disc: ctx.disc.at(i).to_vec(),
            train: ctx.all_paths(),
            time0: i == 0,
            cfg: ctx.cfg.hyper.kva.clone().with_seed(seed_for(ctx.cfg.seed, Tag::Kva, 0, i, k)),
        };
        let a = regress(&pb, Target::Mean)?.first;
        for p in 0..n {
            let mut ap = a[p];
            if ap < 0.0 {
                clipped += 1;
                ap = 0.0;
            }
            let e = ec.get(p, i);
            let x = if ap + hd * e < e { ap + hd * e } else { ap / (1.0 - hd) };
            let scale = 1f64.max(x.abs()).max(ap.abs()).max(hd * e);
            max_residual = max_residual.max((x - ap - hd * e.max(x)).abs() / scale);
            kva.set(p, i, x);
        }
    }
    Ok(KvaSolution { kva, clipped, max_residual })
}

/// KVA as the accumulated hurdle cost of a given capital profile, without
/// the capital feeding back into itself.
pub(crate) fn naive_kva(ctx: &Ctx, cr: &Surface) -> Result<Surface> {
    let (n, nt) = (ctx.n, ctx.nt);
    let hd = ctx.inp.cube.params().hurdle * ctx.dt;
    let mut kva = Surface::zeros(n, nt);
    for i in (0..nt.saturating_sub(1)).rev() {
        let pb = Problem {
            x: ctx.feats.portfolio(i, ctx.inp.mtm),
            y: kva.at(i + 1).to_vec(),
            disc: ctx.disc.at(i).to_vec(),
            train: ctx.all_paths(),
            time0: i == 0,
            cfg: ctx.cfg.hyper.kva.clone().with_seed(seed_for(ctx.cfg.seed, Tag::KvaNaive, 0, i, 0)),
        };
        let a = regress(&pb, Target::Mean)?.first;
        for p in 0..n {
            kva.set(p, i, a[p] + hd * cr.get(p, i));
        }
    }
    Ok(kva)
}
