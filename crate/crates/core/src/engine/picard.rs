use std::time::Instant;

use super::collateral::{compute_collateral, CollateralSurfaces};
use super::cva::{compute_cva, CvaSurfaces};
use super::fva::solve_fva;
use super::kva::{compute_ec, naive_kva, solve_kva, unconditional_ec};
use super::mva::{compute_mva, MvaSurfaces};
use super::regress::Tag;
use super::{Ctx, EngineConfig, EngineInputs, Surface};
use crate::error::{Result, XvaError};
use crate::stats;

/// Identifies the simulation a run was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunFingerprint {
    pub market_seed: u64,
    pub first_path_id: u64,
    pub n_paths: usize,
    pub n_times: usize,
    pub horizon_years: f64,
    pub engine_seed: u64,
}

/// State after one Picard iteration, summarised at time 0 and by the mean
/// loss profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardSnapshot {
    pub iteration: usize,
    pub mean_loss: Vec<f64>,
    pub stdev_loss: Vec<f64>,
    pub ec0: f64,
    pub kva0: f64,
    pub fva0: f64,
    /// Largest change of the mean loss profile from the previous iteration.
    pub change: f64,
}

/// Simplified metrics kept for comparison with the full ones.
#[derive(Debug, Clone)]
pub struct NaiveVariants {
    /// FVA funding the whole uncollateralised MtM, without the CVA, MVA
    /// and capital offsets.
    pub fva_no_offset: Surface,
    /// FVA without the capital offset.
    pub fva_no_capital: Surface,
    /// KVA as the plain hurdle cost of the final capital profile.
    pub kva: Surface,
    /// Sample ES of the loss over the capital horizon, per time.
    pub ec_unconditional: Vec<f64>,
    /// Posted IM from sample quantiles instead of conditional ones, per time.
    pub pim_unconditional: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Regressions that reused an earlier network for lack of alive paths.
    pub frozen: usize,
    /// Conditional quantities floored at zero.
    pub clipped: usize,
    pub fva_residual: f64,
    pub kva_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(String, f64)>,
}

/// Pathwise surfaces of a full run, in discounted base-currency units.
#[derive(Debug, Clone)]
pub struct XvaRunState {
    pub fingerprint: RunFingerprint,
    pub times: Vec<f64>,
    /// Portfolio mark-to-market over netting sets not yet liquidated.
    pub mtm: Surface,
    /// Uncollateralised balance `sum_c J^c (P^c - VM^c)`.
    pub balance: Surface,
    pub collateral: CollateralSurfaces,
    pub cva: CvaSurfaces,
    pub mva: MvaSurfaces,
    pub fva: Surface,
    pub ec: Surface,
    pub kva: Surface,
    /// Capital at risk, `max(EC, KVA)`.
    pub cr: Surface,
    /// Cumulative loss process of the last iteration.
    pub loss: Surface,
    pub snapshots: Vec<PicardSnapshot>,
    pub naive: NaiveVariants,
    pub diagnostics: Diagnostics,
    /// `[set][i * n_paths + p]`
    alive: Vec<Vec<bool>>,
}

impl XvaRunState {
    /// Posted IM summed over netting sets with a surviving counterparty.
    pub fn pim_total(&self) -> Surface {
        self.masked_sum(&self.collateral.pim)
    }

    pub fn rim_total(&self) -> Surface {
        self.masked_sum(&self.collateral.rim)
    }

    pub fn vm_total(&self) -> Surface {
        self.masked_sum(&self.collateral.vm)
    }

    fn masked_sum(&self, per_set: &[Surface]) -> Surface {
        let (n, nt) = (self.mtm.n_paths(), self.mtm.n_times());
        let mut out = Surface::zeros(n, nt);
        for (c, s) in per_set.iter().enumerate() {
            for i in 0..nt {
                for p in 0..n {
                    out.set(p, i, out.get(p, i) + f64::from(u8::from(self.alive[c][i * n + p])) * s.get(p, i));
                }
            }
        }
        out
    }

    /// Contra-assets `CVA + FVA + MVA`.
    pub fn contra_assets(&self) -> Surface {
        let ca = self.cva.total.map2(&self.fva, |a, b| a + b);
        ca.map2(&self.mva.total, |a, b| a + b)
    }
}

/// Cumulative discounted loss of the bank given the contra-assets and capital.
fn loss_process(ctx: &Ctx, coll: &CollateralSurfaces, cva: &CvaSurfaces, ca: &Surface, balance: &Surface, cr: &Surface) -> Surface {
    let (n, nt) = (ctx.n, ctx.nt);
    let params = ctx.inp.cube.params();
    let (fund, im_fund) = (ctx.dt * params.funding_spread(), ctx.dt * params.im_spread());
    let mtm = ctx.inp.mtm;
    let last = mtm.step(nt - 1);
    let mut loss = Surface::zeros(n, nt);
    for i in 0..nt - 1 {
        let (a, b) = (mtm.step(i), mtm.step(i + 1));
        for p in 0..n {
            let mut d = 0.0;
            for (c, per_path) in cva.losses.iter().enumerate() {
                if let Some(l) = per_path[p] {
                    let s = l.liquidation_step;
                    if (s > a && s <= b) || (i + 2 == nt && s > last) {
                        d += l.amount;
                    }
                }
                d += im_fund * ctx.alive_mask(p, i, c) * coll.pim[c].get(p, i);
            }
            d += fund * (balance.get(p, i) - ca.get(p, i) - cr.get(p, i)).max(0.0);
            d += ca.get(p, i + 1) - ca.get(p, i);
            loss.set(p, i + 1, loss.get(p, i) + d);
        }
    }
    loss
}

/// Runs the whole engine: collateral, CVA, MVA, then FVA, EC and KVA
/// through Picard iterations on the loss process.
pub fn run_engine(inp: EngineInputs, cfg: &EngineConfig) -> Result<XvaRunState> {
    let ctx = Ctx::new(inp, cfg)?;
    let params = inp.cube.params();
    if params.hurdle * ctx.dt >= 1.0 {
        return Err(XvaError::InvalidParams(format!("hurdle {} too large for the time step", params.hurdle)));
    }
    let (n, nt) = (ctx.n, ctx.nt);
    let mtm = inp.mtm;
    let mut diag = Diagnostics::default();
    let mut clock = Instant::now();
    let mut lap = |diag: &mut Diagnostics, name: &str| {
        diag.timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let coll = compute_collateral(&ctx)?;
    lap(&mut diag, "collateral");
    let cva = compute_cva(&ctx, &coll)?;
    lap(&mut diag, "cva");
    let mva = compute_mva(&ctx, &coll)?;
    lap(&mut diag, "mva");
    diag.frozen = coll.frozen + cva.frozen + mva.frozen;
    diag.clipped = coll.clipped + cva.clipped + mva.clipped;

    let mut mtm_s = Surface::zeros(n, nt);
    let mut balance = Surface::zeros(n, nt);
    for i in 0..nt {
        for p in 0..n {
            mtm_s.set(p, i, mtm.mtm(p, i));
            let b: f64 = (0..ctx.n_sets()).map(|c| ctx.alive_mask(p, i, c) * (mtm.clean_value(p, i, c) - coll.vm[c].get(p, i))).sum();
            balance.set(p, i, b);
        }
    }
    let base = balance.map2(&cva.total, |a, b| a - b).map2(&mva.total, |a, b| a - b);

    let first = solve_fva(&ctx, &base, Tag::Fva, 0)?;
    diag.clipped += first.clipped;
    diag.fva_residual = first.max_residual;
    let fva_no_capital = first.fva.clone();
    let mut fva = first.fva;
    lap(&mut diag, "fva");

    let tol = cfg.picard_tol;
    let mut cr = Surface::zeros(n, nt);
    let mut ec = Surface::zeros(n, nt);
    let mut kva = Surface::zeros(n, nt);
    let mut loss = Surface::zeros(n, nt);
    let mut snapshots: Vec<PicardSnapshot> = Vec::new();
    for k in 1..=cfg.picard_max {
        let ca = cva.total.map2(&fva, |a, b| a + b).map2(&mva.total, |a, b| a + b);
        loss = loss_process(&ctx, &coll, &cva, &ca, &balance, &cr);
        let mean_loss = loss.mean_profile();
        let change = snapshots
            .last()
            .map(|s| s.mean_loss.iter().zip(&mean_loss).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY);
        let (e, c1) = compute_ec(&ctx, &loss, k)?;
        let ks = solve_kva(&ctx, &e, k)?;
        ec = e;
        kva = ks.kva;
        cr = ec.map2(&kva, f64::max);
        let f = solve_fva(&ctx, &base.map2(&cr, |a, b| a - b), Tag::Fva, k)?;
        fva = f.fva;
        diag.clipped += c1 + ks.clipped + f.clipped;
        diag.kva_residual = diag.kva_residual.max(ks.max_residual);
        diag.fva_residual = diag.fva_residual.max(f.max_residual);
        diag.iterations = k;
        snapshots.push(PicardSnapshot { iteration: k, mean_loss, stdev_loss: loss.stdev_profile(), ec0: ec.get(0, 0), kva0: kva.get(0, 0), fva0: fva.get(0, 0), change });
        lap(&mut diag, &format!("picard_{k}"));
        let limit = tol.unwrap_or_else(|| 0.01 * loss.stdev_profile().into_iter().fold(0.0, f64::max));
        if change < limit {
            diag.converged = true;
            break;
        }
    }

    let naive_fva = solve_fva(&ctx, &balance, Tag::FvaNaive, 0)?.fva;
    let naive = NaiveVariants {
        fva_no_offset: naive_fva,
        fva_no_capital,
        kva: naive_kva(&ctx, &cr)?,
        ec_unconditional: unconditional_ec(&ctx, &loss),
        pim_unconditional: unconditional_pim(&ctx),
    };
    lap(&mut diag, "naive");

    let alive = (0..ctx.n_sets())
        .map(|c| (0..nt).flat_map(|i| (0..n).map(move |p| (i, p))).map(|(i, p)| mtm.alive(p, i, c)).collect())
        .collect();
    Ok(XvaRunState {
        fingerprint: RunFingerprint {
            market_seed: inp.cube.seed,
            first_path_id: inp.cube.first_path_id,
            n_paths: n,
            n_times: nt,
            horizon_years: inp.cube.grid().horizon_years,
            engine_seed: cfg.seed,
        },
        times: (0..nt).map(|i| i as f64 * ctx.dt).collect(),
        mtm: mtm_s,
        balance,
        collateral: coll,
        cva,
        mva,
        fva,
        ec,
        kva,
        cr,
        loss,
        snapshots,
        naive,
        diagnostics: diag,
        alive,
    })
}

fn unconditional_pim(ctx: &Ctx) -> Vec<f64> {
    let mtm = ctx.inp.mtm;
    let alpha = ctx.inp.collateral.alpha_pim;
    (0..ctx.nt)
        .map(|i| {
            if i + 1 >= ctx.nt {
                return 0.0;
            }
            (0..ctx.n_sets())
                .filter(|&c| ctx.inp.collateral.is_csa(c))
                .map(|c| {
                    let paths = &ctx.alive[c][i];
                    if paths.is_empty() {
                        return 0.0;
                    }
                    let y: Vec<f64> =
                        paths.iter().map(|&p| -(mtm.gap_target(p, i, c) - mtm.clean_value(p, i, c)) / ctx.disc.get(p, i)).collect();
                    let q = stats::quantile(&y, alpha).max(0.0);
                    paths.iter().map(|&p| q * ctx.disc.get(p, i)).sum::<f64>() / ctx.n as f64
                })
                .sum()
        })
        .collect()
}
