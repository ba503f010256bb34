use super::{PortfolioPricer, Swap};
use crate::error::Result;
use crate::market::{DefaultScenario, PathView, RiskFactorCube, SimContext};
use rayon::prelude::*;

/// Liquidation data of a defaulted netting set on one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Liquidation {
    pub default_step: usize,
    pub liquidation_step: usize,
    /// Clean value at the default step (the last variation-margin call).
    pub value_at_default: f64,
    /// Clean value at liquidation plus the flows falling in the margin period.
    pub exposure_at_liquidation: f64,
}

/// Per-path, per-coarse-time, per-netting-set clean values and cash flows,
/// all in discounted base-currency units.
#[derive(Debug, Clone)]
pub struct MtMCube {
    n_paths: usize,
    n_times: usize,
    n_sets: usize,
    ratio: usize,
    pub mpor_steps: usize,
    clean: Vec<f64>,
    clean_ahead: Vec<f64>,
    gap_target: Vec<f64>,
    period_flows: Vec<f64>,
    discount: Vec<f64>,
    liquidation: Vec<Option<Liquidation>>,
}

impl MtMCube {
    /// Cube from externally computed values laid out `[(path * n_times + i) * n_sets + c]`;
    /// no defaults and no cash flows.
    pub fn from_values(n_paths: usize, n_times: usize, n_sets: usize, ratio: usize, mpor_steps: usize, clean: Vec<f64>, gap_target: Vec<f64>) -> Self {
        let n = n_paths * n_times * n_sets;
        assert!(clean.len() == n && gap_target.len() == n, "value arrays do not match the cube shape");
        Self {
            n_paths,
            n_times,
            n_sets,
            ratio,
            mpor_steps,
            clean,
            clean_ahead: gap_target.clone(),
            gap_target,
            period_flows: vec![0.0; n],
            discount: vec![1.0; n_paths * n_times],
            liquidation: vec![None; n_paths * n_sets],
        }
    }

    fn idx(&self, p: usize, i: usize, c: usize) -> usize {
        (p * self.n_times + i) * self.n_sets + c
    }
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }
    /// Number of coarse times including 0 and the horizon.
    pub fn n_times(&self) -> usize {
        self.n_times
    }
    pub fn n_sets(&self) -> usize {
        self.n_sets
    }
    /// Fine step of coarse time `i`.
    pub fn step(&self, i: usize) -> usize {
        i * self.ratio
    }

    /// Clean value `P^c` at coarse time `i`, ignoring defaults.
    pub fn clean_value(&self, p: usize, i: usize, c: usize) -> f64 {
        self.clean[self.idx(p, i, c)]
    }

    /// Clean value with the liquidation cutoff applied (zero from `tau + delta` on).
    pub fn netting_set_value(&self, p: usize, i: usize, c: usize) -> f64 {
        if self.before_liquidation(p, i, c) {
            self.clean_value(p, i, c)
        } else {
            0.0
        }
    }

    /// `P^c_{t+delta} + (flows in (t, t+delta])`, ignoring defaults.
    pub fn gap_target(&self, p: usize, i: usize, c: usize) -> f64 {
        self.gap_target[self.idx(p, i, c)]
    }

    /// Flows accrued over the margin period ending at `t + delta`.
    pub fn accrued_flows(&self, p: usize, i: usize, c: usize) -> f64 {
        self.gap_target(p, i, c) - self.clean_at_offset(p, i, c)
    }

    fn clean_at_offset(&self, p: usize, i: usize, c: usize) -> f64 {
        self.clean_ahead[self.idx(p, i, c)]
    }

    /// Flows of the netting set paid in `(t_{i-1}, t_i]` (zero at `i = 0`).
    pub fn period_flows(&self, p: usize, i: usize, c: usize) -> f64 {
        self.period_flows[self.idx(p, i, c)]
    }

    /// Bank-account discount factor at coarse time `i`.
    pub fn discount(&self, p: usize, i: usize) -> f64 {
        self.discount[p * self.n_times + i]
    }

    pub fn liquidation(&self, p: usize, c: usize) -> Option<Liquidation> {
        self.liquidation[p * self.n_sets + c]
    }

    /// Survival indicator `J^c` at coarse time `i`.
    pub fn alive(&self, p: usize, i: usize, c: usize) -> bool {
        self.liquidation(p, c).is_none_or(|l| self.step(i) < l.default_step)
    }

    pub fn before_liquidation(&self, p: usize, i: usize, c: usize) -> bool {
        self.liquidation(p, c).is_none_or(|l| self.step(i) < l.liquidation_step)
    }

    /// Portfolio mark-to-market: sum of the netting sets not yet liquidated.
    pub fn mtm(&self, p: usize, i: usize) -> f64 {
        (0..self.n_sets).map(|c| self.netting_set_value(p, i, c)).sum()
    }
}

struct PathRows {
    clean: Vec<f64>,
    clean_ahead: Vec<f64>,
    gap: Vec<f64>,
    flows: Vec<f64>,
    discount: Vec<f64>,
    liq: Vec<Option<Liquidation>>,
}

/// Values one path on the coarse grid; shared with nested simulation.
pub(crate) fn value_path(
    pricer: &PortfolioPricer,
    ctx: &SimContext,
    view: &PathView,
    first_time: usize,
    mpor: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let grid = &ctx.grid;
    let n_times = grid.n_coarse() + 1;
    let ns = pricer.n_sets();
    let ratio = grid.ratio();
    let fix = pricer.fixings(ctx, view);
    let flows = pricer.flows(view, &fix);
    let mut clean = vec![0.0; n_times * ns];
    let mut ahead = vec![0.0; n_times * ns];
    let mut gap = vec![0.0; n_times * ns];
    let mut period = vec![0.0; n_times * ns];
    let mut buf = vec![0.0; ns];
    for i in first_time..n_times {
        let s = i * ratio;
        pricer.values(ctx, view, s, &fix, &mut buf);
        clean[i * ns..(i + 1) * ns].copy_from_slice(&buf);
        pricer.values(ctx, view, s + mpor, &fix, &mut buf);
        for c in 0..ns {
            ahead[i * ns + c] = buf[c];
            gap[i * ns + c] = buf[c] + pricer.flows_between(&flows, c, s, s + mpor);
            if i > 0 {
                period[i * ns + c] = pricer.flows_between(&flows, c, s - ratio, s);
            }
        }
    }
    (clean, ahead, gap, period)
}

/// Prices every netting set on every path at the coarse times, at the
/// coarse times shifted by the margin period, and at default/liquidation.
pub fn build_mtm_cube(cube: &RiskFactorCube, defaults: &DefaultScenario, portfolio: &[Swap], n_sets: usize) -> Result<MtMCube> {
    let ctx = cube.context();
    let grid = cube.grid();
    let pricer = PortfolioPricer::new(portfolio, n_sets, ctx)?;
    let mpor = defaults.mpor_steps;
    let n_times = grid.n_coarse() + 1;
    let ratio = grid.ratio();
    let rows: Vec<PathRows> = (0..cube.n_paths())
        .into_par_iter()
        .map(|p| {
            let view = cube.path(p);
            let (clean, clean_ahead, gap, flows) = value_path(&pricer, ctx, &view, 0, mpor);
            let discount = (0..n_times).map(|i| view.discount(i * ratio)).collect();
            let fix = pricer.fixings(ctx, &view);
            let all_flows = pricer.flows(&view, &fix);
            let mut buf = vec![0.0; n_sets];
            let liq = (0..n_sets)
                .map(|c| {
                    let k = defaults.default_step(p, c).filter(|&k| k <= grid.n_fine())?;
                    let l = k + mpor;
                    pricer.values(ctx, &view, k, &fix, &mut buf);
                    let value_at_default = buf[c];
                    pricer.values(ctx, &view, l, &fix, &mut buf);
                    Some(Liquidation {
                        default_step: k,
                        liquidation_step: l,
                        value_at_default,
                        exposure_at_liquidation: buf[c] + pricer.flows_between(&all_flows, c, k, l),
                    })
                })
                .collect();
            PathRows { clean, clean_ahead, gap, flows, discount, liq }
        })
        .collect();
    let mut out = MtMCube {
        n_paths: cube.n_paths(),
        n_times,
        n_sets,
        ratio,
        mpor_steps: mpor,
        clean: Vec::with_capacity(rows.len() * n_times * n_sets),
        clean_ahead: Vec::with_capacity(rows.len() * n_times * n_sets),
        gap_target: Vec::with_capacity(rows.len() * n_times * n_sets),
        period_flows: Vec::with_capacity(rows.len() * n_times * n_sets),
        discount: Vec::with_capacity(rows.len() * n_times),
        liquidation: Vec::with_capacity(rows.len() * n_sets),
    };
    for r in rows {
        out.clean.extend(r.clean);
        out.clean_ahead.extend(r.clean_ahead);
        out.gap_target.extend(r.gap);
        out.period_flows.extend(r.flows);
        out.discount.extend(r.discount);
        out.liquidation.extend(r.liq);
    }
    Ok(out)
}

/// Gap labels `+/-[(P_{t+delta} + flows) - P_t]` of netting set `c` at
/// coarse time `i`, one per path: the first vector feeds the received IM,
/// the second the posted IM.
pub fn compute_im_targets(mtm: &MtMCube, c: usize, i: usize) -> (Vec<f64>, Vec<f64>) {
    let plus: Vec<f64> = (0..mtm.n_paths()).map(|p| mtm.gap_target(p, i, c) - mtm.clean_value(p, i, c)).collect();
    let minus = plus.iter().map(|x| -x).collect();
    (plus, minus)
}
