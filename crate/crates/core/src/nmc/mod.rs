//! Nested Monte Carlo CVA and the comparison of learned CVA against it.
//!
//! For every outer path the market is re-simulated from its state at the
//! evaluation time along fresh inner streams, and the CVA label (the
//! default-density weighted positive exposure of an uncollateralised
//! netting set) is averaged over the inner paths. Inner streams are keyed by
//! `(seed, outer path id, inner index)`, so estimates for a smaller inner
//! count are prefixes of those for a larger one.

use rayon::prelude::*;

use crate::engine::{nocsa_cva_labels, FeatureBuilder};
use crate::error::{Result, XvaError};
use crate::market::{DefaultScenario, PathView, RiskFactorCube, ShockStructure};
use crate::portfolio::{build_mtm_cube, value_path, PortfolioPricer, Swap};
use crate::regressor::{fit_mean, NetConfig, RegressorModel};
use crate::rng::Domain;
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct NmcConfig {
    /// Largest inner path count.
    pub inner_paths: usize,
    /// Inner counts at which prefix means are reported (each `<= inner_paths`).
    pub inner_counts: Vec<usize>,
    /// Coarse-grid index of the evaluation time.
    pub time_index: usize,
    pub netting_set: usize,
    /// Seed of the inner streams; must differ from the market seed.
    pub seed: u64,
}

impl NmcConfig {
    pub fn new(inner_paths: usize, time_index: usize, netting_set: usize, seed: u64) -> Self {
        NmcConfig { inner_paths, inner_counts: vec![inner_paths], time_index, netting_set, seed }
    }

    /// Inner counts `2, 4, ..., inner_paths` plus `inner_paths` itself.
    pub fn with_doubling_counts(mut self) -> Self {
        let mut v: Vec<usize> = std::iter::successors(Some(2usize), |k| Some(k * 2)).take_while(|&k| k < self.inner_paths).collect();
        v.push(self.inner_paths);
        self.inner_counts = v;
        self
    }

    pub fn validate(&self, cube: &RiskFactorCube) -> Result<()> {
        if self.inner_paths == 0 || self.inner_counts.iter().any(|&k| k == 0 || k > self.inner_paths) {
            return Err(XvaError::InvalidParams("inner path counts must lie in 1..=inner_paths".into()));
        }
        if self.time_index > cube.grid().n_coarse() {
            return Err(XvaError::Index(format!("evaluation time {} beyond the grid", self.time_index)));
        }
        if self.seed == cube.seed {
            return Err(XvaError::StreamReuse);
        }
        Ok(())
    }
}

/// Nested estimates at one time, discounted to time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedCva {
    pub time_index: usize,
    pub path_ids: Vec<u64>,
    pub inner_counts: Vec<usize>,
    /// `[count][outer path]` means over the first `count` inner paths.
    pub means: Vec<Vec<f64>>,
    /// Unbiased inner sample variance at the full inner count (zero for one path).
    pub variance: Vec<f64>,
}

impl NestedCva {
    /// Means at the largest inner count.
    pub fn estimates(&self) -> &[f64] {
        self.means.last().expect("at least one inner count")
    }

    pub fn at_count(&self, count: usize) -> Option<&[f64]> {
        self.inner_counts.iter().position(|&k| k == count).map(|j| self.means[j].as_slice())
    }
}

/// Trades of one netting set, re-addressed as netting set 0.
fn single_set(swaps: &[Swap], c: usize) -> Vec<Swap> {
    swaps.iter().filter(|s| s.counterparty == c).map(|s| Swap { counterparty: 0, ..s.clone() }).collect()
}

/// CVA label of a no-CSA netting set from coarse time `i` along one path:
/// `sum_j (1-R) (gap_j)^+ gamma_j dt exp(-(Lambda_j - Lambda_i))`.
fn path_label(view: &PathView, gap: &[f64], covering: &[usize], i: usize, ratio: usize, recovery: f64, dt: f64) -> f64 {
    let n_times = gap.len();
    let cum = |j: usize| -> f64 { covering.iter().map(|&s| view.cum_intensity(j * ratio, s)).sum() };
    let c0 = cum(i);
    (i..n_times - 1)
        .map(|j| {
            let gamma: f64 = covering.iter().map(|&s| view.intensity(j * ratio, s)).sum();
            (1.0 - recovery) * gap[j].max(0.0) * gamma * dt * (-(cum(j) - c0)).exp()
        })
        .sum()
}

/// Nested Monte Carlo CVA of an uncollateralised netting set at a coarse
/// time, for every path of `outer`.
pub fn nested_cva(outer: &RiskFactorCube, swaps: &[Swap], shocks: &ShockStructure, cfg: &NmcConfig) -> Result<NestedCva> {
    cfg.validate(outer)?;
    let c = cfg.netting_set;
    if c >= shocks.n_names {
        return Err(XvaError::Index(format!("netting set {c} of {}", shocks.n_names)));
    }
    let ctx = outer.context();
    let grid = outer.grid();
    let ratio = grid.ratio();
    let start = cfg.time_index * ratio;
    let trades = single_set(swaps, c);
    let pricer = PortfolioPricer::new(&trades, 1, ctx)?;
    let mpor = grid.fine_steps_for(outer.params().mpor_years);
    let covering = shocks.covering(c);
    let recovery = outer.params().counterparty_recovery[c];
    let dt = grid.coarse_dt();
    let mut counts = cfg.inner_counts.clone();
    counts.sort_unstable();
    counts.dedup();

    let rows: Vec<Result<(Vec<f64>, f64)>> = (0..outer.n_paths())
        .into_par_iter()
        .map(|p| {
            let id = outer.path_id(p);
            let mut buf = outer.path_data(p).to_vec();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut means = Vec::with_capacity(counts.len());
            let mut next = 0;
            for j in 0..cfg.inner_paths {
                let mut rngs = ctx.driver_streams(cfg.seed, Domain::NestedInner, id, j as u64);
                ctx.advance(&mut buf, start, &mut rngs)?;
                let view = PathView::new(&buf, ctx.layout);
                let (_, _, gap, _) = value_path(&pricer, ctx, &view, cfg.time_index, mpor);
                let y = path_label(&view, &gap, &covering, cfg.time_index, ratio, recovery, dt);
                sum += y;
                sum_sq += y * y;
                if next < counts.len() && counts[next] == j + 1 {
                    means.push(sum / (j + 1) as f64);
                    next += 1;
                }
            }
            let k = cfg.inner_paths as f64;
            let var = if cfg.inner_paths > 1 { ((sum_sq - sum * sum / k) / (k - 1.0)).max(0.0) } else { 0.0 };
            Ok((means, var))
        })
        .collect();
    let mut means = vec![Vec::with_capacity(outer.n_paths()); counts.len()];
    let mut variance = Vec::with_capacity(outer.n_paths());
    for r in rows {
        let (m, v) = r?;
        for (j, x) in m.into_iter().enumerate() {
            means[j].push(x);
        }
        variance.push(v);
    }
    Ok(NestedCva {
        time_index: cfg.time_index,
        path_ids: (0..outer.n_paths()).map(|p| outer.path_id(p)).collect(),
        inner_counts: counts,
        means,
        variance,
    })
}

/// CVA labels of netting set `c` at coarse time `i` along the paths of
/// `cube`, ignoring realised defaults (the regression targets).
pub fn cva_labels_at(cube: &RiskFactorCube, swaps: &[Swap], shocks: &ShockStructure, c: usize, i: usize) -> Result<Vec<f64>> {
    let trades = single_set(swaps, c);
    let grid = cube.grid();
    let none = DefaultScenario::none(cube.n_paths(), 1, grid.fine_dt(), grid.fine_steps_for(cube.params().mpor_years));
    let mtm = build_mtm_cube(cube, &none, &trades, 1)?;
    let (gamma, cum) = FeatureBuilder::new(cube, shocks).hazards(c);
    let labels = nocsa_cva_labels(&mtm, &gamma, &cum, 0, cube.params().counterparty_recovery[c], grid.coarse_dt());
    Ok(labels.at(i).to_vec())
}

/// A CVA network for one netting set and time, with the ids of the paths
/// it was trained on.
#[derive(Debug, Clone)]
pub struct LearnedCva {
    pub model: RegressorModel,
    pub netting_set: usize,
    pub time_index: usize,
    pub training_ids: Vec<u64>,
}

impl LearnedCva {
    /// Regresses the CVA labels at coarse time `i` on the netting-set
    /// features of `cube`, in time-`t` money.
    pub fn train(cube: &RiskFactorCube, swaps: &[Swap], shocks: &ShockStructure, c: usize, i: usize, cfg: &NetConfig) -> Result<Self> {
        let labels = cva_labels_at(cube, swaps, shocks, c, i)?;
        let k = i * cube.grid().ratio();
        let y: Vec<f64> = labels.iter().enumerate().map(|(p, v)| v / cube.path(p).discount(k)).collect();
        let x = FeatureBuilder::new(cube, shocks).netting_set(c, i, &(0..cube.n_paths()).collect::<Vec<_>>());
        let model = fit_mean(x.view(), &y, cfg)?.model;
        Ok(LearnedCva { model, netting_set: c, time_index: i, training_ids: (0..cube.n_paths()).map(|p| cube.path_id(p)).collect() })
    }

    /// Discounted predictions on the paths of `cube`.
    pub fn predict(&self, cube: &RiskFactorCube, shocks: &ShockStructure) -> Result<Vec<f64>> {
        let x = FeatureBuilder::new(cube, shocks).netting_set(self.netting_set, self.time_index, &(0..cube.n_paths()).collect::<Vec<_>>());
        let k = self.time_index * cube.grid().ratio();
        let out = self.model.predict_mean(x.view())?;
        Ok(out.iter().enumerate().map(|(p, v)| v * cube.path(p).discount(k)).collect())
    }
}

/// Learned versus nested CVA at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub time_index: usize,
    pub n_outer: usize,
    pub mse_learned_labels: f64,
    pub mse_learned_nmc: f64,
    pub mse_nmc_labels: f64,
    /// Mean inner sample variance of the labels, estimating `E[Var(label | state)]`.
    pub expected_variance: f64,
    pub variance_nmc: f64,
    /// `mse_learned_labels - mse_learned_nmc - expected_variance`
    pub decomposition_residual: f64,
    /// Jackknife standard error of the residual.
    pub residual_se: f64,
    /// Slope of sorted learned values on sorted nested values.
    pub qq_slope: f64,
    /// Matched order statistics `(nested, learned)`.
    pub qq: Vec<(f64, f64)>,
}

/// Jackknife standard error of the mean of `xs`.
pub fn jackknife_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = xs.iter().sum();
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1) as f64).collect();
    let m = stats::mean(&loo);
    (((n - 1) as f64 / n as f64) * loo.iter().map(|v| (v - m) * (v - m)).sum::<f64>()).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (stats::mean(x), stats::mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

/// Compares learned CVA with nested estimates and labels on evaluation
/// paths that must not have been used for training.
pub fn compare_learned_vs_nmc(learned: &[f64], nested: &NestedCva, labels: &[f64], training_ids: &[u64]) -> Result<ComparisonReport> {
    let n = learned.len();
    let nmc = nested.estimates();
    if nmc.len() != n || labels.len() != n {
        return Err(XvaError::DimensionMismatch { expected: n, got: nmc.len().min(labels.len()) });
    }
    if n == 0 {
        return Err(XvaError::Empty("evaluation paths"));
    }
    let train: std::collections::HashSet<u64> = training_ids.iter().copied().collect();
    let overlap = nested.path_ids.iter().filter(|id| train.contains(id)).count();
    if overlap > 0 {
        return Err(XvaError::InSampleContamination { overlap });
    }
    let resid: Vec<f64> = (0..n)
        .map(|p| {
            let (h, y, m) = (learned[p], labels[p], nmc[p]);
            (h - y).powi(2) - (h - m).powi(2) - nested.variance[p]
        })
        .collect();
    let mut a = nmc.to_vec();
    let mut b = learned.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(ComparisonReport {
        time_index: nested.time_index,
        n_outer: n,
        mse_learned_labels: stats::mse(learned, labels),
        mse_learned_nmc: stats::mse(learned, nmc),
        mse_nmc_labels: stats::mse(nmc, labels),
        expected_variance: stats::mean(&nested.variance),
        variance_nmc: stats::variance(nmc),
        decomposition_residual: stats::mean(&resid),
        residual_se: jackknife_se(&resid),
        qq_slope: ols_slope(&a, &b),
        qq: a.into_iter().zip(b).collect(),
    })
}
