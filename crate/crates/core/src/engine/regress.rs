use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::Result;
use crate::regressor::{fit_mean, fit_var_es, NetConfig, RegressorModel};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Tag {
    Rim = 1,
    Pim = 2,
    Gap = 3,
    Cva = 4,
    Mva = 5,
    Fva = 6,
    Ec = 7,
    Kva = 8,
    FvaNaive = 9,
    KvaNaive = 10,
}

/// Initialisation seed of the network for one regression problem.
pub(crate) fn seed_for(base: u64, tag: Tag, set: usize, time: usize, iteration: usize) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for v in [tag as u64, set as u64, time as u64, iteration as u64] {
        h = (h ^ v).wrapping_mul(0x0100_0000_01b3).rotate_left(17);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Target {
    Mean,
    VarEs(f64),
}

/// One regression of discounted labels on features. Rows of `x` cover
/// every path to be evaluated; only the `train` rows enter the fit. Labels
/// are regressed in time-`t` money (`y / disc`) and predictions returned
/// discounted again.
pub(crate) struct Problem {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub disc: Vec<f64>,
    pub train: Vec<usize>,
    /// The state is deterministic: use sample statistics instead of a network.
    pub time0: bool,
    pub cfg: NetConfig,
}

/// Predictions on every row: the mean (or VaR) and, for a VaR/ES target,
/// the ES.
#[derive(Debug, Clone, Default)]
pub(crate) struct Fitted {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub model: Option<RegressorModel>,
}

impl Problem {
    fn train_labels(&self) -> Vec<f64> {
        self.train.iter().map(|&r| self.y[r] / self.disc[r]).collect()
    }

    fn constant(&self, a: f64, b: Option<f64>) -> Fitted {
        Fitted {
            first: self.disc.iter().map(|d| a * d).collect(),
            second: b.map(|b| self.disc.iter().map(|d| b * d).collect()).unwrap_or_default(),
            model: None,
        }
    }

    fn predict(&self, model: &RegressorModel) -> Result<Fitted> {
        let out = model.predict(self.x.view())?;
        let col = |j: usize| out.column(j).iter().zip(&self.disc).map(|(a, d)| a * d).collect::<Vec<f64>>();
        Ok(Fitted { first: col(0), second: if out.ncols() > 1 { col(1) } else { Vec::new() }, model: None })
    }
}

pub(crate) fn regress(pb: &Problem, target: Target) -> Result<Fitted> {
    if pb.train.is_empty() {
        return Ok(pb.constant(0.0, matches!(target, Target::VarEs(_)).then_some(0.0)));
    }
    let y = pb.train_labels();
    if pb.time0 {
        return Ok(match target {
            Target::Mean => pb.constant(stats::mean(&y), None),
            Target::VarEs(a) => {
                let (q, s) = stats::var_es(&y, a);
                pb.constant(q, Some(s))
            }
        });
    }
    let xt = pb.x.select(Axis(0), &pb.train);
    let model = match target {
        Target::Mean => fit_mean(xt.view(), &y, &pb.cfg)?.model,
        Target::VarEs(a) => fit_var_es(xt.view(), &y, a, &pb.cfg)?.model,
    };
    let mut f = pb.predict(&model)?;
    f.model = Some(model);
    Ok(f)
}

/// Regressions of several independent series (netting sets) over time.
///
/// Well-populated problems are trained in parallel. A problem with fewer
/// than `min_alive` training rows reuses the most recent earlier network of
/// its series, or the sample statistic when there is none; these are
/// counted as frozen.
pub(crate) fn solve_series<F>(n_series: usize, n_times: usize, min_alive: usize, target: Target, build: F) -> Result<(Vec<Vec<Fitted>>, usize)>
where
    F: Fn(usize, usize) -> Option<Problem> + Sync,
{
    let jobs: Vec<(usize, usize)> = (0..n_series).flat_map(|s| (0..n_times).map(move |i| (s, i))).collect();
    let first: Vec<Result<(Fitted, bool)>> = jobs
        .par_iter()
        .map(|&(s, i)| match build(s, i) {
            None => Ok((Fitted::default(), false)),
            Some(pb) if pb.time0 || pb.train.is_empty() || pb.train.len() >= min_alive => regress(&pb, target).map(|f| (f, false)),
            Some(_) => Ok((Fitted::default(), true)),
        })
        .collect();
    let mut out: Vec<Vec<Fitted>> = (0..n_series).map(|_| Vec::with_capacity(n_times)).collect();
    let mut thin = Vec::new();
    for (&(s, i), r) in jobs.iter().zip(first) {
        let (f, is_thin) = r?;
        if is_thin {
            thin.push((s, i));
        }
        out[s].push(f);
    }
    for &(s, i) in &thin {
        let pb = build(s, i).expect("thin problem rebuilt");
        let f = match (0..i).rev().find_map(|j| out[s][j].model.as_ref()) {
            Some(m) => pb.predict(m)?,
            None => regress(&Problem { time0: true, ..pb }, target)?,
        };
        out[s][i] = f;
    }
    Ok((out, thin.len()))
}
