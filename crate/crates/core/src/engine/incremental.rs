use super::{run_engine, EngineConfig, EngineInputs, Surface, XvaRunState};
use crate::error::{Result, XvaError};
use crate::market::{DefaultScenario, RiskFactorCube, ShockStructure};
use crate::portfolio::{build_mtm_cube, CollateralSpec, Swap};
use crate::stats;

/// Change in each XVA metric from adding trades, computed on common
/// random numbers.
#[derive(Debug, Clone)]
pub struct IncrementalReport {
    pub times: Vec<f64>,
    /// `(metric, mean change per time, standard error of the pathwise change)`
    pub metrics: Vec<(String, Vec<f64>, Vec<f64>)>,
    /// Value of the new trades at time 0.
    pub delta_mtm: f64,
    /// Funds transfer price: change of CVA + FVA + MVA + KVA at time 0.
    pub ftp: f64,
}

impl IncrementalReport {
    pub fn delta(&self, name: &str) -> Option<&[f64]> {
        self.metrics.iter().find(|(n, _, _)| n == name).map(|(_, d, _)| d.as_slice())
    }

    pub fn delta0(&self, name: &str) -> f64 {
        self.delta(name).map_or(0.0, |d| d[0])
    }
}

fn diff(a: &Surface, b: &Surface) -> (Vec<f64>, Vec<f64>) {
    let d = b.map2(a, |x, y| x - y);
    let mean = d.mean_profile();
    let se = d.stdev_profile().into_iter().map(|s| s / (d.n_paths() as f64).sqrt()).collect();
    (mean, se)
}

/// Compares two runs on the same simulation.
pub fn incremental_from_states(legacy: &XvaRunState, augmented: &XvaRunState) -> Result<IncrementalReport> {
    let (a, b) = (&legacy.fingerprint, &augmented.fingerprint);
    if a != b {
        return Err(XvaError::RunMismatch(format!("{a:?} vs {b:?}")));
    }
    let pairs: Vec<(&str, Surface, Surface)> = vec![
        ("mtm", legacy.mtm.clone(), augmented.mtm.clone()),
        ("cva", legacy.cva.total.clone(), augmented.cva.total.clone()),
        ("mva", legacy.mva.total.clone(), augmented.mva.total.clone()),
        ("fva", legacy.fva.clone(), augmented.fva.clone()),
        ("ec", legacy.ec.clone(), augmented.ec.clone()),
        ("kva", legacy.kva.clone(), augmented.kva.clone()),
        ("pim", legacy.pim_total(), augmented.pim_total()),
        ("rim", legacy.rim_total(), augmented.rim_total()),
    ];
    let metrics: Vec<(String, Vec<f64>, Vec<f64>)> = pairs
        .into_iter()
        .map(|(n, x, y)| {
            let (m, s) = diff(&x, &y);
            (n.to_string(), m, s)
        })
        .collect();
    let at0 = |s: &XvaRunState| stats::mean(s.cva.total.at(0)) + stats::mean(s.fva.at(0)) + stats::mean(s.mva.total.at(0)) + stats::mean(s.kva.at(0));
    let report = IncrementalReport {
        times: legacy.times.clone(),
        delta_mtm: stats::mean(augmented.mtm.at(0)) - stats::mean(legacy.mtm.at(0)),
        ftp: at0(augmented) - at0(legacy),
        metrics,
    };
    Ok(report)
}

/// Runs the engine on the legacy portfolio and on the legacy portfolio
/// plus the new trades, on the same paths, defaults and network seeds.
pub fn incremental_xva(
    cube: &RiskFactorCube,
    shocks: &ShockStructure,
    defaults: &DefaultScenario,
    legacy: &[Swap],
    new_trades: &[Swap],
    collateral: &CollateralSpec,
    cfg: &EngineConfig,
) -> Result<(IncrementalReport, XvaRunState, XvaRunState)> {
    let n_sets = shocks.n_names;
    let augmented: Vec<Swap> = legacy.iter().chain(new_trades).cloned().collect();
    let run = |swaps: &[Swap]| -> Result<XvaRunState> {
        let mtm = build_mtm_cube(cube, defaults, swaps, n_sets)?;
        run_engine(EngineInputs { cube, shocks, mtm: &mtm, collateral }, cfg)
    };
    let before = run(legacy)?;
    let after = run(&augmented)?;
    Ok((incremental_from_states(&before, &after)?, before, after))
}
