use serde_json::json;
use sha2::{Digest, Sha256};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{Mode, RunConfig, StaticSolver};
use crate::engine::{incremental_xva, run_engine, xva_profiles, EngineInputs, IncrementalReport, XvaRunState};
use crate::error::{Result, XvaError};
use crate::market::{simulate_defaults, simulate_path_from, simulate_risk_factors, DefaultScenario, RiskFactorCube, ShockStructure, SimulationGrid};
use crate::nmc::{compare_learned_vs_nmc, cva_labels_at, nested_cva, ComparisonReport, LearnedCva, NestedCva, NmcConfig};
use crate::portfolio::{build_mtm_cube, generate_portfolio, read_portfolio_csv, write_portfolio_csv, Swap};
use crate::static_xva::{balance_sheet_check, solve_static_baseline, solve_static_refined, Margin, StaticParams, StaticScenario, VariationMargin};
use crate::stats;

/// Outcome of one invariant check. Hard checks hold by construction and
/// fail the run; soft ones are statistical and only reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, hard: bool, passed: bool, detail: String) -> Self {
        Check { name: name.into(), hard, passed, detail }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out: PathBuf,
    /// Artifact file names in the order written.
    pub files: Vec<String>,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn hard_failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.hard && !c.passed).collect()
    }
}

/// Runs the configured mode on a pool of `cfg.workers` threads and writes
/// the artifacts plus `manifest.json` to `cfg.out`. `config_text` is the
/// raw configuration, hashed and echoed into the manifest.
pub fn run(cfg: &RunConfig, config_text: &str) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| XvaError::InvalidParams(format!("thread pool: {e}")))?;
    pool.install(|| run_here(cfg, config_text))
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
    checks: Vec<Check>,
    timings: Vec<(String, f64)>,
    extra: serde_json::Map<String, serde_json::Value>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(self.dir.join(name))?));
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let v = f()?;
        self.timings.push((stage.to_string(), t.elapsed().as_secs_f64()));
        Ok(v)
    }

    fn check(&mut self, name: impl Into<String>, hard: bool, passed: bool, detail: String) {
        self.checks.push(Check::new(name, hard, passed, detail));
    }
}

// shortest round-trip representation, identical across platforms
fn num(v: f64) -> String {
    format!("{v}")
}

fn run_here(cfg: &RunConfig, config_text: &str) -> Result<RunOutcome> {
    fs::create_dir_all(&cfg.out)?;
    let mut art = Artifacts { dir: cfg.out.clone(), files: Vec::new(), checks: Vec::new(), timings: Vec::new(), extra: Default::default() };
    match cfg.mode {
        Mode::Generate => {
            let swaps = portfolio(cfg)?;
            let f = File::create(cfg.out.join("portfolio.csv"))?;
            write_portfolio_csv(&swaps, BufWriter::new(f))?;
            art.files.push("portfolio.csv".into());
        }
        Mode::Static => static_mode(cfg, &mut art)?,
        Mode::Dynamic => dynamic_mode(cfg, &mut art)?,
        Mode::Validate => validate_mode(cfg, &mut art)?,
        Mode::Incremental => incremental_mode(cfg, &mut art)?,
    }
    if cfg.check {
        let rows: Vec<Vec<String>> = art
            .checks
            .iter()
            .map(|c| vec![c.name.clone(), if c.hard { "hard" } else { "soft" }.into(), if c.passed { "pass" } else { "fail" }.into(), c.detail.clone()])
            .collect();
        art.csv("checks.csv", &["check", "kind", "status", "detail"], rows)?;
    }
    write_manifest(cfg, config_text, &art)?;
    Ok(RunOutcome { out: cfg.out.clone(), files: art.files, checks: art.checks })
}

fn write_manifest(cfg: &RunConfig, config_text: &str, art: &Artifacts) -> Result<()> {
    let hash = Sha256::digest(config_text.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let passed = art.checks.iter().filter(|c| c.passed).count();
    let failures: Vec<String> = art.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "mode": cfg.mode.name(),
        "config_sha256": hex,
        "config_text": config_text,
        "effective_config": serde_json::to_value(cfg)?,
        "seeds": {
            "market": cfg.seed,
            "defaults": cfg.seed,
            "portfolio": cfg.seed,
            "engine": cfg.engine.seed.unwrap_or(cfg.seed),
            "nested_inner": cfg.nmc_seed(),
        },
        "workers": cfg.workers,
        "files": art.files,
        "timings_seconds": art.timings.iter().map(|(k, v)| json!({"stage": k, "seconds": v})).collect::<Vec<_>>(),
        "checks": { "run": cfg.check, "passed": passed, "failed": failures.len(), "failures": failures },
        "results": art.extra,
    });
    fs::write(cfg.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn portfolio(cfg: &RunConfig) -> Result<Vec<Swap>> {
    match &cfg.portfolio.file {
        Some(path) => read_portfolio_csv(File::open(path)?),
        None => generate_portfolio(&cfg.portfolio.spec(&cfg.market, cfg.grid.horizon_years), cfg.seed),
    }
}

fn market(cfg: &RunConfig, art: &mut Artifacts) -> Result<(RiskFactorCube, ShockStructure, DefaultScenario)> {
    let shocks = cfg.market.shock_structure();
    let params = cfg.market.model_params(&shocks);
    let cube = art.time("simulation", || simulate_risk_factors(&cfg.grid.grid(), &params, cfg.seed))?;
    let defaults = art.time("defaults", || simulate_defaults(&cube, &shocks, cfg.seed))?;
    Ok((cube, shocks, defaults))
}

fn static_mode(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let s = &cfg.static_;
    if !(0.0..=1.0).contains(&s.client_default) {
        return Err(XvaError::InvalidParams(format!("client default probability {} outside [0, 1]", s.client_default)));
    }
    let mut law = Vec::new();
    for &[p, w] in &s.outcomes {
        law.push((p, true, w * (1.0 - s.client_default)));
        if s.client_default > 0.0 {
            law.push((p, false, w * s.client_default));
        }
    }
    let scen = StaticScenario::with_bank_default(&law, s.gamma)?;
    let par = StaticParams {
        gamma: s.gamma,
        hurdle: s.hurdle,
        es_level: s.es_level,
        vm: s.vm.map_or(VariationMargin::None, VariationMargin::Constant),
        rim: s.rim_level.map_or(Margin::None, Margin::Quantile),
        pim: s.pim_level.map_or(Margin::None, Margin::Quantile),
        capital_funding: s.capital_funding,
        ..StaticParams::default()
    };
    let r = art.time("static", || match s.solver {
        StaticSolver::Baseline => solve_static_baseline(&scen, &par),
        StaticSolver::Refined => solve_static_refined(&scen, &par),
    })?;
    let bal = balance_sheet_check(&r, &scen)?;
    let mut rows: Vec<Vec<String>> = r.rows().into_iter().map(|(k, v)| vec![k.to_string(), num(v)]).collect();
    rows.push(vec!["iterations".into(), r.iterations.to_string()]);
    rows.push(vec!["balance_cet1_residual".into(), num(bal.cet1)]);
    rows.push(vec!["balance_shc_residual".into(), num(bal.shc)]);
    art.csv("static_report.csv", &["metric", "value"], rows)?;

    let scale = 1.0 + s.outcomes.iter().map(|o| o[0].abs()).fold(0.0, f64::max);
    let tol = 1e-10 * scale;
    let identity = |art: &mut Artifacts, name: &str, a: f64, b: f64| art.check(name, true, (a - b).abs() <= tol, format!("{} vs {}", num(a), num(b)));
    identity(art, "fv = cva - dva", r.fv, r.cva - r.dva);
    identity(art, "fv = ca - cl", r.fv, r.ca - r.cl);
    identity(art, "ftp = ca + kva", r.ftp, r.ca + r.kva);
    art.check("balance sheet identities", true, bal.max() <= tol, format!("max residual {}", num(bal.max())));
    art.check("fva fixed point", true, r.fva_history.last().is_none_or(|v| v.is_finite()), format!("{} iterations", r.iterations));
    Ok(())
}

fn engine_run(cfg: &RunConfig, art: &mut Artifacts, cube: &RiskFactorCube, shocks: &ShockStructure, defaults: &DefaultScenario, swaps: &[Swap]) -> Result<XvaRunState> {
    let ecfg = cfg.engine_config()?;
    let collateral = cfg.collateral.spec(shocks.n_names)?;
    let mtm = art.time("mtm", || build_mtm_cube(cube, defaults, swaps, shocks.n_names))?;
    let state = art.time("engine", || run_engine(EngineInputs { cube, shocks, mtm: &mtm, collateral: &collateral }, &ecfg))?;
    art.timings.extend(state.diagnostics.timings.iter().map(|(k, v)| (format!("engine/{k}"), *v)));
    Ok(state)
}

fn dynamic_mode(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let swaps = portfolio(cfg)?;
    let (cube, shocks, defaults) = market(cfg, art)?;
    let state = engine_run(cfg, art, &cube, &shocks, &defaults, &swaps)?;
    write_profiles(art, &state)?;
    engine_checks(art, &state);
    Ok(())
}

fn write_profiles(art: &mut Artifacts, state: &XvaRunState) -> Result<()> {
    let profiles = xva_profiles(state);
    for (name, bands) in &profiles.metrics {
        let rows = profiles.times.iter().zip(bands).map(|(t, b)| vec![num(*t), num(b.mean), num(b.p05), num(b.p95), num(b.stdev), b.n.to_string()]);
        art.csv(&format!("profile_{name}.csv"), &["time_years", "mean", "p05", "p95", "stdev", "n_paths"], rows)?;
    }
    let mut rows = Vec::new();
    for s in &state.snapshots {
        for (i, t) in state.times.iter().enumerate() {
            rows.push(vec![s.iteration.to_string(), num(*t), num(s.mean_loss[i]), num(s.stdev_loss[i])]);
        }
    }
    art.csv("picard.csv", &["iteration", "time_years", "mean_loss", "stdev_loss"], rows)?;
    let rows = state.snapshots.iter().map(|s| vec![s.iteration.to_string(), num(s.change), num(s.ec0), num(s.kva0), num(s.fva0)]);
    art.csv("picard_summary.csv", &["iteration", "change", "ec0", "kva0", "fva0"], rows)?;
    let d = &state.diagnostics;
    art.extra.insert(
        "diagnostics".into(),
        json!({
            "frozen_regressions": d.frozen,
            "clipped_values": d.clipped,
            "fva_residual": d.fva_residual,
            "kva_residual": d.kva_residual,
            "picard_iterations": d.iterations,
            "picard_converged": d.converged,
        }),
    );
    Ok(())
}

fn engine_checks(art: &mut Artifacts, state: &XvaRunState) {
    let n = state.times.len() - 1;
    let surfaces = [
        ("cva", state.cva.total.clone()),
        ("mva", state.mva.total.clone()),
        ("fva", state.fva.clone()),
        ("ec", state.ec.clone()),
        ("kva", state.kva.clone()),
        ("pim", state.pim_total()),
        ("rim", state.rim_total()),
    ];
    for (name, s) in &surfaces {
        let min = s.values().iter().copied().fold(f64::INFINITY, f64::min);
        let finite = s.values().iter().all(|v| v.is_finite());
        art.check(format!("{name} finite and non-negative"), true, finite && min >= 0.0, format!("min {}", num(min)));
    }
    let ca = state.contra_assets();
    let terminal = ca.at(n).iter().map(|v| v.abs()).fold(0.0, f64::max);
    art.check("contra-assets vanish at the horizon", true, terminal == 0.0, format!("max {}", num(terminal)));
    let d = &state.diagnostics;
    art.check("fva backward residual", true, d.fva_residual < 1e-8, num(d.fva_residual));
    art.check("kva backward residual", true, d.kva_residual < 1e-8, num(d.kva_residual));
    art.check("picard converged", false, d.converged, format!("{} iterations", d.iterations));

    let mean = |s: &crate::engine::Surface| s.mean_profile();
    let (naive, nocap, refined) = (mean(&state.naive.fva_no_offset), mean(&state.naive.fva_no_capital), mean(&state.fva));
    let tol = 1e-9 * (1.0 + naive.iter().copied().fold(0.0, f64::max));
    let fva_ok = (0..=n).all(|i| naive[i] + tol >= nocap[i] && nocap[i] + tol >= refined[i]);
    art.check("fva refinement ordering", false, fva_ok, String::new());
    let (kn, kr) = (mean(&state.naive.kva), mean(&state.kva));
    let kva_ok = (0..=n).all(|i| kn[i] + tol >= kr[i]);
    art.check("kva refinement ordering", false, kva_ok, String::new());

    let (m, sd) = (state.loss.mean_profile(), state.loss.stdev_profile());
    let paths = state.loss.n_paths() as f64;
    let start = n.div_ceil(6);
    let worst = (start..=n).filter(|&i| sd[i] > 0.0).map(|i| m[i].abs() / (sd[i] / paths.sqrt())).fold(0.0, f64::max);
    art.check("loss process centred", false, worst <= 3.0, format!("largest |mean|/se {}", num(worst)));
}

fn validate_mode(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let v = &cfg.validate;
    let swaps = portfolio(cfg)?;
    let shocks = cfg.market.shock_structure();
    let params = cfg.market.model_params(&shocks);
    if v.netting_set >= shocks.n_names {
        return Err(XvaError::Index(format!("netting set {} beyond {} counterparties", v.netting_set, shocks.n_names)));
    }
    let train = art.time("simulation", || simulate_risk_factors(&cfg.grid.grid(), &params, cfg.seed))?;
    let outer_grid = SimulationGrid { paths: v.outer, ..cfg.grid.grid() };
    let outer = art.time("outer simulation", || simulate_path_from(&outer_grid, &params, cfg.seed, cfg.grid.paths as u64))?;
    let net = cfg.engine_config()?.hyper.cva;
    let mut reports: Vec<(f64, ComparisonReport, NestedCva, Vec<f64>)> = Vec::new();
    for &t in &v.times {
        let i = cfg.grid.grid().coarse_index_of(t).ok_or_else(|| XvaError::InvalidParams(format!("validation time {t} is not on the coarse grid")))?;
        let seeded = net.clone().with_seed(cfg.engine.seed.unwrap_or(cfg.seed).wrapping_add(i as u64));
        let learned = art.time(&format!("train t={t}"), || LearnedCva::train(&train, &swaps, &shocks, v.netting_set, i, &seeded))?;
        let h = learned.predict(&outer, &shocks)?;
        let ncfg = NmcConfig::new(v.inner, i, v.netting_set, cfg.nmc_seed()).with_doubling_counts();
        let nested = art.time(&format!("nested t={t}"), || nested_cva(&outer, &swaps, &shocks, &ncfg))?;
        let labels = cva_labels_at(&outer, &swaps, &shocks, v.netting_set, i)?;
        let r = compare_learned_vs_nmc(&h, &nested, &labels, &learned.training_ids)?;
        reports.push((t, r, nested, labels));
    }
    let rows = reports.iter().map(|(t, r, _, _)| {
        vec![
            num(*t),
            r.n_outer.to_string(),
            num(r.mse_learned_labels),
            num(r.mse_learned_nmc),
            num(r.mse_nmc_labels),
            num(r.expected_variance),
            num(r.variance_nmc),
            num(r.decomposition_residual),
            num(r.residual_se),
            num(r.qq_slope),
        ]
    });
    let header = [
        "time_years",
        "n_outer",
        "mse_learned_labels",
        "mse_learned_nmc",
        "mse_nmc_labels",
        "expected_variance",
        "variance_nmc",
        "decomposition_residual",
        "residual_se",
        "qq_slope",
    ];
    art.csv("nmc_report.csv", &header, rows.collect::<Vec<_>>())?;
    let mut plateau = Vec::new();
    for (t, r, nested, labels) in &reports {
        let qq = r.qq.iter().map(|(a, b)| vec![num(*a), num(*b)]);
        art.csv(&format!("nmc_qq_{t}y.csv"), &["nested", "learned"], qq.collect::<Vec<_>>())?;
        for (k, m) in nested.inner_counts.iter().zip(&nested.means) {
            plateau.push(vec![num(*t), k.to_string(), num(stats::mse(m, labels))]);
        }
        art.check(format!("mse decomposition t={t}"), false, r.decomposition_residual.abs() <= 3.0 * r.residual_se, format!("{} vs se {}", num(r.decomposition_residual), num(r.residual_se)));
        art.check(format!("qq slope t={t}"), false, (0.9..=1.1).contains(&r.qq_slope), num(r.qq_slope));
        art.check(format!("learned within nested noise t={t}"), false, r.mse_learned_nmc <= 0.25 * r.variance_nmc, format!("{} vs {}", num(r.mse_learned_nmc), num(r.variance_nmc)));
        art.check(format!("estimates finite t={t}"), true, nested.estimates().iter().all(|x| x.is_finite()), String::new());
    }
    art.csv("nmc_plateau.csv", &["time_years", "inner_paths", "mse_nmc_labels"], plateau)?;
    Ok(())
}

fn incremental_mode(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let legacy = portfolio(cfg)?;
    let next_id = legacy.iter().map(|s| s.id + 1).max().unwrap_or(0);
    let mut new_trades = Vec::new();
    for &id in &cfg.incremental.mirror {
        let s = legacy.iter().find(|s| s.id == id).ok_or_else(|| XvaError::Index(format!("no legacy trade with id {id} to mirror")))?;
        new_trades.push(s.mirror(next_id + new_trades.len()));
    }
    if cfg.incremental.new_trades > 0 {
        let mut spec = cfg.portfolio.spec(&cfg.market, cfg.grid.horizon_years);
        spec.n_trades = cfg.incremental.new_trades;
        for mut s in generate_portfolio(&spec, cfg.seed.wrapping_add(1))? {
            s.id = next_id + new_trades.len();
            new_trades.push(s);
        }
    }
    let (cube, shocks, defaults) = market(cfg, art)?;
    let ecfg = cfg.engine_config()?;
    let collateral = cfg.collateral.spec(shocks.n_names)?;
    let (report, _, after) = art.time("engine", || incremental_xva(&cube, &shocks, &defaults, &legacy, &new_trades, &collateral, &ecfg))?;
    write_incremental(art, &report)?;
    let sum = ["cva", "fva", "mva", "kva"].iter().map(|m| report.delta0(m)).sum::<f64>();
    let tol = 1e-9 * (1.0 + sum.abs());
    art.check("ftp is the sum of time-0 changes", true, (report.ftp - sum).abs() <= tol, format!("{} vs {}", num(report.ftp), num(sum)));
    engine_checks(art, &after);
    Ok(())
}

fn write_incremental(art: &mut Artifacts, report: &IncrementalReport) -> Result<()> {
    let mut rows = Vec::new();
    for (name, mean, se) in &report.metrics {
        for (i, t) in report.times.iter().enumerate() {
            rows.push(vec![name.clone(), num(*t), num(mean[i]), num(se[i])]);
        }
    }
    art.csv("incremental.csv", &["metric", "time_years", "delta_mean", "delta_se"], rows)?;
    let mut rows = vec![vec!["delta_mtm".to_string(), num(report.delta_mtm)], vec!["ftp".to_string(), num(report.ftp)]];
    rows.extend(report.metrics.iter().map(|(n, m, _)| vec![format!("delta_{n}_0"), num(m[0])]));
    art.csv("incremental_summary.csv", &["quantity", "value"], rows)
}

/// Reads a config file; a relative portfolio path is taken relative to it.
pub fn load_config(path: &Path) -> Result<(RunConfig, String)> {
    let text = fs::read_to_string(path)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let (Some(f), Some(dir)) = (&cfg.portfolio.file, path.parent()) {
        if f.is_relative() {
            cfg.portfolio.file = Some(dir.join(f));
        }
    }
    Ok((cfg, text))
}
