use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::engine::{EngineConfig, Hyper};
use crate::error::{Result, XvaError};
use crate::market::{ModelParams, ShockStructure, SimulationGrid};
use crate::portfolio::{CollateralSpec, PortfolioSpec};
use crate::regressor::{EarlyStopping, NetConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Generate,
    Static,
    Dynamic,
    Validate,
    Incremental,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Generate => "generate",
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
            Mode::Validate => "validate",
            Mode::Incremental => "incremental",
        }
    }
}

/// Full run configuration, read from TOML. Every key has a default; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    /// Master seed. Market paths, defaults, the portfolio and network
    /// initialisation derive their streams from it.
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
    /// Run the invariant checks and fail on a hard violation.
    pub check: bool,
    pub grid: GridConfig,
    pub market: MarketConfig,
    pub portfolio: PortfolioConfig,
    pub collateral: CollateralConfig,
    pub engine: EngineSection,
    /// Per-metric network overrides keyed by `cva`, `fva`, `im`, `mva`,
    /// `gap_cva`, `ec` or `kva`.
    pub hyper: BTreeMap<String, HyperOverride>,
    #[serde(rename = "static")]
    pub static_: StaticConfig,
    pub validate: ValidateConfig,
    pub incremental: IncrementalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Dynamic,
            seed: 1,
            out: PathBuf::from("out"),
            workers: 1,
            check: false,
            grid: GridConfig::default(),
            market: MarketConfig::default(),
            portfolio: PortfolioConfig::default(),
            collateral: CollateralConfig::default(),
            engine: EngineSection::default(),
            hyper: BTreeMap::new(),
            static_: StaticConfig::default(),
            validate: ValidateConfig::default(),
            incremental: IncrementalConfig::default(),
        }
    }
}

/// Simulation grid; `paths` is the training (outer) path count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub horizon_years: f64,
    pub fine_steps_per_year: usize,
    pub coarse_steps_per_year: usize,
    pub paths: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { horizon_years: 10.0, fine_steps_per_year: 32, coarse_steps_per_year: 16, paths: 8192 }
    }
}

impl GridConfig {
    pub fn grid(&self) -> SimulationGrid {
        SimulationGrid {
            horizon_years: self.horizon_years,
            fine_steps_per_year: self.fine_steps_per_year,
            coarse_steps_per_year: self.coarse_steps_per_year,
            paths: self.paths,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShockKind {
    /// One shock per counterparty plus a joint shock per block of five.
    Desk,
    /// Independent defaults.
    Singletons,
}

/// Market model. Counts size the desk defaults; the optional keys override
/// them uniformly across currencies or names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketConfig {
    pub currencies: usize,
    pub counterparties: usize,
    pub shocks: ShockKind,
    /// Multiplies every intensity level (theta and lambda0).
    pub intensity_scale: f64,
    pub mean_reversion: Option<f64>,
    pub rate_vol: Option<f64>,
    pub r0: Option<f64>,
    pub fx_vol: Option<f64>,
    pub cir_kappa: Option<f64>,
    pub cir_sigma: Option<f64>,
    pub bank_intensity: Option<f64>,
    pub bank_recovery: Option<f64>,
    pub counterparty_recovery: Option<f64>,
    pub mpor_years: Option<f64>,
    pub hurdle: Option<f64>,
    pub im_funding_spread: Option<f64>,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            currencies: 2,
            counterparties: 5,
            shocks: ShockKind::Desk,
            intensity_scale: 1.0,
            mean_reversion: None,
            rate_vol: None,
            r0: None,
            fx_vol: None,
            cir_kappa: None,
            cir_sigma: None,
            bank_intensity: None,
            bank_recovery: None,
            counterparty_recovery: None,
            mpor_years: None,
            hurdle: None,
            im_funding_spread: None,
        }
    }
}

impl MarketConfig {
    pub fn shock_structure(&self) -> ShockStructure {
        match self.shocks {
            ShockKind::Desk => ShockStructure::desk(self.counterparties),
            ShockKind::Singletons => ShockStructure::singletons(self.counterparties),
        }
    }

    pub fn model_params(&self, shocks: &ShockStructure) -> ModelParams {
        let mut p = ModelParams::desk(self.currencies, self.counterparties, shocks.catalog_len());
        for r in &mut p.rates {
            r.mean_reversion = self.mean_reversion.unwrap_or(r.mean_reversion);
            r.vol = self.rate_vol.unwrap_or(r.vol);
            r.r0 = self.r0.unwrap_or(r.r0);
        }
        for f in &mut p.fx {
            f.vol = self.fx_vol.unwrap_or(f.vol);
        }
        for c in &mut p.intensities {
            c.theta *= self.intensity_scale;
            c.lambda0 *= self.intensity_scale;
            c.kappa = self.cir_kappa.unwrap_or(c.kappa);
            c.sigma = self.cir_sigma.unwrap_or(c.sigma);
        }
        p.bank.intensity = self.bank_intensity.unwrap_or(p.bank.intensity);
        p.bank.recovery = self.bank_recovery.unwrap_or(p.bank.recovery);
        if let Some(r) = self.counterparty_recovery {
            p.counterparty_recovery.iter_mut().for_each(|v| *v = r);
        }
        p.mpor_years = self.mpor_years.unwrap_or(p.mpor_years);
        p.hurdle = self.hurdle.unwrap_or(p.hurdle);
        p.im_funding_spread = self.im_funding_spread.or(p.im_funding_spread);
        p
    }
}

/// Either a generated book or a CSV file of swaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PortfolioConfig {
    pub file: Option<PathBuf>,
    pub trades: usize,
    pub notional_min: f64,
    pub notional_max: f64,
    pub notional_step: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub resets_min: usize,
    /// Capped at twice the horizon so every swap matures inside the grid.
    pub resets_max: usize,
    pub pay_fixed_prob: f64,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        let d = PortfolioSpec::desk();
        PortfolioConfig {
            file: None,
            trades: d.n_trades,
            notional_min: d.notional_min,
            notional_max: d.notional_max,
            notional_step: d.notional_step,
            rate_min: d.rate_min,
            rate_max: d.rate_max,
            resets_min: d.resets_min,
            resets_max: d.resets_max,
            pay_fixed_prob: d.pay_fixed_prob,
        }
    }
}

impl PortfolioConfig {
    pub fn spec(&self, market: &MarketConfig, horizon_years: f64) -> PortfolioSpec {
        PortfolioSpec {
            n_trades: self.trades,
            n_counterparties: market.counterparties,
            n_currencies: market.currencies,
            notional_min: self.notional_min,
            notional_max: self.notional_max,
            notional_step: self.notional_step,
            rate_min: self.rate_min,
            rate_max: self.rate_max,
            resets_min: self.resets_min,
            resets_max: self.resets_max.min((2.0 * horizon_years + 1e-9).floor() as usize),
            pay_fixed_prob: self.pay_fixed_prob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollateralConfig {
    /// Netting sets under a CSA; the others are uncollateralised.
    pub csa: Vec<usize>,
    pub alpha_pim: f64,
    pub alpha_rim: f64,
}

impl Default for CollateralConfig {
    fn default() -> Self {
        CollateralConfig { csa: Vec::new(), alpha_pim: 0.99, alpha_rim: 0.75 }
    }
}

impl CollateralConfig {
    pub fn spec(&self, n_sets: usize) -> Result<CollateralSpec> {
        if let Some(&c) = self.csa.iter().find(|&&c| c >= n_sets) {
            return Err(XvaError::Index(format!("CSA netting set {c} beyond {n_sets} counterparties")));
        }
        let mut s = CollateralSpec::with_csa(n_sets, &self.csa);
        s.alpha_pim = self.alpha_pim;
        s.alpha_rim = self.alpha_rim;
        s.validate(n_sets)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub picard_max: usize,
    pub picard_tol: Option<f64>,
    pub min_alive: usize,
    pub ec_level: f64,
    pub ec_horizon_years: f64,
    /// Network seed; defaults to the master seed.
    pub seed: Option<u64>,
    /// Multiplies every training budget before the per-metric overrides.
    pub iteration_scale: f64,
}

impl Default for EngineSection {
    fn default() -> Self {
        let d = EngineConfig::default();
        EngineSection {
            picard_max: d.picard_max,
            picard_tol: d.picard_tol,
            min_alive: d.min_alive,
            ec_level: d.ec_level,
            ec_horizon_years: d.ec_horizon_years,
            seed: None,
            iteration_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperOverride {
    pub layers: Option<usize>,
    pub width: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub iterations: Option<usize>,
    /// Hold out this fraction of the training paths and stop early.
    pub validation_fraction: Option<f64>,
    /// Iterations without held-out improvement before stopping (default 100).
    pub patience: Option<usize>,
}

impl HyperOverride {
    fn apply(&self, c: &mut NetConfig) {
        c.hidden_layers = self.layers.unwrap_or(c.hidden_layers);
        c.width = self.width.unwrap_or(c.width);
        c.learning_rate = self.learning_rate.unwrap_or(c.learning_rate);
        c.momentum = self.momentum.unwrap_or(c.momentum);
        c.iterations = self.iterations.unwrap_or(c.iterations);
        if let Some(f) = self.validation_fraction {
            c.early_stopping = Some(EarlyStopping { validation_fraction: f, patience: self.patience.unwrap_or(100) });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaticSolver {
    Baseline,
    Refined,
}

/// One-period deal: a discrete law of the promised cash flow, an
/// independent client default and an independent bank default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticConfig {
    /// `[cash flow, probability]` pairs.
    pub outcomes: Vec<[f64; 2]>,
    pub client_default: f64,
    pub gamma: f64,
    pub hurdle: f64,
    pub es_level: f64,
    pub solver: StaticSolver,
    pub capital_funding: bool,
    /// Quantile levels of received and posted initial margin.
    pub rim_level: Option<f64>,
    pub pim_level: Option<f64>,
    /// Constant variation margin.
    pub vm: Option<f64>,
}

impl Default for StaticConfig {
    fn default() -> Self {
        StaticConfig {
            outcomes: vec![[100.0, 0.5], [-100.0, 0.5]],
            client_default: 0.1,
            gamma: 0.02,
            hurdle: 0.1,
            es_level: 0.975,
            solver: StaticSolver::Baseline,
            capital_funding: false,
            rim_level: None,
            pim_level: None,
            vm: None,
        }
    }
}

/// Learned CVA against nested Monte Carlo on one uncollateralised set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub netting_set: usize,
    /// Evaluation times in years, on the coarse grid.
    pub times: Vec<f64>,
    pub inner: usize,
    /// Out-of-sample outer paths; training uses `grid.paths`.
    pub outer: usize,
    /// Inner stream seed; defaults to the master seed plus one.
    pub seed: Option<u64>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig { netting_set: 0, times: vec![1.0, 7.0], inner: 128, outer: 2048, seed: None }
    }
}

/// New trades priced against the configured book: mirrors of existing
/// trades and/or freshly generated ones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementalConfig {
    pub mirror: Vec<usize>,
    pub new_trades: usize,
}

const HYPER_GROUPS: [&str; 7] = ["cva", "fva", "im", "mva", "gap_cva", "ec", "kva"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| XvaError::Config {
            line: e.span().map_or(0, |s| line_at(text, s.start)),
            message: e.message().to_string(),
        })?;
        if let Some(name) = cfg.hyper.keys().find(|k| !HYPER_GROUPS.contains(&k.as_str())) {
            let line = text.find(&format!("hyper.{name}")).map_or(0, |o| line_at(text, o));
            return Err(XvaError::Config { line, message: format!("unknown hyperparameter group `{name}`") });
        }
        Ok(cfg)
    }

    pub fn engine_config(&self) -> Result<EngineConfig> {
        let mut hyper = Hyper::default().scaled_iterations(self.engine.iteration_scale);
        for (name, o) in &self.hyper {
            let target = match name.as_str() {
                "cva" => &mut hyper.cva,
                "fva" => &mut hyper.fva,
                "im" => &mut hyper.im,
                "mva" => &mut hyper.mva,
                "gap_cva" => &mut hyper.gap_cva,
                "ec" => &mut hyper.ec,
                "kva" => &mut hyper.kva,
                other => return Err(XvaError::Config { line: 0, message: format!("unknown hyperparameter group `{other}`") }),
            };
            o.apply(target);
        }
        let e = &self.engine;
        let cfg = EngineConfig {
            hyper,
            picard_max: e.picard_max,
            picard_tol: e.picard_tol,
            min_alive: e.min_alive,
            ec_level: e.ec_level,
            ec_horizon_years: e.ec_horizon_years,
            seed: e.seed.unwrap_or(self.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn nmc_seed(&self) -> u64 {
        self.validate.seed.unwrap_or(self.seed.wrapping_add(1))
    }
}

/// 1-based line of a byte offset.
fn line_at(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1
}
