use crate::error::{Result, XvaError};
use crate::regressor::{LossKind, NetConfig};

/// Network hyperparameters per learned quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    pub cva: NetConfig,
    pub fva: NetConfig,
    pub im: NetConfig,
    pub mva: NetConfig,
    pub gap_cva: NetConfig,
    pub ec: NetConfig,
    pub kva: NetConfig,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            cva: NetConfig::new(3, 20, 0.025, 0.95, 100, LossKind::Mse),
            fva: NetConfig::new(5, 6, 0.025, 0.95, 50, LossKind::Mse),
            im: NetConfig::new(3, 20, 0.05, 0.5, 150, LossKind::JointVarEs(0.99)),
            mva: NetConfig::new(3, 20, 0.1, 0.5, 100, LossKind::Mse),
            gap_cva: NetConfig::new(3, 20, 0.1, 0.5, 100, LossKind::JointVarEs(0.75)),
            ec: NetConfig::new(3, 20, 0.025, 0.95, 100, LossKind::JointVarEs(0.975)),
            kva: NetConfig::new(3, 20, 0.1, 0.5, 100, LossKind::Mse),
        }
    }
}

impl Hyper {
    pub fn all(&self) -> [(&'static str, &NetConfig); 7] {
        [
            ("cva", &self.cva),
            ("fva", &self.fva),
            ("im", &self.im),
            ("mva", &self.mva),
            ("gap_cva", &self.gap_cva),
            ("ec", &self.ec),
            ("kva", &self.kva),
        ]
    }

    /// Same budget everywhere scaled by `factor` (at least one iteration).
    pub fn scaled_iterations(mut self, factor: f64) -> Self {
        for c in [&mut self.cva, &mut self.fva, &mut self.im, &mut self.mva, &mut self.gap_cva, &mut self.ec, &mut self.kva] {
            c.iterations = ((c.iterations as f64 * factor).round() as usize).max(1);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub hyper: Hyper,
    /// Picard iterations on the loss process.
    pub picard_max: usize,
    /// Stop when the largest change of the mean loss profile falls below
    /// this; `None` uses 1% of the largest loss standard deviation.
    pub picard_tol: Option<f64>,
    /// Fewer alive paths than this freezes a netting-set regression.
    pub min_alive: usize,
    pub ec_level: f64,
    pub ec_horizon_years: f64,
    /// Base seed of network initialisation.
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { hyper: Hyper::default(), picard_max: 3, picard_tol: None, min_alive: 100, ec_level: 0.975, ec_horizon_years: 1.0, seed: 7 }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in self.hyper.all() {
            c.validate().map_err(|e| XvaError::InvalidNetConfig(format!("{name}: {e}")))?;
        }
        if self.picard_max == 0 {
            return Err(XvaError::InvalidParams("picard_max must be at least 1".into()));
        }
        if !(0.5 < self.ec_level && self.ec_level < 1.0) {
            return Err(XvaError::InvalidParams(format!("ec_level {} outside (0.5, 1)", self.ec_level)));
        }
        if !(self.ec_horizon_years > 0.0) {
            return Err(XvaError::InvalidParams("ec_horizon_years must be positive".into()));
        }
        Ok(())
    }
}
