use crate::error::{Result, XvaError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Mse,
    /// Joint VaR/ES scoring at confidence `alpha`.
    JointVarEs(f64),
}

/// Hold out the trailing fraction of samples and keep the parameters with
/// the best held-out loss; stop after `patience` iterations without progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopping {
    pub validation_fraction: f64,
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub iterations: usize,
    pub loss: LossKind,
    /// Linear input-to-output connection alongside the tanh stack.
    pub linear_skip: bool,
    pub early_stopping: Option<EarlyStopping>,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden_layers: 2,
            width: 16,
            learning_rate: 0.1,
            momentum: 0.5,
            iterations: 500,
            loss: LossKind::Mse,
            linear_skip: true,
            early_stopping: None,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn new(hidden_layers: usize, width: usize, learning_rate: f64, momentum: f64, iterations: usize, loss: LossKind) -> Self {
        NetConfig { hidden_layers, width, learning_rate, momentum, iterations, loss, ..NetConfig::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_loss(mut self, loss: LossKind) -> Self {
        self.loss = loss;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(XvaError::InvalidNetConfig(m));
        if self.hidden_layers == 0 || self.width == 0 {
            return bad(format!("layers {} x width {} must both be positive", self.hidden_layers, self.width));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if let LossKind::JointVarEs(a) = self.loss {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha {a} outside (0, 1)"));
            }
        }
        if let Some(es) = self.early_stopping {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) || es.patience == 0 {
                return bad("early stopping needs a fraction in (0, 1) and positive patience".into());
            }
        }
        Ok(())
    }
}
