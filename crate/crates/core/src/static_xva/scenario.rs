use crate::error::{Result, XvaError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticSample {
    /// Promised cash flow to the bank.
    pub cash_flow: f64,
    pub client_survives: bool,
    pub bank_survives: bool,
    pub weight: f64,
}

/// A finite weighted law of one-period outcomes (exact enumeration or Monte
/// Carlo samples alike).
#[derive(Debug, Clone, PartialEq)]
pub struct StaticScenario {
    samples: Vec<StaticSample>,
}

impl StaticScenario {
    pub fn new(samples: Vec<StaticSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(XvaError::Empty("static scenario"));
        }
        if let Some(s) = samples.iter().find(|s| !(s.weight >= 0.0) || !s.cash_flow.is_finite()) {
            return Err(XvaError::InvalidParams(format!("bad sample {s:?}")));
        }
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(XvaError::InvalidParams(format!("weights sum to {total}, not 1")));
        }
        if !samples.iter().any(|s| s.bank_survives && s.weight > 0.0) {
            return Err(XvaError::InvalidParams("bank survival has zero probability".into()));
        }
        Ok(StaticScenario { samples })
    }

    /// Expands a law of `(cash flow, client survives, weight)` outcomes with a
    /// bank default independent of it, of probability `gamma`.
    pub fn with_bank_default(law: &[(f64, bool, f64)], gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(XvaError::InvalidParams(format!("gamma {gamma} outside [0, 1)")));
        }
        let mut samples = Vec::with_capacity(2 * law.len());
        for &(p, alive, w) in law {
            samples.push(StaticSample { cash_flow: p, client_survives: alive, bank_survives: true, weight: w * (1.0 - gamma) });
            if gamma > 0.0 {
                samples.push(StaticSample { cash_flow: p, client_survives: alive, bank_survives: false, weight: w * gamma });
            }
        }
        Self::new(samples)
    }

    /// Equally weighted Monte Carlo draws with an independent bank default.
    pub fn from_draws(cash_flows: &[f64], client_survives: &[bool], gamma: f64) -> Result<Self> {
        if cash_flows.len() != client_survives.len() {
            return Err(XvaError::DimensionMismatch { expected: cash_flows.len(), got: client_survives.len() });
        }
        if cash_flows.is_empty() {
            return Err(XvaError::Empty("static scenario"));
        }
        let w = 1.0 / cash_flows.len() as f64;
        let law: Vec<_> = cash_flows.iter().zip(client_survives).map(|(&p, &a)| (p, a, w)).collect();
        Self::with_bank_default(&law, gamma)
    }

    pub fn samples(&self) -> &[StaticSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Q-probability of bank default.
    pub fn bank_default_probability(&self) -> f64 {
        self.samples.iter().filter(|s| !s.bank_survives).map(|s| s.weight).sum()
    }

    /// Survival-measure expectation of `f` (the `J`-weighted mean).
    pub fn survival_mean(&self, f: impl Fn(&StaticSample) -> f64) -> f64 {
        self.survival_mean_at(|_, s| f(s))
    }

    pub(crate) fn survival_mean_at(&self, f: impl Fn(usize, &StaticSample) -> f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, s) in self.samples.iter().enumerate().filter(|(_, s)| s.bank_survives) {
            num += s.weight * f(i, s);
            den += s.weight;
        }
        num / den
    }

    /// Q expectation of `f`.
    pub fn mean(&self, f: impl Fn(&StaticSample) -> f64) -> f64 {
        self.samples.iter().map(|s| s.weight * f(s)).sum()
    }

    /// Values and weights of `f` on the bank-survival samples.
    pub(crate) fn survival_law(&self, f: impl Fn(usize, &StaticSample) -> f64) -> (Vec<f64>, Vec<f64>) {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.bank_survives && s.weight > 0.0)
            .map(|(i, s)| (f(i, s), s.weight))
            .unzip()
    }
}
