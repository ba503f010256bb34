use crate::error::{Result, XvaError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullWhiteParams {
    pub mean_reversion: f64,
    pub vol: f64,
    pub r0: f64,
}

/// Lognormal exchange rate of a foreign currency, in base-currency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FxParams {
    pub vol: f64,
    pub spot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub lambda0: f64,
}

impl CirParams {
    pub fn feller_holds(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankParams {
    pub intensity: f64,
    pub recovery: f64,
    /// Recovery paid to counterparties at the bank's default (reporting only).
    pub recovery_to_counterparties: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// One entry per currency; currency 0 is the base currency.
    pub rates: Vec<HullWhiteParams>,
    /// One entry per foreign currency (`rates.len() - 1` entries).
    pub fx: Vec<FxParams>,
    /// Intensity catalog; shocks refer to entries by index.
    pub intensities: Vec<CirParams>,
    pub bank: BankParams,
    pub counterparty_recovery: Vec<f64>,
    pub mpor_years: f64,
    pub hurdle: f64,
    /// Spread paid on initial margin funding; defaults to `(1 - R) gamma_bank`.
    pub im_funding_spread: Option<f64>,
    /// Correlation of the Brownian drivers ordered rates, FX, intensities.
    /// `None` means independent drivers.
    pub correlation: Option<Vec<Vec<f64>>>,
}

impl ModelParams {
    /// Representative investment-grade parameters for `n_ccy` currencies,
    /// `n_cpty` counterparties and an intensity catalog of `n_intensities`.
    pub fn desk(n_ccy: usize, n_cpty: usize, n_intensities: usize) -> Self {
        let intensities = (0..n_intensities)
            .map(|k| {
                let theta = 0.02 * (1.0 + k as f64 / 10.0);
                CirParams { kappa: 0.5, theta, sigma: 0.05, lambda0: theta }
            })
            .collect();
        Self {
            rates: vec![HullWhiteParams { mean_reversion: 0.1, vol: 0.01, r0: 0.02 }; n_ccy],
            fx: vec![FxParams { vol: 0.15, spot: 1.0 }; n_ccy.saturating_sub(1)],
            intensities,
            bank: BankParams { intensity: 0.02, recovery: 0.4, recovery_to_counterparties: 0.4 },
            counterparty_recovery: vec![0.4; n_cpty],
            mpor_years: 2.0 / 52.0,
            hurdle: 0.1,
            im_funding_spread: None,
            correlation: None,
        }
    }

    pub fn n_currencies(&self) -> usize {
        self.rates.len()
    }

    pub fn n_drivers(&self) -> usize {
        self.rates.len() + self.fx.len() + self.intensities.len()
    }

    /// Unsecured funding spread `(1 - R_bank) gamma_bank`.
    pub fn funding_spread(&self) -> f64 {
        (1.0 - self.bank.recovery) * self.bank.intensity
    }

    pub fn im_spread(&self) -> f64 {
        self.im_funding_spread.unwrap_or_else(|| self.funding_spread())
    }

    /// Catalog indices whose parameters violate the Feller condition.
    pub fn feller_violations(&self) -> Vec<usize> {
        (0..self.intensities.len()).filter(|&k| !self.intensities[k].feller_holds()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(XvaError::InvalidParams(m));
        if self.rates.is_empty() {
            return bad("at least one currency required".into());
        }
        if self.fx.len() + 1 != self.rates.len() {
            return bad(format!("{} currencies need {} FX entries, got {}", self.rates.len(), self.rates.len() - 1, self.fx.len()));
        }
        for (c, r) in self.rates.iter().enumerate() {
            if !(r.mean_reversion >= 0.0 && r.vol >= 0.0 && r.r0 >= 0.0) {
                return bad(format!("currency {c}: Hull-White parameters must be non-negative"));
            }
        }
        for (j, f) in self.fx.iter().enumerate() {
            if !(f.vol >= 0.0 && f.spot > 0.0) {
                return bad(format!("fx {j}: vol must be non-negative and spot positive"));
            }
        }
        for (k, p) in self.intensities.iter().enumerate() {
            if !(p.kappa >= 0.0 && p.theta >= 0.0 && p.sigma >= 0.0 && p.lambda0 >= 0.0) {
                return bad(format!("intensity {k}: CIR parameters must be non-negative"));
            }
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.bank.intensity >= 0.0 && unit(self.bank.recovery) && unit(self.bank.recovery_to_counterparties)) {
            return bad("bank intensity must be non-negative and recoveries in [0,1]".into());
        }
        if let Some(c) = self.counterparty_recovery.iter().position(|r| !unit(*r)) {
            return bad(format!("counterparty {c}: recovery outside [0,1]"));
        }
        if !(self.mpor_years >= 0.0 && self.hurdle >= 0.0) {
            return bad("margin period of risk and hurdle rate must be non-negative".into());
        }
        if let Some(s) = self.im_funding_spread {
            if !(s >= 0.0) {
                return bad("IM funding spread must be non-negative".into());
            }
        }
        if let Some(m) = &self.correlation {
            let n = self.n_drivers();
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return bad(format!("correlation matrix must be {n}x{n}"));
            }
            for i in 0..n {
                if (m[i][i] - 1.0).abs() > 1e-12 {
                    return bad(format!("correlation diagonal entry {i} is not 1"));
                }
                for j in 0..n {
                    if (m[i][j] - m[j][i]).abs() > 1e-12 || m[i][j].abs() > 1.0 {
                        return bad(format!("correlation entry ({i},{j}) invalid"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Lower Cholesky factor of the driver correlation, `None` for identity.
    pub fn cholesky(&self) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(m) = &self.correlation else { return Ok(None) };
        let n = m.len();
        let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
        let chol = nalgebra::Cholesky::new(mat)
            .ok_or_else(|| XvaError::InvalidParams("correlation matrix is not positive definite".into()))?;
        let l = chol.l();
        Ok(Some((0..n).map(|i| (0..n).map(|j| l[(i, j)]).collect()).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults_validate() {
        let p = ModelParams::desk(2, 5, 7);
        p.validate().unwrap();
        assert_eq!(p.n_drivers(), 2 + 1 + 7);
        assert!((p.intensities[3].theta - 0.026).abs() < 1e-15);
        assert!(p.feller_violations().is_empty());
        assert!((p.funding_spread() - 0.012).abs() < 1e-15);
    }

    #[test]
    fn feller_is_reported_not_enforced() {
        let mut p = ModelParams::desk(1, 1, 1);
        p.intensities[0].sigma = 0.5;
        p.validate().unwrap();
        assert_eq!(p.feller_violations(), vec![0]);
    }

    #[test]
    fn rejects_invalid_recovery_and_correlation() {
        let mut p = ModelParams::desk(1, 2, 2);
        p.counterparty_recovery[1] = 1.5;
        assert!(p.validate().is_err());
        let mut p = ModelParams::desk(1, 2, 2);
        p.correlation = Some(vec![vec![1.0, 0.9, 0.9], vec![0.9, 1.0, -0.9], vec![0.9, -0.9, 1.0]]);
        p.validate().unwrap();
        assert!(p.cholesky().is_err());
    }
}
