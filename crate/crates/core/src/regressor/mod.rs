//! Small tanh networks fitted by full-batch momentum gradient descent.
//!
//! Two heads are supported: a conditional mean trained on squared error, and a
//! joint conditional (VaR, ES) pair trained on a jointly elicitable scoring
//! function. Features and labels are standardised internally, so callers pass
//! raw values and get raw-scale outputs back.

mod config;
mod io;
mod model;
mod train;

pub use config::{EarlyStopping, LossKind, NetConfig};
pub use model::{Head, RegressorModel};
pub use train::{fit_mean, fit_var_es, train_mean, train_var_es, Fit};

/// Conditional (VaR, ES) predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct VarEs {
    pub var: Vec<f64>,
    pub es: Vec<f64>,
}

/// Joint VaR/ES score of a single loss sample `y` for the pair `(q, s)`.
///
/// Minimised in expectation by the `alpha`-VaR and ES of `y`.
pub fn joint_loss(q: f64, s: f64, y: f64, alpha: f64) -> f64 {
    let gd = sigmoid(-s);
    let h = q + (y - q).max(0.0) / (1.0 - alpha);
    (1.0 + gd) * h - softplus(-s) - gd * s
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn softplus_inv(y: f64) -> f64 {
    // log(e^y - 1), written to stay accurate for small and large y
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// Logistic sigmoid.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable_and_invertible() {
        assert_eq!(softplus(-800.0), 0.0);
        assert_eq!(softplus(800.0), 800.0);
        for y in [1e-8, 0.3, 2.0, 40.0] {
            assert!((softplus(softplus_inv(y)) / y - 1.0).abs() < 1e-12);
        }
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }
}
