use crate::error::{Result, XvaError};
use crate::stats::weighted_var_es;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskMargin {
    /// `rho^-1 ln E[exp(rho L)]`.
    pub rm: f64,
    pub es: f64,
    /// Hurdle rate with `h / (1 + h) = RM / ES`; `None` where undefined.
    pub implied_hurdle: Option<f64>,
}

/// Exponential-utility indifference risk margin of shareholder losses
/// `losses` with probabilities proportional to `weights`.
pub fn indifference_risk_margin(losses: &[f64], weights: &[f64], rho: f64, es_level: f64) -> Result<RiskMargin> {
    if !(rho > 0.0) {
        return Err(XvaError::InvalidParams(format!("risk aversion {rho} must be positive")));
    }
    if losses.is_empty() {
        return Err(XvaError::Empty("loss samples"));
    }
    if losses.len() != weights.len() {
        return Err(XvaError::DimensionMismatch { expected: losses.len(), got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    let top = losses.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(l, _)| rho * l).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = losses.iter().zip(weights).map(|(l, w)| w / total * (rho * l - top).exp()).sum();
    let rm = (top + sum.ln()) / rho;
    let es = weighted_var_es(losses, weights, es_level).1;
    let ratio = rm / es;
    let implied_hurdle = (es > 0.0 && ratio.is_finite() && ratio < 1.0 && ratio >= 0.0).then(|| ratio / (1.0 - ratio));
    Ok(RiskMargin { rm, es, implied_hurdle })
}
