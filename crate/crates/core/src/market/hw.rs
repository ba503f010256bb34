//! Closed forms of the one-factor Hull-White model fitted to a flat curve.
//!
//! The short rate is `r = x + phi(t)` with `dx = -a x dt + sigma dW`, `x0 = 0`.

use super::HullWhiteParams;

fn b_factor(a: f64, tau: f64) -> f64 {
    if a == 0.0 {
        tau
    } else {
        -(-a * tau).exp_m1() / a
    }
}

/// Deterministic shift fitting the flat initial curve at `r0`.
pub fn phi(p: &HullWhiteParams, t: f64) -> f64 {
    let (a, s) = (p.mean_reversion, p.vol);
    let b = b_factor(a, t);
    p.r0 + 0.5 * s * s * b * b
}

/// Variance of the integrated deviation `\int_t^T x`, conditional on time t.
pub fn v(p: &HullWhiteParams, t: f64, big_t: f64) -> f64 {
    let (a, s) = (p.mean_reversion, p.vol);
    let tau = big_t - t;
    let u = a * tau;
    if u.abs() < 1e-3 {
        // series of the bracket below, exact to O(u^3)
        return s * s * tau * tau * tau * (1.0 / 3.0 - u / 4.0 + 7.0 * u * u / 60.0);
    }
    // tau + (2/a) e^{-u} - (1/2a) e^{-2u} - 3/(2a), written with expm1
    let bracket = u + 2.0 * (-u).exp_m1() - 0.5 * (-2.0 * u).exp_m1();
    s * s / (a * a * a) * bracket
}

pub fn b(p: &HullWhiteParams, t: f64, big_t: f64) -> f64 {
    b_factor(p.mean_reversion, big_t - t)
}

/// `(ln A, B)` with `P(t,T) = exp(ln A - B x_t)`.
pub fn bond_coefficients(p: &HullWhiteParams, t: f64, big_t: f64) -> (f64, f64) {
    let ln_a = -p.r0 * (big_t - t) + 0.5 * (v(p, t, big_t) - v(p, 0.0, big_t) + v(p, 0.0, t));
    (ln_a, b(p, t, big_t))
}

pub fn bond_price(p: &HullWhiteParams, t: f64, big_t: f64, x: f64) -> f64 {
    if big_t <= t {
        return 1.0;
    }
    let (ln_a, bb) = bond_coefficients(p, t, big_t);
    (ln_a - bb * x).exp()
}

/// Mean of the short rate at `t` (equals `phi` because `x0 = 0`).
pub fn short_rate_mean(p: &HullWhiteParams, t: f64) -> f64 {
    phi(p, t)
}

pub fn short_rate_variance(p: &HullWhiteParams, t: f64) -> f64 {
    let (a, s) = (p.mean_reversion, p.vol);
    if a == 0.0 {
        return s * s * t;
    }
    -s * s / (2.0 * a) * (-2.0 * a * t).exp_m1()
}
