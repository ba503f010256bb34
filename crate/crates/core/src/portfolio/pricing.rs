use super::swap::{Swap, PERIOD};
use crate::error::{Result, XvaError};
use crate::market::{hw, HullWhiteParams, PathView, SimContext};

/// Closed-form Hull-White pricer for a swap portfolio aggregated per
/// (netting set, currency) on the common six-monthly date grid.
///
/// Date `e` is `T_e = 0.5 e`; period `d >= 1` accrues over `(T_{d-1}, T_d]`.
/// A receive-fixed position in period `d` is worth `fixed[d] P(t,T_d)` minus
/// the float leg, `P(t,T_{d-1}) - P(t,T_d)` per unit before its fixing and
/// `P(t,T_d) (1/P_fix - 1)` after it.
#[derive(Debug, Clone)]
pub struct PortfolioPricer {
    n_sets: usize,
    n_ccy: usize,
    n_dates: usize,
    n_fine: usize,
    date_step: Vec<usize>,
    fixed: Vec<f64>,
    float: Vec<f64>,
    active: Vec<bool>,
    ccy_active: Vec<bool>,
    ln_a: Vec<f64>,
    b: Vec<f64>,
}

impl PortfolioPricer {
    pub fn new(swaps: &[Swap], n_sets: usize, ctx: &SimContext) -> Result<Self> {
        let grid = &ctx.grid;
        let n_ccy = ctx.layout.n_ccy;
        for s in swaps {
            s.validate()?;
            if s.counterparty >= n_sets || s.currency >= n_ccy {
                return Err(XvaError::Index(format!("swap {}: counterparty or currency out of range", s.id)));
            }
            if s.maturity() > grid.horizon_years + 1e-9 {
                return Err(XvaError::InvalidParams(format!(
                    "swap {} matures at {} beyond the simulation horizon {}",
                    s.id,
                    s.maturity(),
                    grid.horizon_years
                )));
            }
        }
        let n_dates = swaps.iter().map(|s| s.start_index() + s.resets).max().unwrap_or(0);
        let w = n_dates + 1;
        let date_step: Vec<usize> = (0..w).map(|e| grid.fine_steps_for(PERIOD * e as f64)).collect();
        let mut fixed = vec![0.0; n_sets * n_ccy * w];
        let mut float = vec![0.0; n_sets * n_ccy * w];
        for s in swaps {
            let base = (s.counterparty * n_ccy + s.currency) * w;
            let sign = s.direction.sign();
            for d in s.start_index() + 1..=s.start_index() + s.resets {
                fixed[base + d] += sign * PERIOD * s.fixed_rate * s.notional;
                float[base + d] += sign * s.notional;
            }
        }
        let active: Vec<bool> = (0..n_sets * n_ccy)
            .map(|j| (0..w).any(|d| fixed[j * w + d] != 0.0 || float[j * w + d] != 0.0))
            .collect();
        let ccy_active = (0..n_ccy).map(|c| (0..n_sets).any(|s| active[s * n_ccy + c])).collect();
        let n_fine = grid.n_fine();
        let mut ln_a = vec![0.0; n_ccy * (n_fine + 1) * w];
        let mut b = vec![0.0; n_ccy * (n_fine + 1) * w];
        for c in 0..n_ccy {
            let p = &ctx.params.rates[c];
            for k in 0..=n_fine {
                let t = grid.fine_time(k);
                for e in 0..w {
                    let big_t = PERIOD * e as f64;
                    if big_t >= t {
                        let (la, bb) = hw::bond_coefficients(p, t, big_t);
                        ln_a[(c * (n_fine + 1) + k) * w + e] = la;
                        b[(c * (n_fine + 1) + k) * w + e] = bb;
                    }
                }
            }
        }
        Ok(Self { n_sets, n_ccy, n_dates, n_fine, date_step, fixed, float, active, ccy_active, ln_a, b })
    }

    pub fn n_sets(&self) -> usize {
        self.n_sets
    }
    pub fn n_dates(&self) -> usize {
        self.n_dates
    }
    pub fn date_step(&self, e: usize) -> usize {
        self.date_step[e]
    }

    fn bond(&self, c: usize, k: usize, e: usize, x: f64) -> f64 {
        let i = (c * (self.n_fine + 1) + k) * (self.n_dates + 1) + e;
        (self.ln_a[i] - self.b[i] * x).exp()
    }

    /// Fixing bond prices `P(T_{d-1}, T_d)` per currency and period, read
    /// off the path at the reset steps.
    pub fn fixings(&self, ctx: &SimContext, view: &PathView) -> Vec<f64> {
        let w = self.n_dates + 1;
        let mut out = vec![1.0; self.n_ccy * w];
        for c in (0..self.n_ccy).filter(|&c| self.ccy_active[c]) {
            for d in 1..w {
                let k = self.date_step[d - 1];
                out[c * w + d] = self.bond(c, k, d, ctx.x(view, k, c));
            }
        }
        out
    }

    /// Ex-coupon netting-set values at fine step `k` in discounted base units.
    pub fn values(&self, ctx: &SimContext, view: &PathView, k: usize, fixings: &[f64], out: &mut [f64]) {
        out[..self.n_sets].iter_mut().for_each(|v| *v = 0.0);
        if k > self.n_fine {
            return;
        }
        let w = self.n_dates + 1;
        let first = (0..w).find(|&e| self.date_step[e] > k).unwrap_or(w);
        if first >= w {
            return;
        }
        let disc = view.discount(k);
        let mut bonds = vec![0.0; w];
        for c in (0..self.n_ccy).filter(|&c| self.ccy_active[c]) {
            let x = ctx.x(view, k, c);
            // dates from first-1 are needed for an unfixed first period
            for e in first.saturating_sub(1)..w {
                bonds[e] = if self.date_step[e] >= k { self.bond(c, k, e, x) } else { 0.0 };
            }
            let scale = disc * view.fx(k, c);
            for s in 0..self.n_sets {
                let j = s * self.n_ccy + c;
                if !self.active[j] {
                    continue;
                }
                let (fx, fl) = (&self.fixed[j * w..(j + 1) * w], &self.float[j * w..(j + 1) * w]);
                let mut v = 0.0;
                for d in first.max(1)..w {
                    let float_pv = if self.date_step[d - 1] <= k {
                        bonds[d] * (1.0 / fixings[c * w + d] - 1.0)
                    } else {
                        bonds[d - 1] - bonds[d]
                    };
                    v += fx[d] * bonds[d] - fl[d] * float_pv;
                }
                out[s] += scale * v;
            }
        }
    }

    /// Cash flow of each netting set at each date, discounted base units,
    /// laid out `[set * (n_dates + 1) + d]`.
    pub fn flows(&self, view: &PathView, fixings: &[f64]) -> Vec<f64> {
        let w = self.n_dates + 1;
        let mut out = vec![0.0; self.n_sets * w];
        for c in (0..self.n_ccy).filter(|&c| self.ccy_active[c]) {
            for d in 1..w {
                let k = self.date_step[d];
                let scale = view.discount(k) * view.fx(k, c);
                for s in 0..self.n_sets {
                    let j = (s * self.n_ccy + c) * w + d;
                    out[s * w + d] += scale * (self.fixed[j] - self.float[j] * (1.0 / fixings[c * w + d] - 1.0));
                }
            }
        }
        out
    }

    /// Sum of the flows of `set` paid at fine steps in `(a, b]`.
    pub fn flows_between(&self, flows: &[f64], set: usize, a: usize, b: usize) -> f64 {
        let w = self.n_dates + 1;
        (1..w).filter(|&d| self.date_step[d] > a && self.date_step[d] <= b).map(|d| flows[set * w + d]).sum()
    }
}

/// Ex-coupon value of a single swap at fine step `k`, discounted base units.
pub fn price_swap(swap: &Swap, ctx: &SimContext, view: &PathView, k: usize) -> Result<f64> {
    let pricer = PortfolioPricer::new(std::slice::from_ref(swap), swap.counterparty + 1, ctx)?;
    let fix = pricer.fixings(ctx, view);
    let mut out = vec![0.0; swap.counterparty + 1];
    pricer.values(ctx, view, k, &fix, &mut out);
    Ok(out[swap.counterparty])
}

/// Fixed rate making a swap starting at `start` worth zero at time 0.
pub fn par_rate(p: &HullWhiteParams, start: f64, resets: usize) -> f64 {
    let annuity: f64 = (1..=resets).map(|j| PERIOD * hw::bond_price(p, 0.0, start + PERIOD * j as f64, 0.0)).sum();
    let end = start + PERIOD * resets as f64;
    (hw::bond_price(p, 0.0, start, 0.0) - hw::bond_price(p, 0.0, end, 0.0)) / annuity
}
