use super::{hw, ModelParams, SimulationGrid};
use crate::error::{Result, XvaError};
use crate::rng::{keyed_stream, Domain};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Column layout of one fine step of a simulated path.
///
/// Columns: short rate per currency, log-FX per foreign currency, intensity
/// state per catalog entry, log of the base discount factor, and the
/// integrated intensity per catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorLayout {
    pub n_ccy: usize,
    pub n_int: usize,
}

impl FactorLayout {
    pub fn rate(&self, c: usize) -> usize {
        c
    }
    /// Log-FX column of foreign currency `c >= 1`.
    pub fn log_fx(&self, c: usize) -> usize {
        self.n_ccy + c - 1
    }
    pub fn intensity(&self, k: usize) -> usize {
        2 * self.n_ccy - 1 + k
    }
    pub fn log_discount(&self) -> usize {
        2 * self.n_ccy - 1 + self.n_int
    }
    pub fn cum_intensity(&self, k: usize) -> usize {
        2 * self.n_ccy + self.n_int + k
    }
    pub fn width(&self) -> usize {
        2 * self.n_ccy + 2 * self.n_int
    }
    pub fn n_drivers(&self) -> usize {
        2 * self.n_ccy - 1 + self.n_int
    }
}

/// Read access to one simulated path.
#[derive(Clone, Copy)]
pub struct PathView<'a> {
    data: &'a [f64],
    layout: FactorLayout,
}

impl<'a> PathView<'a> {
    pub fn new(data: &'a [f64], layout: FactorLayout) -> Self {
        Self { data, layout }
    }
    fn at(&self, k: usize, col: usize) -> f64 {
        self.data[k * self.layout.width() + col]
    }
    pub fn rate(&self, k: usize, c: usize) -> f64 {
        self.at(k, self.layout.rate(c))
    }
    /// Base-currency value of one unit of currency `c`.
    pub fn fx(&self, k: usize, c: usize) -> f64 {
        if c == 0 {
            1.0
        } else {
            self.at(k, self.layout.log_fx(c)).exp()
        }
    }
    pub fn log_fx(&self, k: usize, c: usize) -> f64 {
        if c == 0 {
            0.0
        } else {
            self.at(k, self.layout.log_fx(c))
        }
    }
    /// Intensity (positive part of the full-truncation state).
    pub fn intensity(&self, k: usize, i: usize) -> f64 {
        self.at(k, self.layout.intensity(i)).max(0.0)
    }
    /// Integrated intensity from 0 to fine step `k` (left-point rule).
    pub fn cum_intensity(&self, k: usize, i: usize) -> f64 {
        self.at(k, self.layout.cum_intensity(i))
    }
    /// Base-currency bank-account discount factor to fine step `k`.
    pub fn discount(&self, k: usize) -> f64 {
        self.at(k, self.layout.log_discount()).exp()
    }
    pub fn layout(&self) -> FactorLayout {
        self.layout
    }
}

/// Immutable simulation inputs shared by outer and inner path generation.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub grid: SimulationGrid,
    pub params: ModelParams,
    pub layout: FactorLayout,
    chol: Option<Vec<Vec<f64>>>,
    /// Curve-fitting shift per currency per fine step.
    phi: Vec<Vec<f64>>,
    quanto: Vec<f64>,
}

impl SimContext {
    pub fn new(grid: SimulationGrid, params: ModelParams) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        let layout = FactorLayout { n_ccy: params.n_currencies(), n_int: params.intensities.len() };
        let chol = params.cholesky()?;
        let phi = params
            .rates
            .iter()
            .map(|p| (0..=grid.n_fine()).map(|k| hw::phi(p, grid.fine_time(k))).collect())
            .collect();
        // drift correction of each foreign short rate under the base measure
        let quanto = (0..layout.n_ccy)
            .map(|c| match (&params.correlation, c) {
                (Some(m), c) if c > 0 => -m[c][layout.n_ccy + c - 1] * params.rates[c].vol * params.fx[c - 1].vol,
                _ => 0.0,
            })
            .collect();
        Ok(Self { grid, params, layout, chol, phi, quanto })
    }

    pub fn path_len(&self) -> usize {
        (self.grid.n_fine() + 1) * self.layout.width()
    }

    /// Hull-White deviation `x = r - phi(t)` of currency `c` at fine step `k`.
    pub fn x(&self, view: &PathView, k: usize, c: usize) -> f64 {
        view.rate(k, c) - self.phi[c][k]
    }

    fn init(&self, buf: &mut [f64]) {
        let l = self.layout;
        let p = &self.params;
        for c in 0..l.n_ccy {
            buf[l.rate(c)] = self.phi[c][0];
        }
        for c in 1..l.n_ccy {
            buf[l.log_fx(c)] = p.fx[c - 1].spot.ln();
        }
        for k in 0..l.n_int {
            buf[l.intensity(k)] = p.intensities[k].lambda0;
            buf[l.cum_intensity(k)] = 0.0;
        }
        buf[l.log_discount()] = 0.0;
    }

    /// Euler-simulates steps `start+1..` of the path in `buf`, whose step
    /// `start` must already hold the state. `rngs` holds one stream per driver.
    pub fn advance(&self, buf: &mut [f64], start: usize, rngs: &mut [ChaCha8Rng]) -> Result<()> {
        let l = self.layout;
        let w = l.width();
        let p = &self.params;
        let dt = self.grid.fine_dt();
        let sq = dt.sqrt();
        let nd = l.n_drivers();
        let mut z = vec![0.0; nd];
        let mut y = vec![0.0; nd];
        for n in start..self.grid.n_fine() {
            for d in 0..nd {
                z[d] = StandardNormal.sample(&mut rngs[d]);
            }
            match &self.chol {
                Some(m) => {
                    for i in 0..nd {
                        y[i] = (0..=i).map(|j| m[i][j] * z[j]).sum();
                    }
                }
                None => y.copy_from_slice(&z),
            }
            let (cur, next) = buf[n * w..(n + 2) * w].split_at_mut(w);
            for c in 0..l.n_ccy {
                let hwp = &p.rates[c];
                let x = cur[l.rate(c)] - self.phi[c][n];
                let x1 = x + (-hwp.mean_reversion * x + self.quanto[c]) * dt + hwp.vol * sq * y[c];
                next[l.rate(c)] = x1 + self.phi[c][n + 1];
            }
            for c in 1..l.n_ccy {
                let v = p.fx[c - 1].vol;
                let drift = cur[l.rate(0)] - cur[l.rate(c)] - 0.5 * v * v;
                next[l.log_fx(c)] = cur[l.log_fx(c)] + drift * dt + v * sq * y[l.n_ccy + c - 1];
            }
            for k in 0..l.n_int {
                let cp = &p.intensities[k];
                let raw = cur[l.intensity(k)];
                let pos = raw.max(0.0);
                next[l.intensity(k)] = raw + cp.kappa * (cp.theta - pos) * dt + cp.sigma * pos.sqrt() * sq * y[2 * l.n_ccy - 1 + k];
                next[l.cum_intensity(k)] = cur[l.cum_intensity(k)] + pos * dt;
            }
            next[l.log_discount()] = cur[l.log_discount()] - cur[l.rate(0)] * dt;
        }
        if let Some(bad) = buf[start * w..].iter().position(|v| !v.is_finite()) {
            let idx = start * w + bad;
            return Err(XvaError::NonFinite {
                stage: "risk-factor simulation".into(),
                detail: format!("step {} column {} (parameter blow-up?)", idx / w, idx % w),
            });
        }
        Ok(())
    }

    /// Simulates a full path from the initial state.
    pub fn simulate_path(&self, buf: &mut [f64], rngs: &mut [ChaCha8Rng]) -> Result<()> {
        self.init(buf);
        self.advance(buf, 0, rngs)
    }

    pub fn driver_streams(&self, seed: u64, domain: Domain, a: u64, b: u64) -> Vec<ChaCha8Rng> {
        (0..self.layout.n_drivers() as u64).map(|d| keyed_stream(seed, domain, a, b, d)).collect()
    }
}

/// Simulated risk factors of `paths` paths, stored path-major.
#[derive(Debug, Clone)]
pub struct RiskFactorCube {
    ctx: SimContext,
    pub seed: u64,
    /// Global id of the first path; path `p` of this cube has id `first_path_id + p`.
    pub first_path_id: u64,
    n_paths: usize,
    data: Vec<f64>,
}

impl RiskFactorCube {
    pub fn context(&self) -> &SimContext {
        &self.ctx
    }
    pub fn grid(&self) -> &SimulationGrid {
        &self.ctx.grid
    }
    pub fn params(&self) -> &ModelParams {
        &self.ctx.params
    }
    pub fn layout(&self) -> FactorLayout {
        self.ctx.layout
    }
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }
    pub fn path_id(&self, p: usize) -> u64 {
        self.first_path_id + p as u64
    }
    pub fn path(&self, p: usize) -> PathView<'_> {
        let len = self.ctx.path_len();
        PathView::new(&self.data[p * len..(p + 1) * len], self.ctx.layout)
    }
    pub fn path_data(&self, p: usize) -> &[f64] {
        let len = self.ctx.path_len();
        &self.data[p * len..(p + 1) * len]
    }
}

/// Simulates `grid.paths` paths with ids `0..paths`.
pub fn simulate_risk_factors(grid: &SimulationGrid, params: &ModelParams, seed: u64) -> Result<RiskFactorCube> {
    simulate_path_from(grid, params, seed, 0)
}

/// Simulates `grid.paths` paths with ids starting at `first_path_id`; paths
/// with equal ids are identical across calls.
pub fn simulate_path_from(grid: &SimulationGrid, params: &ModelParams, seed: u64, first_path_id: u64) -> Result<RiskFactorCube> {
    let ctx = SimContext::new(*grid, params.clone())?;
    let len = ctx.path_len();
    let mut data = vec![0.0; len * grid.paths];
    data.par_chunks_mut(len).enumerate().try_for_each(|(p, buf)| {
        let mut rngs = ctx.driver_streams(seed, Domain::MarketPath, first_path_id + p as u64, 0);
        ctx.simulate_path(buf, &mut rngs)
    })?;
    Ok(RiskFactorCube { ctx, seed, first_path_id, n_paths: grid.paths, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(paths: usize) -> (SimulationGrid, ModelParams) {
        let g = SimulationGrid { horizon_years: 2.0, fine_steps_per_year: 8, coarse_steps_per_year: 4, paths };
        (g, ModelParams::desk(2, 2, 3))
    }

    #[test]
    fn layout_columns_are_disjoint() {
        let l = FactorLayout { n_ccy: 3, n_int: 4 };
        let mut cols = vec![l.rate(0), l.rate(1), l.rate(2), l.log_fx(1), l.log_fx(2), l.log_discount()];
        cols.extend((0..4).map(|k| l.intensity(k)));
        cols.extend((0..4).map(|k| l.cum_intensity(k)));
        cols.sort();
        assert_eq!(cols, (0..l.width()).collect::<Vec<_>>());
    }

    #[test]
    fn zero_vol_rates_follow_the_deterministic_shift() {
        let (g, mut p) = small(3);
        for r in &mut p.rates {
            r.vol = 0.0;
        }
        let cube = simulate_risk_factors(&g, &p, 1).unwrap();
        for path in 0..3 {
            for k in 0..=g.n_fine() {
                assert_eq!(cube.path(path).rate(k, 0), 0.02);
            }
        }
    }

    #[test]
    fn path_ids_fix_the_draws() {
        let (g, p) = small(6);
        let a = simulate_risk_factors(&g, &p, 9).unwrap();
        let g2 = SimulationGrid { paths: 2, ..g };
        let b = simulate_path_from(&g2, &p, 9, 4).unwrap();
        assert_eq!(a.path_data(4), b.path_data(0));
        assert_eq!(a.path_data(5), b.path_data(1));
        assert_ne!(a.path_data(3), b.path_data(0));
    }

    #[test]
    fn blow_up_is_reported() {
        let (g, mut p) = small(2);
        p.fx[0].vol = 1e200;
        assert!(matches!(simulate_risk_factors(&g, &p, 1), Err(XvaError::NonFinite { .. })));
    }
}
