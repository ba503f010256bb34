use ndarray::Array2;

use crate::market::{RiskFactorCube, ShockStructure};
use crate::portfolio::MtMCube;

use super::Surface;

/// Regression features read off the simulated state at a coarse time.
///
/// Netting-set features are all rates and log-FX rates plus the intensities
/// of the shocks that can default the counterparty; portfolio features add
/// every intensity and every counterparty survival indicator.
pub struct FeatureBuilder<'a> {
    cube: &'a RiskFactorCube,
    covering: Vec<Vec<usize>>,
}

impl<'a> FeatureBuilder<'a> {
    pub fn new(cube: &'a RiskFactorCube, shocks: &ShockStructure) -> Self {
        let covering = (0..shocks.n_names)
            .map(|c| {
                let mut v: Vec<usize> = shocks.covering(c);
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        FeatureBuilder { cube, covering }
    }

    fn market_row(&self, p: usize, k: usize, out: &mut Vec<f64>) {
        let view = self.cube.path(p);
        let lay = self.cube.layout();
        for c in 0..lay.n_ccy {
            out.push(view.rate(k, c));
        }
        for c in 1..lay.n_ccy {
            out.push(view.log_fx(k, c));
        }
    }

    pub fn set_dim(&self, c: usize) -> usize {
        let lay = self.cube.layout();
        2 * lay.n_ccy - 1 + self.covering[c].len()
    }

    /// Features of netting set `c` at coarse time `i` on the given paths.
    pub fn netting_set(&self, c: usize, i: usize, paths: &[usize]) -> Array2<f64> {
        let k = i * self.cube.grid().ratio();
        let d = self.set_dim(c);
        let mut data = Vec::with_capacity(paths.len() * d);
        for &p in paths {
            self.market_row(p, k, &mut data);
            let view = self.cube.path(p);
            for &j in &self.covering[c] {
                data.push(view.intensity(k, j));
            }
        }
        Array2::from_shape_vec((paths.len(), d), data).expect("feature shape")
    }

    /// Portfolio-level features at coarse time `i` on every path.
    pub fn portfolio(&self, i: usize, mtm: &MtMCube) -> Array2<f64> {
        let k = i * self.cube.grid().ratio();
        let lay = self.cube.layout();
        let d = 2 * lay.n_ccy - 1 + lay.n_int + mtm.n_sets();
        let n = self.cube.n_paths();
        let mut data = Vec::with_capacity(n * d);
        for p in 0..n {
            self.market_row(p, k, &mut data);
            let view = self.cube.path(p);
            for j in 0..lay.n_int {
                data.push(view.intensity(k, j));
            }
            for c in 0..mtm.n_sets() {
                data.push(if mtm.alive(p, i, c) { 1.0 } else { 0.0 });
            }
        }
        Array2::from_shape_vec((n, d), data).expect("feature shape")
    }
}

impl FeatureBuilder<'_> {
    /// Default intensity of counterparty `c` and its integral from 0, at the coarse times.
    pub fn hazards(&self, c: usize) -> (Surface, Surface) {
        let n = self.cube.n_paths();
        let nt = self.cube.grid().n_coarse() + 1;
        let ratio = self.cube.grid().ratio();
        let (mut gamma, mut cum) = (Surface::zeros(n, nt), Surface::zeros(n, nt));
        for p in 0..n {
            let view = self.cube.path(p);
            for i in 0..nt {
                let k = i * ratio;
                gamma.set(p, i, self.covering[c].iter().map(|&j| view.intensity(k, j)).sum());
                cum.set(p, i, self.covering[c].iter().map(|&j| view.cum_intensity(k, j)).sum());
            }
        }
        (gamma, cum)
    }
}
