use super::{RiskFactorCube, ShockStructure};
use crate::error::Result;
use crate::rng::{keyed, Domain};
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

/// Counterparty default times per path.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultScenario {
    n_paths: usize,
    n_names: usize,
    /// Row-major (path, name); `f64::INFINITY` when no default before the horizon.
    tau: Vec<f64>,
    fine_dt: f64,
    /// Margin period of risk in whole fine steps.
    pub mpor_steps: usize,
}

impl DefaultScenario {
    /// Scenario without any default.
    pub fn none(n_paths: usize, n_names: usize, fine_dt: f64, mpor_steps: usize) -> Self {
        Self { n_paths, n_names, tau: vec![f64::INFINITY; n_paths * n_names], fine_dt, mpor_steps }
    }

    pub fn from_times(n_names: usize, tau: Vec<f64>, fine_dt: f64, mpor_steps: usize) -> Self {
        assert_eq!(tau.len() % n_names.max(1), 0);
        Self { n_paths: tau.len() / n_names.max(1), n_names, tau, fine_dt, mpor_steps }
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }
    pub fn n_names(&self) -> usize {
        self.n_names
    }
    pub fn tau(&self, p: usize, c: usize) -> f64 {
        self.tau[p * self.n_names + c]
    }
    pub fn mpor_years(&self) -> f64 {
        self.mpor_steps as f64 * self.fine_dt
    }
    pub fn liquidation_time(&self, p: usize, c: usize) -> f64 {
        self.tau(p, c) + self.mpor_years()
    }

    /// First fine step at or after the default time.
    pub fn default_step(&self, p: usize, c: usize) -> Option<usize> {
        let t = self.tau(p, c);
        t.is_finite().then(|| ((t / self.fine_dt - 1e-9).ceil() as usize).max(1))
    }

    /// Fine step at which the netting set is liquidated.
    pub fn liquidation_step(&self, p: usize, c: usize) -> Option<usize> {
        self.default_step(p, c).map(|k| k + self.mpor_steps)
    }

    /// Survival indicator `1{t_k < tau}` at fine step `k`.
    pub fn alive(&self, p: usize, c: usize, k: usize) -> bool {
        self.default_step(p, c).is_none_or(|d| k < d)
    }

    /// True while the netting set still contributes (`t_k < tau + delta`).
    pub fn before_liquidation(&self, p: usize, c: usize, k: usize) -> bool {
        self.liquidation_step(p, c).is_none_or(|l| k < l)
    }
}

/// Common-shock default times: each shock fires when its integrated intensity
/// first exceeds an independent unit exponential; a name defaults at the
/// first firing among the shocks covering it.
pub fn simulate_defaults(cube: &RiskFactorCube, shocks: &ShockStructure, seed: u64) -> Result<DefaultScenario> {
    shocks.validate(cube.layout().n_int)?;
    let grid = cube.grid();
    let dt = grid.fine_dt();
    let n_fine = grid.n_fine();
    let n = shocks.n_names;
    let mut tau = vec![f64::INFINITY; cube.n_paths() * n];
    tau.par_chunks_mut(n.max(1)).enumerate().for_each(|(p, row)| {
        if n == 0 {
            return;
        }
        let view = cube.path(p);
        let mut rng = keyed(seed, Domain::Defaults, cube.path_id(p), 0);
        for s in &shocks.shocks {
            let e: f64 = Exp1.sample(&mut rng);
            let fire = (0..n_fine).find_map(|k| {
                let (lo, hi) = (view.cum_intensity(k, s.intensity), view.cum_intensity(k + 1, s.intensity));
                (hi >= e && hi > lo).then(|| grid.fine_time(k) + (e - lo) / (hi - lo) * dt)
            });
            if let Some(t) = fire {
                for &c in &s.names {
                    row[c] = row[c].min(t);
                }
            }
        }
    });
    Ok(DefaultScenario {
        n_paths: cube.n_paths(),
        n_names: n,
        tau,
        fine_dt: dt,
        mpor_steps: grid.fine_steps_for(cube.params().mpor_years),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{simulate_risk_factors, ModelParams, Shock, SimulationGrid};

    #[test]
    fn zero_intensity_means_no_default() {
        let g = SimulationGrid { horizon_years: 1.0, fine_steps_per_year: 8, coarse_steps_per_year: 4, paths: 50 };
        let mut p = ModelParams::desk(1, 2, 3);
        for c in &mut p.intensities {
            *c = crate::market::CirParams { kappa: 0.0, theta: 0.0, sigma: 0.0, lambda0: 0.0 };
        }
        let cube = simulate_risk_factors(&g, &p, 3).unwrap();
        let d = simulate_defaults(&cube, &ShockStructure::desk(2), 4).unwrap();
        assert!((0..50).all(|i| d.tau(i, 0).is_infinite() && d.tau(i, 1).is_infinite()));
    }

    #[test]
    fn common_shock_defaults_coincide() {
        let g = SimulationGrid { horizon_years: 5.0, fine_steps_per_year: 8, coarse_steps_per_year: 4, paths: 400 };
        let mut p = ModelParams::desk(1, 2, 3);
        p.intensities[0].lambda0 = 0.0;
        p.intensities[0].theta = 0.0;
        p.intensities[1].lambda0 = 0.0;
        p.intensities[1].theta = 0.0;
        p.intensities[2] = crate::market::CirParams { kappa: 0.0, theta: 0.3, sigma: 0.0, lambda0: 0.3 };
        let cube = simulate_risk_factors(&g, &p, 3).unwrap();
        let s = ShockStructure {
            n_names: 2,
            shocks: vec![
                Shock { names: vec![0], intensity: 0 },
                Shock { names: vec![1], intensity: 1 },
                Shock { names: vec![0, 1], intensity: 2 },
            ],
        };
        let d = simulate_defaults(&cube, &s, 4).unwrap();
        let mut fired = 0;
        for i in 0..400 {
            assert_eq!(d.tau(i, 0).to_bits(), d.tau(i, 1).to_bits());
            if d.tau(i, 0).is_finite() {
                fired += 1;
                assert!(d.tau(i, 0) > 0.0);
            }
        }
        assert!(fired > 200);
    }

    #[test]
    fn step_mapping() {
        let d = DefaultScenario::from_times(1, vec![0.3, 0.25, f64::INFINITY, 1e-6], 0.125, 1);
        assert_eq!(d.default_step(0, 0), Some(3));
        assert_eq!(d.default_step(1, 0), Some(2));
        assert_eq!(d.default_step(2, 0), None);
        assert_eq!(d.default_step(3, 0), Some(1));
        assert_eq!(d.liquidation_step(0, 0), Some(4));
        assert!(d.alive(0, 0, 2) && !d.alive(0, 0, 3));
        assert!(d.before_liquidation(0, 0, 3) && !d.before_liquidation(0, 0, 4));
    }
}
