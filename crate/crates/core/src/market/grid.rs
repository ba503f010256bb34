use crate::error::{Result, XvaError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    pub horizon_years: f64,
    pub fine_steps_per_year: usize,
    pub coarse_steps_per_year: usize,
    pub paths: usize,
}

impl Default for SimulationGrid {
    fn default() -> Self {
        Self { horizon_years: 10.0, fine_steps_per_year: 32, coarse_steps_per_year: 16, paths: 50_000 }
    }
}

impl SimulationGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_years > 0.0) || !self.horizon_years.is_finite() {
            return Err(XvaError::InvalidGrid(format!("horizon {} must be positive", self.horizon_years)));
        }
        if self.fine_steps_per_year == 0 || self.coarse_steps_per_year == 0 || self.paths == 0 {
            return Err(XvaError::InvalidGrid("step counts and path count must be positive".into()));
        }
        if self.fine_steps_per_year % self.coarse_steps_per_year != 0 {
            return Err(XvaError::InvalidGrid(format!(
                "fine steps per year {} is not a multiple of coarse steps per year {}",
                self.fine_steps_per_year, self.coarse_steps_per_year
            )));
        }
        let n = self.horizon_years * self.coarse_steps_per_year as f64;
        if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
            return Err(XvaError::InvalidGrid(format!(
                "horizon {} is not a positive whole number of coarse steps",
                self.horizon_years
            )));
        }
        Ok(())
    }

    pub fn fine_dt(&self) -> f64 {
        1.0 / self.fine_steps_per_year as f64
    }

    pub fn coarse_dt(&self) -> f64 {
        1.0 / self.coarse_steps_per_year as f64
    }

    /// Fine steps per coarse step.
    pub fn ratio(&self) -> usize {
        self.fine_steps_per_year / self.coarse_steps_per_year
    }

    /// Number of coarse intervals; coarse times are `0..=n_coarse()`.
    pub fn n_coarse(&self) -> usize {
        (self.horizon_years * self.coarse_steps_per_year as f64).round() as usize
    }

    /// Number of fine intervals; fine times are `0..=n_fine()`.
    pub fn n_fine(&self) -> usize {
        self.n_coarse() * self.ratio()
    }

    pub fn fine_time(&self, k: usize) -> f64 {
        k as f64 / self.fine_steps_per_year as f64
    }

    pub fn coarse_time(&self, i: usize) -> f64 {
        i as f64 / self.coarse_steps_per_year as f64
    }

    pub fn fine_of_coarse(&self, i: usize) -> usize {
        i * self.ratio()
    }

    /// Whole number of fine steps closest to `years`.
    pub fn fine_steps_for(&self, years: f64) -> usize {
        (years * self.fine_steps_per_year as f64).round().max(0.0) as usize
    }

    /// Coarse index of a time on the coarse grid, if it lies on it.
    pub fn coarse_index_of(&self, t: f64) -> Option<usize> {
        let x = t * self.coarse_steps_per_year as f64;
        let i = x.round();
        ((x - i).abs() < 1e-9 && i >= 0.0 && i as usize <= self.n_coarse()).then_some(i as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_times_are_fine_times() {
        let g = SimulationGrid { horizon_years: 10.0, ..Default::default() };
        g.validate().unwrap();
        assert_eq!(g.n_coarse(), 160);
        assert_eq!(g.n_fine(), 320);
        for i in 0..=g.n_coarse() {
            assert_eq!(g.fine_time(g.fine_of_coarse(i)), g.coarse_time(i));
        }
        assert_eq!(g.fine_steps_for(2.0 / 52.0), 1);
    }

    #[test]
    fn rejects_bad_grids() {
        let g = SimulationGrid { fine_steps_per_year: 24, coarse_steps_per_year: 16, ..Default::default() };
        assert!(g.validate().is_err());
        let g = SimulationGrid { paths: 0, ..Default::default() };
        assert!(g.validate().is_err());
        let g = SimulationGrid { horizon_years: 1.01, ..Default::default() };
        assert!(g.validate().is_err());
    }
}
