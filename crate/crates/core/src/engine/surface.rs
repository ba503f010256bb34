use crate::stats::{band, Band};

/// Pathwise values on the coarse grid, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    n_paths: usize,
    n_times: usize,
    data: Vec<f64>,
}

impl Surface {
    pub fn zeros(n_paths: usize, n_times: usize) -> Self {
        Surface { n_paths, n_times, data: vec![0.0; n_paths * n_times] }
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn get(&self, p: usize, i: usize) -> f64 {
        self.data[i * self.n_paths + p]
    }

    pub fn set(&mut self, p: usize, i: usize, v: f64) {
        self.data[i * self.n_paths + p] = v;
    }

    /// All paths at coarse time `i`.
    pub fn at(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_paths..(i + 1) * self.n_paths]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_paths..(i + 1) * self.n_paths]
    }

    pub fn band(&self, i: usize) -> Band {
        band(self.at(i))
    }

    pub fn mean_profile(&self) -> Vec<f64> {
        (0..self.n_times).map(|i| crate::stats::mean(self.at(i))).collect()
    }

    pub fn stdev_profile(&self) -> Vec<f64> {
        (0..self.n_times).map(|i| crate::stats::stdev(self.at(i))).collect()
    }

    pub fn profile(&self) -> Vec<Band> {
        (0..self.n_times).map(|i| self.band(i)).collect()
    }

    pub fn add_assign(&mut self, other: &Surface) {
        assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Surface {
        Surface { n_paths: self.n_paths, n_times: self.n_times, data: self.data.iter().map(|a| f(*a)).collect() }
    }

    pub fn map2(&self, other: &Surface, f: impl Fn(f64, f64) -> f64) -> Surface {
        assert_eq!(self.data.len(), other.data.len());
        Surface { n_paths: self.n_paths, n_times: self.n_times, data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}
