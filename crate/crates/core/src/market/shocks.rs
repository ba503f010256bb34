use crate::error::{Result, XvaError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shock {
    /// Counterparties killed by the shock.
    pub names: Vec<usize>,
    /// Index into the intensity catalog.
    pub intensity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShockStructure {
    pub n_names: usize,
    pub shocks: Vec<Shock>,
}

impl ShockStructure {
    /// One singleton per name (catalog index = name) followed by common
    /// shocks over consecutive blocks of five names (1-5, 6-10, ...).
    pub fn desk(n_names: usize) -> Self {
        let mut shocks: Vec<Shock> = (0..n_names).map(|c| Shock { names: vec![c], intensity: c }).collect();
        let mut next = n_names;
        for start in (0..n_names).step_by(5) {
            let names: Vec<usize> = (start..(start + 5).min(n_names)).collect();
            if names.len() >= 2 {
                shocks.push(Shock { names, intensity: next });
                next += 1;
            }
        }
        Self { n_names, shocks }
    }

    pub fn singletons(n_names: usize) -> Self {
        Self { n_names, shocks: (0..n_names).map(|c| Shock { names: vec![c], intensity: c }).collect() }
    }

    /// Size of the intensity catalog the structure refers to.
    pub fn catalog_len(&self) -> usize {
        self.shocks.iter().map(|s| s.intensity + 1).max().unwrap_or(0)
    }

    /// Catalog indices of the shocks covering `name`.
    pub fn covering(&self, name: usize) -> Vec<usize> {
        self.shocks.iter().filter(|s| s.names.contains(&name)).map(|s| s.intensity).collect()
    }

    pub fn validate(&self, n_intensities: usize) -> Result<()> {
        for (k, s) in self.shocks.iter().enumerate() {
            if s.intensity >= n_intensities {
                return Err(XvaError::Index(format!("shock {k} refers to intensity {} of {n_intensities}", s.intensity)));
            }
            if s.names.is_empty() || s.names.iter().any(|&c| c >= self.n_names) {
                return Err(XvaError::Index(format!("shock {k} has an invalid name set")));
            }
        }
        for c in 0..self.n_names {
            if !self.shocks.iter().any(|s| s.names == [c]) {
                return Err(XvaError::InvalidParams(format!("name {c} has no singleton shock")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_structure() {
        let s = ShockStructure::desk(10);
        assert_eq!(s.shocks.len(), 12);
        assert_eq!(s.catalog_len(), 12);
        assert_eq!(s.covering(3), vec![3, 10]);
        assert_eq!(s.covering(7), vec![7, 11]);
        s.validate(12).unwrap();
        assert!(s.validate(11).is_err());
        let s = ShockStructure::desk(6);
        assert_eq!(s.shocks.len(), 7);
        assert_eq!(s.covering(5), vec![5]);
    }

    #[test]
    fn missing_singleton_rejected() {
        let s = ShockStructure { n_names: 2, shocks: vec![Shock { names: vec![0, 1], intensity: 0 }] };
        assert!(s.validate(1).is_err());
    }
}
