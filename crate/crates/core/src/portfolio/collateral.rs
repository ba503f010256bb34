use crate::error::{Result, XvaError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollateralKind {
    NoCsa,
    /// Variation margin equal to the clean value plus gap-risk initial margin.
    Csa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollateralSpec {
    /// One entry per netting set.
    pub kinds: Vec<CollateralKind>,
    pub alpha_pim: f64,
    pub alpha_rim: f64,
}

impl CollateralSpec {
    pub fn no_csa(n_sets: usize) -> Self {
        Self { kinds: vec![CollateralKind::NoCsa; n_sets], alpha_pim: 0.99, alpha_rim: 0.75 }
    }

    pub fn with_csa(n_sets: usize, csa: &[usize]) -> Self {
        let mut s = Self::no_csa(n_sets);
        for &c in csa {
            s.kinds[c] = CollateralKind::Csa;
        }
        s
    }

    pub fn is_csa(&self, c: usize) -> bool {
        self.kinds[c] == CollateralKind::Csa
    }

    pub fn validate(&self, n_sets: usize) -> Result<()> {
        if self.kinds.len() != n_sets {
            return Err(XvaError::DimensionMismatch { expected: n_sets, got: self.kinds.len() });
        }
        if !(0.0 < self.alpha_rim && self.alpha_rim <= self.alpha_pim && self.alpha_pim < 1.0) {
            return Err(XvaError::InvalidParams(format!(
                "need 0 < alpha_rim ({}) <= alpha_pim ({}) < 1",
                self.alpha_rim, self.alpha_pim
            )));
        }
        Ok(())
    }
}
