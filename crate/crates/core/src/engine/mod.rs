//! Pathwise XVA engine.
//!
//! Every XVA metric is a conditional expectation (or a conditional ES) of
//! a pathwise label, learned by regressing the label on the simulated state
//! at each coarse time. Collateral comes first (received and posted IM and
//! the CSA gap distribution), then CVA and MVA per netting set, then the
//! portfolio-level FVA, EC and KVA. FVA, EC and KVA depend on each other
//! through the bank's loss process, which is resolved by a short Picard
//! iteration.

mod collateral;
mod config;
mod cva;
mod features;
mod fva;
mod incremental;
mod kva;
mod mva;
mod picard;
mod profiles;
mod regress;
mod surface;

pub use collateral::CollateralSurfaces;
pub use config::{EngineConfig, Hyper};
pub use cva::{hazard_labels, nocsa_cva_labels, CreditLoss, CvaSurfaces};
pub use mva::MvaSurfaces;
pub use features::FeatureBuilder;
pub use incremental::{incremental_from_states, incremental_xva, IncrementalReport};
pub use picard::{run_engine, Diagnostics, NaiveVariants, PicardSnapshot, RunFingerprint, XvaRunState};
pub use profiles::{xva_profiles, XvaProfiles};
pub use surface::Surface;

use crate::error::{Result, XvaError};
use crate::market::{RiskFactorCube, ShockStructure};
use crate::portfolio::{CollateralSpec, MtMCube};

/// Everything a run is computed from.
#[derive(Clone, Copy)]
pub struct EngineInputs<'a> {
    pub cube: &'a RiskFactorCube,
    pub shocks: &'a ShockStructure,
    pub mtm: &'a MtMCube,
    pub collateral: &'a CollateralSpec,
}

impl EngineInputs<'_> {
    pub fn validate(&self) -> Result<()> {
        let n_sets = self.mtm.n_sets();
        if self.mtm.n_paths() != self.cube.n_paths() {
            return Err(XvaError::DimensionMismatch { expected: self.cube.n_paths(), got: self.mtm.n_paths() });
        }
        if self.mtm.n_times() != self.cube.grid().n_coarse() + 1 {
            return Err(XvaError::DimensionMismatch { expected: self.cube.grid().n_coarse() + 1, got: self.mtm.n_times() });
        }
        if self.shocks.n_names != n_sets {
            return Err(XvaError::DimensionMismatch { expected: n_sets, got: self.shocks.n_names });
        }
        if self.cube.params().counterparty_recovery.len() < n_sets {
            return Err(XvaError::DimensionMismatch { expected: n_sets, got: self.cube.params().counterparty_recovery.len() });
        }
        self.shocks.validate(self.cube.layout().n_int)?;
        self.collateral.validate(n_sets)
    }
}

/// Shared per-run data.
pub(crate) struct Ctx<'a> {
    pub inp: EngineInputs<'a>,
    pub cfg: &'a EngineConfig,
    pub feats: FeatureBuilder<'a>,
    /// Per netting set: counterparty intensity and its integral.
    pub gamma: Vec<Surface>,
    pub cum: Vec<Surface>,
    /// Per netting set and time: paths where the counterparty is alive.
    pub alive: Vec<Vec<Vec<usize>>>,
    pub disc: Surface,
    pub n: usize,
    pub nt: usize,
    pub dt: f64,
}

impl<'a> Ctx<'a> {
    pub fn new(inp: EngineInputs<'a>, cfg: &'a EngineConfig) -> Result<Self> {
        inp.validate()?;
        cfg.validate()?;
        let feats = FeatureBuilder::new(inp.cube, inp.shocks);
        let n = inp.mtm.n_paths();
        let nt = inp.mtm.n_times();
        let (gamma, cum) = (0..inp.mtm.n_sets()).map(|c| feats.hazards(c)).unzip();
        let alive = (0..inp.mtm.n_sets())
            .map(|c| (0..nt).map(|i| (0..n).filter(|&p| inp.mtm.alive(p, i, c)).collect()).collect())
            .collect();
        let mut disc = Surface::zeros(n, nt);
        for p in 0..n {
            for i in 0..nt {
                disc.set(p, i, inp.mtm.discount(p, i));
            }
        }
        Ok(Ctx { inp, cfg, feats, gamma, cum, alive, disc, n, nt, dt: inp.cube.grid().coarse_dt() })
    }

    pub fn n_sets(&self) -> usize {
        self.inp.mtm.n_sets()
    }

    pub fn all_paths(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    pub fn alive_mask(&self, p: usize, i: usize, c: usize) -> f64 {
        if self.inp.mtm.alive(p, i, c) {
            1.0
        } else {
            0.0
        }
    }
}
