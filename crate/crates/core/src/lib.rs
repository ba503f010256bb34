//! Pathwise XVA engine for bilateral interest-rate swap portfolios.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`market`]: Hull-White rates, lognormal FX, CIR default intensities and
//!   common-shock default times on a fine simulation grid.
//! - [`portfolio`]: swap generation, closed-form pathwise swap pricing and the
//!   per-netting-set mark-to-market cube.
//! - [`regressor`]: small tanh networks trained for conditional means and for
//!   joint conditional VaR/ES.
//! - [`static_xva`]: the one-period model with explicit XVA formulas.
//! - [`engine`]: the dynamic engine (IM, CVA, MVA, FVA, KVA, EC and the
//!   Picard loop on the loss process) plus incremental pricing.
//! - [`nmc`]: nested Monte Carlo CVA used to validate the learned CVA.
//! - [`cli`]: configuration, run modes and CSV artifacts.

pub mod cli;
pub mod engine;
pub mod error;
pub mod market;
pub mod nmc;
pub mod portfolio;
pub mod regressor;
pub mod rng;
pub mod static_xva;
pub mod stats;

pub use error::{Result, XvaError};
