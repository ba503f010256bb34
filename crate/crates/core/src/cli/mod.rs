//! Configuration-driven runs writing CSV artifacts and a manifest.
//!
//! A run reads one TOML file (see [`RunConfig`] for every key and its
//! default), executes one mode and writes plot-ready CSVs next to
//! `manifest.json`, which records the config text and its SHA-256, the
//! seeds, timings and the invariant-check summary. Identical config and seed
//! give byte-identical CSVs for any worker count.

mod config;
mod run;

pub use config::{
    CollateralConfig, EngineSection, GridConfig, HyperOverride, IncrementalConfig, MarketConfig, Mode, PortfolioConfig, RunConfig, ShockKind, StaticConfig, StaticSolver,
    ValidateConfig,
};
pub use run::{load_config, run, Check, RunOutcome};
