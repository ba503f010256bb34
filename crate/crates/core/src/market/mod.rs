//! Risk-factor and default-time simulation.

mod cube;
mod defaults;
mod grid;
pub mod hw;
mod params;
mod shocks;

pub use cube::{simulate_path_from, simulate_risk_factors, FactorLayout, PathView, RiskFactorCube, SimContext};
pub use defaults::{simulate_defaults, DefaultScenario};
pub use grid::SimulationGrid;
pub use params::{BankParams, CirParams, FxParams, HullWhiteParams, ModelParams};
pub use shocks::{Shock, ShockStructure};
