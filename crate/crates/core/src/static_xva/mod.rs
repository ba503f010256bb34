//! One-period XVA model.
//!
//! A single deal pays the random amount `P` to the bank at time 1. The bank
//! and its client default with zero recovery; all valuations are taken under
//! the bank-survival measure `Q'`, i.e. the sample law conditioned on `J = 1`.

mod balance;
mod indifference;
mod scenario;
mod solve;

pub use balance::{balance_sheet_check, BalanceResiduals};
pub use indifference::{indifference_risk_margin, RiskMargin};
pub use scenario::{StaticSample, StaticScenario};
pub use solve::{solve_static_baseline, solve_static_refined, Margin, SampleFlows, StaticParams, StaticXvaReport, VariationMargin};
