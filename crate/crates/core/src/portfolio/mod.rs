//! Swap portfolios, pathwise pricing and the mark-to-market cube.

mod collateral;
mod mtm;
mod pricing;
mod swap;

pub use collateral::{CollateralKind, CollateralSpec};
pub use mtm::{build_mtm_cube, compute_im_targets, Liquidation, MtMCube};
pub(crate) use mtm::value_path;
pub use pricing::{par_rate, price_swap, PortfolioPricer};
pub use swap::{generate_portfolio, read_portfolio_csv, write_portfolio_csv, Direction, PortfolioSpec, Swap};
