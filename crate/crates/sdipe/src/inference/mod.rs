//! Bootstrap confidence intervals, the Monte Carlo study harness, the
//! delta-sensitivity sweep, and covariate-balance diagnostics.

mod balance;
mod bootstrap;
mod montecarlo;

pub use balance::{balance_report, BalanceRow, Confounder, Subgroup};
pub use bootstrap::{bootstrap_ci, EstimatorFn};
pub use montecarlo::{
    run_monte_carlo, run_monte_carlo_serial, sensitivity_sweep, McScenario, SimReportRow, SweepRow,
};
