//! Experiment runner: single runs, replications, regret-rate fits,
//! diagnostics and the CSV contract.

pub mod aggregate;
pub mod config;
pub mod diagnostics;
pub mod io;
pub mod regret;
pub mod run;

pub use aggregate::{quantile, replicate, AggregateRow, Band, ReplicateOutput};
pub use config::{ExperimentConfig, Overrides, TraceGranularity};
pub use diagnostics::{
    deviation_diagnostic, optimal_set, suboptimal_selection_diagnostic, Comparator, DeviationReference, DeviationRow,
    DeviationTable, ReferenceKind, SelectionRow,
};
pub use regret::{dyadic_grid, fit_power_law, fit_rate_exponent, pseudo_regret_curve, RateFit, BURN_IN};
pub use run::{run_master, run_one, run_standalone, MasterRun, PolicyRun, RunOutput, TraceRow};
