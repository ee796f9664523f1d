//! Scenario files, density synthesis, artifact export and the `mfg` CLI
//! plumbing around the solver in `mfg-core`.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod export;
pub mod run;
pub mod scenario;
pub mod setup;

pub use error::AppError;
pub use run::{run_problem, run_scenario, CostRow, Overrides, RunSummary, VariantRun};
pub use scenario::{Scenario, ScenarioFile, SnapshotFormat};
pub use setup::{build_problem, Problem};
