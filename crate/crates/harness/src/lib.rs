//! Configuration, seeded trial ensembles and report emission for the
//! first-passage percolation diagnostics in `fpp-core`.

pub mod audit;
pub mod config;
pub mod error;
pub mod run;
pub mod summary;
pub mod svg;

pub use config::{parse_config, AuditKind, ExperimentConfig};
pub use error::HarnessError;
pub use run::{run_experiment, RunOptions, RunOutcome, TrialRecord};
