//! Harness around the gain-optimization library: JSON problem ingestion,
//! deterministic random ensembles, landscape grids and CSV/JSON artifact
//! emission. The `gainopt` binary is a thin argument layer over this crate.

pub mod check;
pub mod config;
pub mod runner;
pub mod sampling;

pub use config::{ConfigError, EnsembleSpec, Problem, ProblemConfig};
pub use runner::{
    exit_code, fmt17, run_ensemble, run_landscape, run_solve, trace_csv, write_ensemble,
    write_landscape, EnsembleOutcome, GridAxis, LandscapeCell, MemberResult, MemberRun,
};
