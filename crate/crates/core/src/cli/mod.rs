//! Experiment runner: TOML configuration, solves, sweeps, spectral
//! diagnostics, self tests and the flat-file formats they emit.

pub mod config;
pub mod io;
pub mod run;
pub mod selftest;

pub use config::{AccelConfig, ExperimentConfig, GridConfig, ModelConfig, SweepConfig};
pub use run::{diagnose, run_experiment, solve, solve_with, sweep, DiagnoseReport, Outcome, RunSummary, SweepTable};
pub use selftest::{selftest, Check};
