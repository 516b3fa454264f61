//! Experiment orchestration for diversity-regularized Q-ensembles: config
//! files, seed matrices, CSV and SVG artifacts, and the analysis recipes.

pub mod config;
pub mod error;
pub mod matrix;
pub mod output;
pub mod plot;
pub mod sine_demo;
pub mod tables;
pub mod timeline;

pub use config::{ExperimentConfig, ExperimentSection};
pub use error::{HarnessError, Result};
pub use matrix::{plan_cells, run_cell, run_matrix, Cell, RunEntry, RunManifest, RunOutcome, RunStatus, RunSummary};
