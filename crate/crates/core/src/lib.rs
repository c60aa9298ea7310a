//! Time-varying Bradley-Terry rankings from timestamped pairwise comparisons.
//!
//! Win counts are kernel-smoothed over time and a Bradley-Terry model is
//! fitted at each evaluation time. The crate also provides connectivity
//! checks that decide whether a fit exists, leave-one-out bandwidth
//! selection, error-bound diagnostics, and synthetic data generators.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod kernel;
pub mod metrics;
pub mod parallel;
pub mod simulate;
pub mod solver;
pub mod tuning;

pub use data::{load_csv, read_csv, CountMatrix, Dataset, MatchRecord};
pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec};
pub use solver::{fit, fit_trajectory, FitOptions, FitReport, Ranking, ScoreVector};
