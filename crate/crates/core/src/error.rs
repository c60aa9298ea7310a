use thiserror::Error;

use crate::solver::FitReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("time {0} is not one of the dataset's distinct times")]
    UnknownTime(f64),

    #[error("domain error: {0}")]
    Domain(String),

    /// The comparison digraph splits into several strongly connected
    /// components; `components` lists them in topological order of the
    /// condensation (sources first).
    #[error("comparison graph is not strongly connected ({} components)", components.len())]
    NotStronglyConnected { components: Vec<Vec<usize>> },

    #[error("no convergence after {} iterations (gradient sup-norm {:.3e})", report.iterations, report.grad_inf_norm)]
    MaxIterExceeded { report: Box<FitReport> },

    #[error("count matrix carries no games")]
    EmptyData,

    #[error("every leave-one-out fold was disconnected ({folds} folds)")]
    AllFoldsFailed { folds: usize },

    #[error("team {0} has no smoothed games at this time")]
    IsolatedTeam(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in structured CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::UnknownTime(_) => "UnknownTime",
            Error::Domain(_) => "DomainError",
            Error::NotStronglyConnected { .. } => "NotStronglyConnected",
            Error::MaxIterExceeded { .. } => "MaxIterExceeded",
            Error::EmptyData => "EmptyData",
            Error::AllFoldsFailed { .. } => "AllFoldsFailed",
            Error::IsolatedTeam(_) => "IsolatedTeam",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::Factorization(_) => "FactorizationError",
            Error::Io(_) => "IoError",
            Error::Csv(_) => "CsvError",
            Error::Json(_) => "JsonError",
        }
    }
}
