//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by validation, solvers, and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor argument violates a type invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation was called outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An allocation with `pi >= 1`, which renders wealth nonpositive with
    /// positive probability once default can occur.
    #[error("inadmissible allocation: {0}")]
    Inadmissible(String),

    /// The underlying optimization problem has no solution (e.g. the HJB
    /// minimization with a nonpositive second derivative).
    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    /// A bracketed root search could not locate a root.
    #[error("root search failed: {0}")]
    RootSearch(String),

    /// The weight ODE integrator rejected a step.
    #[error("ODE integration failed: {0}")]
    OdeIntegration(String),

    /// Price data could not be ingested.
    #[error("data ingestion failed: {0}")]
    Ingestion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
