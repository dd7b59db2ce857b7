use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A transfer rate was requested for a (location, site) pair outside the matrix.
    #[error("no transfer rate for location #{location} to site #{site}")]
    MissingRate { location: usize, site: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The plan breaks coverage or disjointness, or does not fit the scenario.
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("beta must lie in [0, 1], got {0}")]
    InvalidBeta(f64),

    #[error("block budget must be at least 1, got {0}")]
    InvalidBudget(u64),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Exhaustive search would need to visit more assignments than allowed.
    #[error("oracle enumeration needs {needed} assignments, above the cap of {cap}")]
    CapExceeded { needed: String, cap: u64 },
}
