use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while configuring, bounding, simulating or
/// auditing a scenario.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter block violates one of its invariants. `field` is the
    /// dotted config path of the offending value.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// Parameters are well-formed but the reaching condition does not hold,
    /// so no finite bound exists.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("simulation diverged at step {step} (t = {time} s): {reason}")]
    Divergence {
        step: usize,
        time: f64,
        reason: String,
    },

    /// A non-finite value appeared in a model evaluation; the simulation
    /// engine re-reports it as a [`Error::Divergence`] with the step index.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("audit mismatch: {0}")]
    Audit(String),

    #[error("failed to parse {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Infeasible(_) | Error::Parse { .. } => 2,
            Error::Divergence { .. } | Error::NonFinite(_) => 3,
            Error::Audit(_) | Error::Io { .. } => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
