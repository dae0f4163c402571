use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("tape does not belong to this layer state (stale or mismatched cache)")]
    StaleTape,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("missing required property `{0}`")]
    MissingProperty(String),

    #[error("weight file: {0}")]
    WeightFormat(String),

    #[error(
        "sampling budget of {attempts} attempts exhausted: {class} class has {got}/{wanted} \
         points (tau_in={tau_in}, tau_out={tau_out})"
    )]
    SamplingBudget {
        class: &'static str,
        got: usize,
        wanted: usize,
        attempts: usize,
        tau_in: f64,
        tau_out: f64,
    },

    #[error("non-finite loss at epoch {epoch}, batch {batch}; parameter norms per layer: {param_norms:?}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        param_norms: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
