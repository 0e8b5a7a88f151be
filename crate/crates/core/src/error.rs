use thiserror::Error;

/// Errors raised by the estimator pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "target fidelity {target} unreachable: fidelity saturates at {saturated} after {levels} rounds"
    )]
    Saturation {
        target: f64,
        saturated: f64,
        levels: usize,
    },

    #[error("absorbing chain has no absorption path from the start state")]
    NoAbsorptionPath,

    #[error("physical error rate {p} is at or above threshold {p_th}")]
    AboveThreshold { p: f64, p_th: f64 },

    #[error("distillation does not converge from input error {p_in} ({code})")]
    NonConverging { p_in: f64, code: &'static str },

    #[error("insufficient capacity: {capacity} logical qubits leave {factory} for the factory")]
    InsufficientCapacity { capacity: u64, factory: i64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }

    /// Attach a pipeline stage name.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
