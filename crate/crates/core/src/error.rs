use thiserror::Error;

/// Errors raised by the sensitivity model and the optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("lossless case requires fixed N_P")]
    LosslessRequiresFixedPulses,

    #[error("below resonant-mode cutoff: xi = {xi} < 1")]
    BelowResonantCutoff { xi: f64 },

    #[error("no atoms survive: detected atom number underflows (ln N_at = {log_atoms})")]
    NoAtomsSurvive { log_atoms: f64 },

    #[error("signal null: division by zero response (sinc argument {argument})")]
    SignalNull { argument: f64 },

    #[error("optimizer did not converge after {iterations} iterations (bracket width {width:e})")]
    NonConvergence { iterations: usize, width: f64 },

    #[error("baseline cannot confine any scheme at f = {frequency_hz} Hz")]
    NoFeasibleScheme { frequency_hz: f64 },

    #[error("invalid configuration field `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
