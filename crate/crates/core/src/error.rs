use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("{0}")]
    InvalidState(String),

    #[error("{0}")]
    InvalidGate(String),

    #[error("{0}")]
    InvalidObservable(String),

    #[error("{0}")]
    InvalidCircuit(String),

    #[error("parameter slot {slot} out of range for {num_params} parameters")]
    SlotOutOfRange { slot: usize, num_params: usize },

    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamLengthMismatch { got: usize, expected: usize },

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("{0}")]
    InvalidGrouping(String),

    #[error("{0}")]
    InvalidConfig(String),

    #[error("{0}")]
    InvalidDataset(String),

    #[error("estimator failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    SpecParse(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
