use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..=16")]
    Size(usize),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    Index { index: usize, n_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid observable: {0}")]
    Observable(String),

    #[error("binding error: {0}")]
    Binding(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("slot error: {0}")]
    Slot(String),

    #[error("unsupported gate for parameter shift: {0}")]
    UnsupportedGate(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("state error: {0}")]
    State(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch} (samples {samples:?})")]
    NonFinite {
        epoch: usize,
        batch: usize,
        samples: Vec<usize>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable short identifier, used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Size(_) => "size",
            Error::Index { .. } => "index",
            Error::InvalidGate(_) => "gate",
            Error::Observable(_) => "observable",
            Error::Binding(_) => "binding",
            Error::Config(_) => "config",
            Error::Slot(_) => "slot",
            Error::UnsupportedGate(_) => "unsupported_gate",
            Error::Shape(_) => "shape",
            Error::Unsupported(_) => "unsupported",
            Error::State(_) => "state",
            Error::Format { .. } => "format",
            Error::Data(_) => "data",
            Error::NonFinite { .. } => "non_finite",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
