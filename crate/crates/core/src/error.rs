use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Where a parameter or diagnostic points inside a network document.
#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

/// Which part of an epoch a training error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Batch(usize),
    Evaluation,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Batch(b) => write!(f, "batch {b}"),
            Phase::Evaluation => f.write_str("loss evaluation"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The log branch was asked to evaluate a non-positive argument.
    #[error("domain error: log-branch argument {argument} is not positive (alpha = {alpha}, x = {x})")]
    Domain { alpha: f64, x: f64, argument: f64 },

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("result out of floating-point range: {0}")]
    Range(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("invalid network document: {0}")]
    InvalidDocument(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("output {index} has imaginary part {im}, expected a real value")]
    ComplexOutput { index: usize, im: f64 },

    #[error("epoch {epoch}, {phase}, sample {sample}: {source}")]
    Training {
        epoch: usize,
        phase: Phase,
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by evaluating outside a numeric domain or range.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Domain { .. }
            | Error::NonFiniteInput(_)
            | Error::Range(_)
            | Error::ComplexOutput { .. }
            | Error::Diverged { .. } => true,
            Error::Training { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
