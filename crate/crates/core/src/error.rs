use thiserror::Error;

/// Errors produced by the optics engine and the protocols built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("reflectivity {0} is outside [0, 1]")]
    InvalidReflectivity(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("mode {mode} is out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("mode {0} is listed more than once")]
    DuplicateMode(usize),

    #[error("permutation map is not a bijection on {0} modes")]
    InvalidPermutation(usize),

    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("malformed mesh program: {0}")]
    MalformedMesh(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{name} = {value} is outside its domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("outcome has zero probability")]
    ZeroProbability,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::OutOfDomain {
        name,
        value,
        domain,
    }
}
