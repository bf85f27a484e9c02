use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidGrid(&'static str),
    #[error("non-finite value: {0}")]
    NonFinite(&'static str),
    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("missing term: {0}")]
    MissingTerm(&'static str),
    #[error("missing data: {0}")]
    MissingData(&'static str),
    #[error("non-finite loss {term} at step {step}")]
    NonFiniteLoss { term: &'static str, step: u64 },
    #[error("unknown ablation preset {0:?}")]
    UnknownPreset(String),
    #[error("input not dense: {0} unmasked cells")]
    NotDense(usize),
}
