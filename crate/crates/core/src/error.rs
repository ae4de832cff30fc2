use gptsteer_lp::LpError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GptError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("system tag mismatch: {0}")]
    TagMismatch(String),
    #[error("{what} is not an interior point of the cone")]
    NotInterior { what: String },
    #[error("assemblage is not dichotomic (shape {0:?})")]
    NotDichotomic(Vec<usize>),
    #[error("map is not a symmetry of the state space: {0}")]
    NotASymmetry(String),
    #[error("marginal of the {0} system is not interior")]
    MarginalNotInterior(String),
    #[error("operation requires a polytopic state space")]
    NotPolytopic,
    #[error("guard exceeded: {what} = {value} > {limit} (raise via GPTSTEER_GUARDS)")]
    GuardExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl From<LpError> for GptError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::MalformedProblem(m) => GptError::Numerical(format!("internal LP malformed: {m}")),
            LpError::NumericalFailure(m) => GptError::Numerical(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, GptError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(GptError::InvalidInput(msg.into()))
}
