use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vertex {vertex} has non-positive weight {weight}")]
    NonPositiveWeight { vertex: usize, weight: f64 },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge ({i}, {j}) has no penalty")]
    MissingPenalty { i: usize, j: usize },
    #[error("penalty {lambda} on edge ({i}, {j}) is below min weight {min_weight}")]
    PenaltyTooSmall {
        i: usize,
        j: usize,
        lambda: f64,
        min_weight: f64,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("{n} variables exceeds the exhaustive limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("schedule parameter {0} outside [0, 1]")]
    ScheduleOutOfRange(f64),
    #[error("eigensolver did not converge at s = {s}: residual {residual:e} after {iterations} iterations")]
    NotConverged {
        s: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("driver ground state is not the uniform superposition: {0}")]
    NonUniformGroundState(String),
    #[error("anti-crossing window cannot be formed around s* = {0}")]
    WindowUnavailable(f64),
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("reduction verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
