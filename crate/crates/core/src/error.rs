use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix dimension {dim} exceeds the dense limit {limit}; use the symmetry-sector route")]
    ResourceLimit { dim: usize, limit: usize },

    #[error("operator does not commute with {0}")]
    SymmetryViolation(&'static str),

    #[error("ground-state resolution aborted: {0}")]
    ResolutionAbort(String),

    #[error("no successful grid points")]
    EmptyResult,

    #[error("eigensolver failed to converge")]
    Eigensolver,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl Error {
    /// Process exit status for command-line front ends.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::SymmetryViolation(_) | Error::ResolutionAbort(_) | Error::EmptyResult | Error::Eigensolver => 3,
            Error::ResourceLimit { .. } => 4,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
