use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid election: {0}")]
    InvalidElection(String),

    #[error("malformed solution: {0}")]
    MalformedSolution(String),

    #[error("solution is infeasible: a delegation walk never reaches a casting voter")]
    InfeasibleSolution,

    #[error("maximum out-degree is {max_degree}, this routine needs at most 1")]
    DegreeUnsupported { max_degree: usize },

    #[error("edge {from}->{to} would give voter {from} a second outgoing edge")]
    DegreeViolation { from: String, to: String },

    #[error("voter {0} does not cast in every cost-minimizing solution")]
    NotGuaranteedCasting(String),

    #[error("instance too large: {what} exceeds {limit} (pass --force-large to override)")]
    InstanceTooLarge { what: String, limit: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported control mode: {0}")]
    ModeUnsupported(String),

    #[error("malformed formula: {0}")]
    MalformedFormula(String),

    #[error("graph is not 3-regular: vertex {vertex} has degree {degree}")]
    NotCubic { vertex: usize, degree: usize },

    #[error("clique size {0} is degenerate, need k >= 2")]
    DegenerateCliqueSize(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
