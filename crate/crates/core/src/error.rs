use crate::model::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("empty window [{start}, {end}]")]
    EmptyWindow { start: String, end: String },

    #[error("negative profile value after subtraction")]
    NegativeProfile,

    #[error("negative volume {0}")]
    NegativeVolume(String),

    #[error("demand {demand} exceeds total weight {total}")]
    DemandInfeasible { demand: String, total: u64 },

    #[error("negative budget {0}")]
    NegativeBudget(String),

    #[error("wrong solver: {0}")]
    WrongSolver(String),

    #[error("instance exceeds solver limits: {0}")]
    TooLarge(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(ValidationReport),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{0}")]
    Format(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
