use thiserror::Error;

/// Errors shared across the crate.
///
/// [`Error::code`] returns a stable short identifier used by the CLI and FFI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not-well-posed: reciprocal condition of I - D_zw is {rcond:e}")]
    NotWellPosed { rcond: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("schur-pivot-singular")]
    SchurPivotSingular,
    #[error("no-admissible-paths")]
    NoAdmissiblePaths,
    #[error("unbounded-spec: {0}")]
    UnboundedSpec(String),
    #[error("invalid dwell specification: {0}")]
    InvalidSpec(String),
    #[error("path is not admissible")]
    PathNotAdmissible,
    #[error("time {0} is outside the covered horizon")]
    OutsideHorizon(i64),
    #[error("reconstruction-failed: {0}")]
    ReconstructionFailed(String),
    #[error("reconstruction-singular: reciprocal condition {0:e}")]
    ReconstructionSingular(f64),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotWellPosed { .. } => "not-well-posed",
            Error::Dimension(_) => "dimension-mismatch",
            Error::SchurPivotSingular => "schur-pivot-singular",
            Error::NoAdmissiblePaths => "no-admissible-paths",
            Error::UnboundedSpec(_) => "unbounded-spec",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::PathNotAdmissible => "path-not-admissible",
            Error::OutsideHorizon(_) => "outside-horizon",
            Error::ReconstructionFailed(_) => "reconstruction-failed",
            Error::ReconstructionSingular(_) => "reconstruction-singular",
            Error::Infeasible(_) => "infeasible",
            Error::Solver(_) => "solver",
            Error::Invalid(_) => "invalid-input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
