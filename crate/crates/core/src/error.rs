use thiserror::Error;

/// Broad classification of failures, used by the command-line driver to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Precondition,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gram matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("gram matrix is degenerate (|det| = {0:e})")]
    Degenerate(f64),
    #[error("expected signature (3,{expected_p}), found ({positive},{negative},{null})")]
    WrongSignature {
        positive: usize,
        negative: usize,
        null: usize,
        expected_p: usize,
    },
    #[error("input vectors are linearly dependent")]
    Dependent,
    #[error("zero vector")]
    ZeroVector,
    #[error("no vector with the requested sign exists in the subspace")]
    NotFound,
    #[error("point is not in the required domain: {0}")]
    NotInDomain(String),
    #[error("chart is invalid at this point: {0}")]
    ChartInvalid(String),
    #[error("isotropic direction: {0}")]
    IsotropicDirection(String),
    #[error("ambiguous sign: {0}")]
    Ambiguous(String),
    #[error("infeasible chamber: {0}")]
    Infeasible(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Numeric(_)
            | Error::BudgetExceeded(_)
            | Error::Infeasible(_)
            | Error::Ambiguous(_) => ErrorKind::Numeric,
            _ => ErrorKind::Precondition,
        }
    }

    /// Short machine-readable tag.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::Degenerate(_) => "degenerate",
            Error::WrongSignature { .. } => "wrong_signature",
            Error::Dependent => "dependent",
            Error::ZeroVector => "zero_vector",
            Error::NotFound => "not_found",
            Error::NotInDomain(_) => "not_in_domain",
            Error::ChartInvalid(_) => "chart_invalid",
            Error::IsotropicDirection(_) => "isotropic_direction",
            Error::Ambiguous(_) => "ambiguous",
            Error::Infeasible(_) => "infeasible",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::Precondition(_) => "precondition",
            Error::Numeric(_) => "numeric",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
