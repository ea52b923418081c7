use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible design: {0}")]
    Infeasible(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-binary membership value {value:?} at row {row}, column {column}")]
    NonBinary {
        row: String,
        column: String,
        value: String,
    },
    #[error("column {0} is constant and cannot be scaled")]
    ConstantColumn(String),
    #[error("coordinate descent did not converge at lambda {lambda} after {sweeps} sweeps")]
    NoConvergence { lambda: f64, sweeps: usize },
    #[error("rank-deficient predictor submatrix for support {0:?}")]
    RankDeficient(Vec<usize>),
    #[error("support of size {size} exceeds the limit n - 2 = {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::RankDeficient(_) | Error::SupportTooLarge { .. }
        )
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Infeasible(_) => "infeasible",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonBinary { .. } => "non_binary",
            Error::ConstantColumn(_) => "constant_column",
            Error::NoConvergence { .. } => "no_convergence",
            Error::RankDeficient(_) => "rank_deficient",
            Error::SupportTooLarge { .. } => "support_too_large",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidInput(_) => "invalid_input",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
