use thiserror::Error;

/// Errors raised across the modeling, simulation and identification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("polynomial is not monic: {0}")]
    NotMonic(String),

    #[error("improper inverse: constant numerator coefficient is singular")]
    ImproperInverse,

    #[error("ill-posed feedback loop: {0}")]
    IllPosedLoop(String),

    #[error("degenerate denominator: determinant vanishes identically")]
    DegenerateDenominator,

    #[error("unstable system: {0}")]
    Unstable(String),

    #[error("non-minimum-phase polynomial: {0}")]
    NonMinimumPhase(String),

    #[error("transfer matrix is not normalized at infinity: {0}")]
    NotNormalized(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("rank-deficient regression (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Prefix the message with the stage that failed.
    pub fn context(self, stage: &str) -> Error {
        match self {
            Error::Shape(m) => Error::Shape(format!("{stage}: {m}")),
            Error::NotMonic(m) => Error::NotMonic(format!("{stage}: {m}")),
            Error::IllPosedLoop(m) => Error::IllPosedLoop(format!("{stage}: {m}")),
            Error::Unstable(m) => Error::Unstable(format!("{stage}: {m}")),
            Error::NonMinimumPhase(m) => Error::NonMinimumPhase(format!("{stage}: {m}")),
            Error::NotNormalized(m) => Error::NotNormalized(format!("{stage}: {m}")),
            Error::Singular(m) => Error::Singular(format!("{stage}: {m}")),
            Error::InsufficientData(m) => Error::InsufficientData(format!("{stage}: {m}")),
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{stage}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{stage}: {m}")),
            Error::Config(m) => Error::Config(format!("{stage}: {m}")),
            Error::ImproperInverse | Error::DegenerateDenominator | Error::RankDeficient { .. } => {
                Error::Numerical(format!("{stage}: {self}"))
            }
            other => other,
        }
    }

    /// Process exit code: 2 for configuration and I/O problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
