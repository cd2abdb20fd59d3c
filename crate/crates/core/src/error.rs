use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {reason}")]
    Validation { row: usize, reason: String },

    #[error("invalid date: {0}")]
    InvalidDate(String),

    #[error("insufficient data: need at least {needed} complete records, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error(
        "insufficient records: need at least {needed} points with distinct years, found {found}"
    )]
    InsufficientRecords { needed: usize, found: usize },

    #[error("singular design: the year column has no spread")]
    SingularDesign,

    #[error("error rate {p} outside the valid domain: {reason}")]
    Domain { p: f64, reason: &'static str },

    #[error("code distance diverges at error rate {p} (threshold {p_th})")]
    Divergence { p: f64, p_th: f64 },

    #[error("bootstrap unstable: {degenerate} of {attempts} resamples were degenerate")]
    Instability { degenerate: usize, attempts: usize },

    #[error("covariance matrix is not positive semidefinite")]
    DegenerateCovariance,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing input for figure `{figure}`: {missing}")]
    MissingFigureInput {
        figure: String,
        missing: &'static str,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
