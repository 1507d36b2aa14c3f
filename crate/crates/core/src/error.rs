use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("sample too small: need at least {needed}, found {found}")]
    SampleTooSmall { needed: usize, found: usize },

    #[error("test statistic undefined: both samples have zero variance")]
    ZeroVariance,

    #[error("sample has zero spread")]
    ZeroSpread,

    #[error("insufficient groups: {0}")]
    InsufficientGroups(String),

    #[error("summaries were scored against different criteria ({0} vs {1})")]
    CriterionMismatch(f64, f64),

    #[error(
        "reallocation does not conserve counts: source total {source_total}, destination total {destination_total}"
    )]
    CountNotConserved { source_total: u64, destination_total: u64 },

    #[error("unknown aid `{0}`")]
    UnknownAid(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("line {line}, column `{column}`: {reason}")]
    Ingest { line: u64, column: String, reason: String },

    #[error("corrupt bundled data: {0}")]
    CorruptBundle(String),

    #[error("condition `{condition}` is missing per-aid rows: {missing}")]
    MissingAidRows { condition: String, missing: String },

    #[error("unknown experiment tag `{0}`")]
    UnknownExperiment(String),

    #[error(
        "solver did not converge after {iterations} iterations (KKT residual {residual:e}, best objective {objective})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        objective: f64,
        weights: Vec<f64>,
    },

    #[error("covariance matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
