//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The design matrix is (numerically) rank deficient.
    #[error("singular design matrix: column {column} is linearly dependent on earlier columns")]
    SingularDesign { column: usize },

    /// Logistic labels contain a single class, so the MLE does not exist.
    #[error("separation: labels contain a single class")]
    Separation,

    /// Not enough rows to fit the requested model.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Root-finding for a calibration intercept failed.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// A named column is missing from the input file.
    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    /// The file parsed but violates the dataset schema.
    #[error("schema error at row {row}, column '{column}': {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    /// A cell could not be parsed as a number.
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Dataset construction violated an invariant.
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    /// An index was out of range for the dataset.
    #[error("row index {index} out of range for dataset of {len} rows")]
    Bounds { index: usize, len: usize },

    /// A stratum (or the whole sample) contains only one treatment arm.
    #[error("single treatment arm in {stratum} stratum")]
    SingleArm { stratum: String },

    /// More than the tolerated fraction of bootstrap resamples failed.
    #[error("unstable bootstrap: {failed} of {total} resamples failed")]
    UnstableBootstrap { failed: usize, total: usize },

    /// More than the tolerated fraction of Monte Carlo replicates failed.
    #[error("{failed} of {total} replicates failed")]
    ReplicateFailures { failed: usize, total: usize },

    /// Bad run configuration (maps to exit code 2 in the CLI).
    #[error("config error: {0}")]
    Config(String),

    /// An error annotated with where in a run it happened.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Context { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    /// Wrap with run context (e.g. the scenario that failed).
    pub fn with_context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
