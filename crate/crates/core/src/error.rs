use thiserror::Error;

/// Errors produced anywhere in the imputation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    /// A CSV cell could not be parsed. `row` is the 1-based data row (header excluded).
    #[error("load error at row {row}, column `{column}`: {message}")]
    Load {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite loss at iteration {iteration}: d_loss={d_loss}, g_loss={g_loss}")]
    NonFiniteLoss { iteration: usize, d_loss: f64, g_loss: f64 },

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("malformed model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
