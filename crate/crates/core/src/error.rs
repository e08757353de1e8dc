use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("label error at row {row}: `{value}` is not 0 or 1")]
    Label { row: usize, value: String },

    #[error("cannot aggregate an empty series")]
    EmptySeries,

    #[error("feature `{0}` has no observed values in the training rows")]
    UnfitColumn(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("class error: {0}")]
    Class(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("exact Shapley enumeration is limited to {limit} features but the model has {features}; use sampled Shapley values instead")]
    ExactLimit { limit: usize, features: usize },

    #[error("grid cell {cell}, fold {fold}: {source}")]
    Fold {
        cell: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::Parse { .. }
                | Error::Label { .. }
                | Error::UnfitColumn(_)
                | Error::Csv(_)
                | Error::Input(_)
                | Error::Class(_)
        )
    }
}
