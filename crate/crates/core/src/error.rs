use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty string cannot form a paradigm")]
    EmptyString,

    #[error("character {0:?} is outside the configured charset")]
    OutOfCharset(char),

    #[error("need at least two strings, got {0}")]
    NotEnoughStrings(usize),

    #[error("oracle guard exceeded: total length {total} > {max}")]
    OracleGuard { total: usize, max: usize },

    #[error("distance table is not a metric ({count} violations, first: {first})")]
    NonMetric { count: usize, first: String },

    #[error("column {column} out of range for paradigm of length {length}")]
    ColumnOutOfRange { column: usize, length: usize },

    #[error("row {0:?} has no matching record")]
    UnmappedRow(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),
}
