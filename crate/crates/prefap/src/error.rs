use std::path::PathBuf;

/// Errors surfaced by the join engine and its data sources.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An operation that needs at least one element was handed an empty stream.
    #[error("empty stream")]
    EmptyStream,

    /// A span was requested over a zero-width range (min == max).
    #[error("degenerate range: min == max == {0}")]
    DegenerateRange(f64),

    /// An element fell outside the boundary it was being assigned to.
    /// This is a pipeline bug, not a data error: the boundary handed to
    /// `assign` must cover the stream's full range.
    #[error("value {value} outside boundary [{lo}, {hi}]")]
    OutOfBounds { value: f64, lo: f64, hi: f64 },

    /// Multi-way join called with a stream/operator count mismatch.
    #[error("{streams} streams require {} theta operators, got {thetas}", streams.saturating_sub(1))]
    ArityMismatch { streams: usize, thetas: usize },

    /// A distribution spec failed validation.
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    /// Configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// File could not be opened or read.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A CSV cell could not be turned into a finite join attribute.
    /// `row` is 1-based and counts the header as row 1.
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// The input file had no header row or no data rows.
    #[error("empty file: {path}")]
    EmptyFile { path: PathBuf },

    /// Both t-test samples have zero variance and equal means; the statistic
    /// is undefined.
    #[error("degenerate samples: zero variance and equal means")]
    DegenerateSample,
}

pub type Result<T> = std::result::Result<T, Error>;
