//! Series ingestion, windowing, normalization and splits.

mod csv;
mod normalize;
mod series;
mod split;
mod window;

pub use self::csv::{load_csv, parse_csv, CsvSchema, LoadedSeries, MissingCell};
pub use normalize::{denormalize, zscore, ZScoreStats, STD_TOLERANCE};
pub use series::{parse_timestamp, Frequency, MultivariateSeries, TIMESTAMP_FORMAT};
pub use split::{split, SplitRatios};
pub use window::{make_windows, Window, WindowSpec};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[source] ::csv::Error),
    #[error("zero value columns/rows")]
    NoValueColumns,
    #[error("zero value columns/rows: file has a header but no data rows")]
    NoRows,
    #[error("column {0:?} not found")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp {raw:?}")]
    BadTimestamp { row: usize, raw: String },
    #[error("row {row}: timestamps are not strictly increasing")]
    NonMonotoneTimestamps { row: usize },
    #[error("row {row}: spacing of {found_seconds}s does not match frequency {expected}")]
    IrregularSpacing {
        row: usize,
        expected: Frequency,
        found_seconds: i64,
    },
    #[error("cannot infer frequency from a single row")]
    UnknownFrequency,
    #[error("invalid frequency {0:?}")]
    InvalidFrequency(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("series too short: need at least {required} rows, found {found}")]
    TooShort { required: usize, found: usize },
    #[error("invalid window spec: {0}")]
    InvalidSpec(String),
    #[error("split ratios {0:?} must be non-negative and sum to 1")]
    InvalidRatios([f64; 3]),
}
