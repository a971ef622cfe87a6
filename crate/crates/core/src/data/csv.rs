use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::series::{parse_timestamp, Frequency, MultivariateSeries};
use super::DataError;

/// Which CSV columns hold the timestamp and the values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp_column: String,
    /// Value columns to keep, in order. `None` keeps every non-timestamp column.
    pub value_columns: Option<Vec<String>>,
    /// Declared sampling interval; inferred from the first two rows when absent.
    pub frequency: Option<Frequency>,
}

impl CsvSchema {
    pub fn new(timestamp_column: impl Into<String>) -> Self {
        Self {
            timestamp_column: timestamp_column.into(),
            value_columns: None,
            frequency: None,
        }
    }

    pub fn with_columns<I, S>(mut self, columns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.value_columns = Some(columns.into_iter().map(Into::into).collect());
        self
    }
}

/// A cell that could not be read as a number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingCell {
    pub row: usize,
    pub channel: String,
    pub raw: String,
}

#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub series: MultivariateSeries,
    pub missing: Vec<MissingCell>,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoadedSeries, DataError> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text, schema)
}

/// Parses comma-separated text with a header row.
pub fn parse_csv(text: &str, schema: &CsvSchema) -> Result<LoadedSeries, DataError> {
    if text.trim().is_empty() {
        return Err(DataError::NoValueColumns);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(DataError::Csv)?.clone();

    let ts_col = headers
        .iter()
        .position(|h| h == schema.timestamp_column)
        .ok_or_else(|| DataError::MissingColumn(schema.timestamp_column.clone()))?;
    let value_cols: Vec<(usize, String)> = match &schema.value_columns {
        Some(names) => names
            .iter()
            .map(|n| {
                headers
                    .iter()
                    .position(|h| h == n)
                    .map(|i| (i, n.clone()))
                    .ok_or_else(|| DataError::MissingColumn(n.clone()))
            })
            .collect::<Result<_, _>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ts_col)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    if value_cols.is_empty() {
        return Err(DataError::NoValueColumns);
    }

    let mut timestamps = Vec::new();
    let mut flat = Vec::new();
    let mut missing = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(DataError::Csv)?;
        let raw_ts = record.get(ts_col).unwrap_or("");
        let ts = parse_timestamp(raw_ts).ok_or_else(|| DataError::BadTimestamp {
            row,
            raw: raw_ts.to_string(),
        })?;
        timestamps.push(ts);
        for (col, name) in &value_cols {
            let raw = record.get(*col).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => flat.push(v),
                _ => {
                    flat.push(f64::NAN);
                    missing.push(MissingCell {
                        row,
                        channel: name.clone(),
                        raw: raw.to_string(),
                    });
                }
            }
        }
    }
    if timestamps.is_empty() {
        return Err(DataError::NoRows);
    }

    let frequency = match schema.frequency {
        Some(f) => f,
        None if timestamps.len() >= 2 => {
            let delta = timestamps[1] - timestamps[0];
            if delta.num_seconds() <= 0 {
                return Err(DataError::NonMonotoneTimestamps { row: 1 });
            }
            Frequency::from_seconds(delta.num_seconds())?
        }
        None => return Err(DataError::UnknownFrequency),
    };

    let values = Array2::from_shape_vec((timestamps.len(), value_cols.len()), flat)
        .map_err(|e| DataError::Shape(e.to_string()))?;
    let names = value_cols.into_iter().map(|(_, n)| n).collect();
    let series = MultivariateSeries::new(timestamps, names, values, frequency)?;
    Ok(LoadedSeries { series, missing })
}
