use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDateTime, TimeDelta};
use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DataError;

/// Sampling interval of a series, stored as whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frequency(i64);

impl Frequency {
    pub const HOURLY: Frequency = Frequency(3600);
    pub const QUARTER_HOURLY: Frequency = Frequency(900);

    pub fn from_seconds(seconds: i64) -> Result<Self, DataError> {
        if seconds <= 0 {
            return Err(DataError::InvalidFrequency(format!("{seconds}s")));
        }
        Ok(Frequency(seconds))
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn as_delta(self) -> TimeDelta {
        TimeDelta::seconds(self.0)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        if s % 86_400 == 0 {
            write!(f, "{}d", s / 86_400)
        } else if s % 3600 == 0 {
            write!(f, "{}h", s / 3600)
        } else if s % 60 == 0 {
            write!(f, "{}min", s / 60)
        } else {
            write!(f, "{s}s")
        }
    }
}

impl FromStr for Frequency {
    type Err = DataError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let raw = raw.trim();
        let split = raw
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(raw.len());
        let (num, unit) = raw.split_at(split);
        let n: i64 = if num.is_empty() {
            1
        } else {
            num.parse()
                .map_err(|_| DataError::InvalidFrequency(raw.to_string()))?
        };
        let mult = match unit.trim() {
            "s" | "sec" => 1,
            "min" | "m" | "T" => 60,
            "h" | "H" => 3600,
            "d" | "D" => 86_400,
            _ => return Err(DataError::InvalidFrequency(raw.to_string())),
        };
        Frequency::from_seconds(n * mult)
    }
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A uniformly sampled multichannel series. Missing observations are stored
/// as `NaN` and never dropped or imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    timestamps: Vec<NaiveDateTime>,
    channel_names: Vec<String>,
    values: Array2<f64>,
    frequency: Frequency,
}

impl MultivariateSeries {
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        channel_names: Vec<String>,
        values: Array2<f64>,
        frequency: Frequency,
    ) -> Result<Self, DataError> {
        if channel_names.is_empty() {
            return Err(DataError::NoValueColumns);
        }
        if values.nrows() != timestamps.len() {
            return Err(DataError::Shape(format!(
                "{} value rows for {} timestamps",
                values.nrows(),
                timestamps.len()
            )));
        }
        if values.ncols() != channel_names.len() {
            return Err(DataError::Shape(format!(
                "{} value columns for {} channel names",
                values.ncols(),
                channel_names.len()
            )));
        }
        let step = frequency.as_delta();
        for (i, pair) in timestamps.windows(2).enumerate() {
            let delta = pair[1] - pair[0];
            if delta <= TimeDelta::zero() {
                return Err(DataError::NonMonotoneTimestamps { row: i + 1 });
            }
            if delta != step {
                return Err(DataError::IrregularSpacing {
                    row: i + 1,
                    expected: frequency,
                    found_seconds: delta.num_seconds(),
                });
            }
        }
        Ok(Self {
            timestamps,
            channel_names,
            values,
            frequency,
        })
    }

    /// Builds a series on a regular grid starting at `start`.
    pub fn from_grid(
        start: NaiveDateTime,
        frequency: Frequency,
        channel_names: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self, DataError> {
        let step = frequency.as_delta();
        let timestamps = (0..values.nrows())
            .map(|i| start + step * i as i32)
            .collect();
        Self::new(timestamps, channel_names, values, frequency)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|c| c == name)
    }

    pub fn channel(&self, index: usize) -> ArrayView1<'_, f64> {
        self.values.column(index)
    }

    /// `(row, column)` of every missing cell, row-major.
    pub fn missing_positions(&self) -> Vec<(usize, usize)> {
        self.values
            .indexed_iter()
            .filter(|(_, v)| v.is_nan())
            .map(|(pos, _)| pos)
            .collect()
    }

    /// Contiguous rows `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> MultivariateSeries {
        MultivariateSeries {
            timestamps: self.timestamps[start..end].to_vec(),
            channel_names: self.channel_names.clone(),
            values: self.values.slice(ndarray::s![start..end, ..]).to_owned(),
            frequency: self.frequency,
        }
    }

    pub(crate) fn with_values(&self, values: Array2<f64>) -> MultivariateSeries {
        debug_assert_eq!(values.dim(), self.values.dim());
        MultivariateSeries {
            timestamps: self.timestamps.clone(),
            channel_names: self.channel_names.clone(),
            values,
            frequency: self.frequency,
        }
    }

    /// Concatenates series that share channels and frequency, in order.
    pub fn concat(parts: &[&MultivariateSeries]) -> Result<MultivariateSeries, DataError> {
        let first = parts
            .iter()
            .find(|p| !p.is_empty())
            .or(parts.first())
            .ok_or(DataError::NoRows)?;
        let mut timestamps = Vec::new();
        let mut views = Vec::new();
        for p in parts {
            if p.channel_names != first.channel_names || p.frequency != first.frequency {
                return Err(DataError::Shape("concatenating incompatible series".into()));
            }
            timestamps.extend_from_slice(&p.timestamps);
            views.push(p.values.view());
        }
        let values = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| DataError::Shape(e.to_string()))?;
        MultivariateSeries::new(timestamps, first.channel_names.clone(), values, first.frequency)
    }
}

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Parses the ISO-8601 variants found in public benchmark CSVs.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    const FORMATS: [&str; 6] = [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
    ];
    for fmt in FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(ts);
        }
    }
    if let Ok(ts) = chrono::DateTime::parse_from_rfc3339(raw) {
        return Some(ts.naive_utc());
    }
    chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

#[derive(Serialize, Deserialize)]
struct SeriesDocument {
    timestamps: Vec<String>,
    channels: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
    frequency: Frequency,
}

impl Serialize for MultivariateSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SeriesDocument {
            timestamps: self
                .timestamps
                .iter()
                .map(|t| t.format(TIMESTAMP_FORMAT).to_string())
                .collect(),
            channels: self.channel_names.clone(),
            values: self
                .values
                .rows()
                .into_iter()
                .map(|row| row.iter().map(|v| (!v.is_nan()).then_some(*v)).collect())
                .collect(),
            frequency: self.frequency,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultivariateSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let doc = SeriesDocument::deserialize(deserializer)?;
        let timestamps = doc
            .timestamps
            .iter()
            .map(|t| parse_timestamp(t).ok_or_else(|| D::Error::custom(format!("bad timestamp {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let cols = doc.channels.len();
        let mut flat = Vec::with_capacity(doc.values.len() * cols);
        for row in &doc.values {
            if row.len() != cols {
                return Err(D::Error::custom("ragged values row"));
            }
            flat.extend(row.iter().map(|v| v.unwrap_or(f64::NAN)));
        }
        let values = Array2::from_shape_vec((doc.values.len(), cols), flat).map_err(D::Error::custom)?;
        MultivariateSeries::new(timestamps, doc.channels, values, doc.frequency).map_err(D::Error::custom)
    }
}
