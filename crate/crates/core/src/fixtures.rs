//! Seeded synthetic datasets with the layouts of the public benchmarks, used
//! by tests, examples, and the CLI when the real files are not at hand.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{DataError, Frequency, MultivariateSeries, TIMESTAMP_FORMAT};

pub const ETTH1_ROWS: usize = 17_420;
pub const ETTH1_COLUMNS: [&str; 7] = ["HUFL", "HULL", "MUFL", "MULL", "LUFL", "LULL", "OT"];
pub const EPF_ROWS: usize = 14_496;
pub const EPF_COLUMNS: [&str; 3] = ["Exogenous1", "Exogenous2", "OT"];

fn midnight(y: i32, m: u32, d: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, m, d)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

/// Daily and weekly cycles on a slow random-walk level plus Gaussian noise.
fn channel(rng: &mut ChaCha8Rng, n: usize, level: f64, daily: f64, weekly: f64, noise: f64, phase: f64) -> Vec<f64> {
    let eps = Normal::new(0.0, noise).expect("positive std");
    let walk = Normal::new(0.0, noise * 0.05).expect("positive std");
    let mut drift = 0.0;
    (0..n)
        .map(|t| {
            drift += walk.sample(rng);
            let t = t as f64;
            level
                + drift
                + daily * (2.0 * PI * t / 24.0 + phase).sin()
                + weekly * (2.0 * PI * t / 168.0).sin()
                + eps.sample(rng)
        })
        .collect()
}

fn assemble(start: NaiveDateTime, names: &[&str], columns: Vec<Vec<f64>>) -> MultivariateSeries {
    let n = columns[0].len();
    let mut values = Array2::zeros((n, columns.len()));
    for (c, col) in columns.iter().enumerate() {
        for (t, v) in col.iter().enumerate() {
            values[[t, c]] = *v;
        }
    }
    MultivariateSeries::from_grid(
        start,
        Frequency::HOURLY,
        names.iter().map(|s| s.to_string()).collect(),
        values,
    )
    .expect("fixture grid is regular")
}

/// ETTh1 layout: 17,420 hourly rows of 7 load/temperature channels from 2016-07-01.
pub fn etth1_like(seed: u64) -> MultivariateSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = [
        (7.0, 2.0, 0.8, 0.6),
        (2.0, 0.6, 0.3, 0.3),
        (4.5, 1.8, 0.6, 0.5),
        (0.8, 0.4, 0.2, 0.2),
        (3.0, 0.9, 0.4, 0.3),
        (1.0, 0.3, 0.1, 0.1),
        (15.0, 3.0, 1.5, 0.8),
    ];
    let cols = params
        .iter()
        .enumerate()
        .map(|(i, &(level, d, w, e))| channel(&mut rng, ETTH1_ROWS, level, d, w, e, i as f64 * 0.3))
        .collect();
    assemble(midnight(2016, 7, 1), &ETTH1_COLUMNS, cols)
}

/// EPF layout: 14,496 hourly rows of two exogenous drivers and a price from 2013-01-01.
pub fn epf_like(seed: u64) -> MultivariateSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let load = channel(&mut rng, EPF_ROWS, 1000.0, 180.0, 60.0, 25.0, 0.0);
    let wind = channel(&mut rng, EPF_ROWS, 300.0, 40.0, 20.0, 35.0, 1.1);
    let noise = Normal::new(0.0, 2.0).expect("positive std");
    let price = load
        .iter()
        .zip(&wind)
        .map(|(l, w)| 0.04 * l - 0.03 * w + noise.sample(&mut rng))
        .collect();
    assemble(midnight(2013, 1, 1), &EPF_COLUMNS, vec![load, wind, price])
}

/// Single-channel `OT` series with a strong cycle of `period` steps and mild noise.
pub fn seasonal(len: usize, period: usize, seed: u64) -> MultivariateSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = Normal::new(0.0, 0.3).expect("positive std");
    let p = period.max(1) as f64;
    let values = (0..len)
        .map(|t| {
            let t = t as f64;
            10.0 + 5.0 * (2.0 * PI * t / p).sin() + 2.0 * (4.0 * PI * t / p).cos() + eps.sample(&mut rng)
        })
        .collect();
    assemble(midnight(2020, 1, 1), &["OT"], vec![values])
}

/// Looks up a bundled fixture by name: `etth1`, `epf`, or `seasonal`.
pub fn by_name(name: &str, seed: u64) -> Option<MultivariateSeries> {
    match name {
        "etth1" => Some(etth1_like(seed)),
        "epf" => Some(epf_like(seed)),
        "seasonal" => Some(seasonal(2_400, 24, seed)),
        _ => None,
    }
}

/// Writes `date,<channels...>` CSV; missing values become empty cells.
pub fn write_csv(series: &MultivariateSeries, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut out = std::io::BufWriter::new(file);
    let mut line = String::from("date");
    for name in series.channel_names() {
        line.push(',');
        line.push_str(name);
    }
    writeln!(out, "{line}").map_err(io)?;
    for (ts, row) in series.timestamps().iter().zip(series.values().rows()) {
        line.clear();
        line.push_str(&ts.format(TIMESTAMP_FORMAT).to_string());
        for v in row {
            line.push(',');
            if v.is_finite() {
                line.push_str(&v.to_string());
            }
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_csv, CsvSchema};

    #[test]
    fn layouts() {
        let e = etth1_like(0);
        assert_eq!((e.len(), e.n_channels()), (ETTH1_ROWS, 7));
        let p = epf_like(0);
        assert_eq!((p.len(), p.n_channels()), (EPF_ROWS, 3));
        assert_eq!(seasonal(100, 24, 1), seasonal(100, 24, 1));
    }

    #[test]
    fn csv_round_trip() {
        let s = seasonal(50, 24, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_csv(&s, &path).unwrap();
        let back = load_csv(&path, &CsvSchema::new("date")).unwrap();
        assert_eq!(back.series, s);
    }
}
