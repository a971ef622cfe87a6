//! Difficulty scoring, banding, and staged ordering of training windows.

mod entropy;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Window;
use crate::models::{predict_time_series, ExternalRegistry, ForecastModelId, ModelError};
use crate::reward::nmse;
use crate::stats;

pub use entropy::{ordinal_histogram, permutation_entropy, DEFAULT_DELAY, DEFAULT_ORDER};

#[derive(Debug, thiserror::Error)]
pub enum CurriculumError {
    #[error("permutation order must be in 2..=20, got {0}")]
    InvalidOrder(usize),
    #[error("delay must be positive")]
    InvalidDelay,
    #[error("series too short: need {need} points, found {found}")]
    SeriesTooShort { need: usize, found: usize },
    #[error("series contains missing or non-finite values")]
    NonFinite,
    #[error("window has no ground-truth target")]
    MissingTarget,
    #[error("teacher model failed: {0}")]
    Teacher(#[from] ModelError),
    #[error("need at least 3 scorable profiles, got {0}")]
    TooFewProfiles(usize),
    #[error("manifest write failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyProfile {
    pub dataset_id: String,
    pub origin_index: usize,
    pub teacher_error: f64,
    pub perm_entropy: f64,
    /// Stage id in `1..=3`, assigned by [`assign_bands`].
    pub band: Option<u8>,
}

/// Band cut points: `error_low` separates bands 1 and 2, `entropy_high` sends
/// a sample to band 3. `error_high` is reported for completeness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandThresholds {
    pub error_low: f64,
    pub error_high: f64,
    pub entropy_high: f64,
}

impl BandThresholds {
    /// Terciles of the observed scores.
    pub fn terciles(profiles: &[DifficultyProfile]) -> Self {
        let errors: Vec<f64> = profiles.iter().map(|p| p.teacher_error).collect();
        let entropies: Vec<f64> = profiles.iter().map(|p| p.perm_entropy).collect();
        Self {
            error_low: stats::quantile(&errors, 1.0 / 3.0),
            error_high: stats::quantile(&errors, 2.0 / 3.0),
            entropy_high: stats::quantile(&entropies, 2.0 / 3.0),
        }
    }

    pub fn band(&self, teacher_error: f64, perm_entropy: f64) -> u8 {
        if perm_entropy > self.entropy_high {
            3
        } else if teacher_error > self.error_low {
            2
        } else {
            1
        }
    }
}

/// Teacher nMSE on the window target, normalized like the accuracy reward.
pub fn teacher_difficulty(
    window: &Window,
    teacher: &ForecastModelId,
    externals: &ExternalRegistry,
) -> Result<f64, CurriculumError> {
    let target = window.target.as_ref().ok_or(CurriculumError::MissingTarget)?;
    let forecast = predict_time_series(teacher, window, target.nrows(), externals)?;
    Ok(nmse(forecast.values.view(), target.view()).expect("forecast shape validated against horizon"))
}

/// Mean permutation entropy over the window's target channels.
pub fn window_entropy(window: &Window, order: usize, delay: usize) -> Result<f64, CurriculumError> {
    let mut sum = 0.0;
    for &c in &window.target_indices {
        sum += permutation_entropy(&window.channel(c).to_vec(), order, delay)?;
    }
    Ok(sum / window.target_indices.len().max(1) as f64)
}

/// A window the scorer had to skip, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unscorable {
    pub origin_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    pub teacher: ForecastModelId,
    pub order: usize,
    pub delay: usize,
    pub seed: u64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            teacher: ForecastModelId::SeasonalNaive { period: 24 },
            order: DEFAULT_ORDER,
            delay: DEFAULT_DELAY,
            seed: 0,
        }
    }
}

/// Scores every window in parallel; failures are returned separately and
/// never enter banding.
pub fn score_windows(
    dataset_id: &str,
    windows: &[Window],
    config: &CurriculumConfig,
    externals: &ExternalRegistry,
) -> (Vec<DifficultyProfile>, Vec<Unscorable>) {
    let results: Vec<Result<DifficultyProfile, Unscorable>> = windows
        .par_iter()
        .map(|w| {
            let scored = teacher_difficulty(w, &config.teacher, externals)
                .and_then(|e| Ok((e, window_entropy(w, config.order, config.delay)?)));
            match scored {
                Ok((teacher_error, perm_entropy)) => Ok(DifficultyProfile {
                    dataset_id: dataset_id.to_string(),
                    origin_index: w.origin_index,
                    teacher_error,
                    perm_entropy,
                    band: None,
                }),
                Err(e) => Err(Unscorable {
                    origin_index: w.origin_index,
                    reason: e.to_string(),
                }),
            }
        })
        .collect();
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for r in results {
        match r {
            Ok(p) => ok.push(p),
            Err(u) => bad.push(u),
        }
    }
    (ok, bad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Banding {
    pub thresholds: BandThresholds,
    pub warnings: Vec<String>,
}

/// Assigns every profile to exactly one band. With identical scores
/// throughout, everything lands in band 1 and a warning is returned.
pub fn assign_bands(
    profiles: &mut [DifficultyProfile],
    thresholds: Option<BandThresholds>,
) -> Result<Banding, CurriculumError> {
    if profiles.len() < 3 {
        return Err(CurriculumError::TooFewProfiles(profiles.len()));
    }
    let thresholds = thresholds.unwrap_or_else(|| BandThresholds::terciles(profiles));
    let first = (profiles[0].teacher_error, profiles[0].perm_entropy);
    let degenerate = profiles
        .iter()
        .all(|p| (p.teacher_error, p.perm_entropy) == first);
    let mut warnings = Vec::new();
    if degenerate {
        warnings.push(format!(
            "all {} profiles share identical scores; every sample placed in band 1",
            profiles.len()
        ));
    }
    for p in profiles.iter_mut() {
        p.band = Some(if degenerate {
            1
        } else {
            thresholds.band(p.teacher_error, p.perm_entropy)
        });
    }
    Ok(Banding { thresholds, warnings })
}

/// Training order: band 1, then 2, then 3, each shuffled with a seeded RNG
/// and repeated `epochs_per_stage` times. Empty bands are reported and skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub stream: Vec<DifficultyProfile>,
    /// Start offsets of each non-empty stage within `stream`.
    pub stage_starts: Vec<(u8, usize)>,
    pub skipped_bands: Vec<u8>,
}

pub fn schedule(profiles: &[DifficultyProfile], epochs_per_stage: usize, seed: u64) -> Schedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stream = Vec::new();
    let mut stage_starts = Vec::new();
    let mut skipped_bands = Vec::new();
    for band in 1..=3u8 {
        let members: Vec<&DifficultyProfile> = profiles.iter().filter(|p| p.band == Some(band)).collect();
        if members.is_empty() {
            skipped_bands.push(band);
            continue;
        }
        stage_starts.push((band, stream.len()));
        for _ in 0..epochs_per_stage.max(1) {
            let mut order = members.clone();
            order.shuffle(&mut rng);
            stream.extend(order.into_iter().cloned());
        }
    }
    Schedule {
        stream,
        stage_starts,
        skipped_bands,
    }
}

/// One line per sample in stream order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub dataset_id: String,
    pub origin_index: usize,
    pub band: u8,
    pub teacher_error: f64,
    pub perm_entropy: f64,
}

/// Writes the stream as JSON lines.
pub fn write_manifest(schedule: &Schedule, mut out: impl Write) -> Result<(), CurriculumError> {
    for p in &schedule.stream {
        let record = ManifestRecord {
            dataset_id: p.dataset_id.clone(),
            origin_index: p.origin_index,
            band: p.band.unwrap_or(1),
            teacher_error: p.teacher_error,
            perm_entropy: p.perm_entropy,
        };
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn manifest_string(schedule: &Schedule) -> String {
    let mut buf = Vec::new();
    write_manifest(schedule, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}
