use serde::{Deserialize, Serialize};

use super::ToolConfig;
use crate::data::Window;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelQuality {
    pub name: String,
    pub missing_count: usize,
    pub missing_fraction: f64,
    pub is_constant: bool,
    /// Longest run sitting at the channel minimum or maximum, over the look-back length.
    pub saturation_fraction: f64,
    /// Share of points with `|z| > abnormal_z`; undefined for constant or empty channels.
    pub abnormal_fraction: Option<f64>,
    pub abnormal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub channels: Vec<ChannelQuality>,
}

pub fn assess_data_quality(window: &Window, channels: &[usize], config: &ToolConfig) -> QualityReport {
    let len = window.lookback();
    let channels = channels
        .iter()
        .map(|&c| {
            let col = window.channel(c);
            let values: Vec<f64> = col.to_vec();
            let finite = stats::finite(values.iter().copied());
            let missing_count = len - finite.len();
            let (lo, hi) = finite
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let is_constant = !finite.is_empty() && hi - lo < config.constant_tolerance;

            let at_bound = |v: f64| {
                v.is_finite() && ((v - lo).abs() < config.constant_tolerance || (v - hi).abs() < config.constant_tolerance)
            };
            let mut longest = 0usize;
            let mut run = 0usize;
            let mut prev_bound: Option<bool> = None;
            for &v in &values {
                // a run must stay on the same bound; for constant channels both coincide
                let bound = if !at_bound(v) {
                    None
                } else if (v - lo).abs() < config.constant_tolerance {
                    Some(false)
                } else {
                    Some(true)
                };
                match bound {
                    Some(b) if prev_bound == Some(b) => run += 1,
                    Some(_) => run = 1,
                    None => run = 0,
                }
                prev_bound = bound;
                longest = longest.max(run);
            }

            let abnormal_fraction = if finite.len() < 2 || is_constant {
                None
            } else {
                let m = stats::mean(&finite);
                let sd = stats::std_dev(&finite);
                (sd > 0.0).then(|| {
                    finite.iter().filter(|v| ((*v - m) / sd).abs() > config.abnormal_z).count() as f64
                        / finite.len() as f64
                })
            };
            ChannelQuality {
                name: window.channel_names[c].clone(),
                missing_count,
                missing_fraction: missing_count as f64 / len as f64,
                is_constant,
                saturation_fraction: longest as f64 / len as f64,
                abnormal_fraction,
                abnormal: abnormal_fraction.is_some_and(|f| f > config.abnormal_fraction),
            }
        })
        .collect();
    QualityReport { channels }
}
