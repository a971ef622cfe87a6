use serde::{Deserialize, Serialize};

use super::events::{EventLabel, Segment};
use super::{finite_column, ToolConfig, ToolError};
use crate::curriculum::permutation_entropy;
use crate::data::Window;
use crate::stats::{self, ExtremumKind};

/// Piece between consecutive changepoints with its OLS slope per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSegment {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDynamics {
    pub name: String,
    pub changepoints: Vec<usize>,
    pub segments: Vec<TrendSegment>,
    pub stable_segments: Vec<Segment>,
    pub local_maxima: Vec<usize>,
    pub local_minima: Vec<usize>,
    pub permutation_entropy: f64,
}

/// Two-sided mean-shift statistic at every split index `i` in `[w, n - w]`:
/// `|mean(x[i..i+w]) - mean(x[i-w..i])| / pooled_std`. Entries outside that
/// range are `None`. A shift between two exactly flat windows scores `+inf`.
pub fn mean_shift_scores(x: &[f64], w: usize) -> Vec<Option<f64>> {
    let n = x.len();
    let mut out = vec![None; n + 1];
    if w == 0 || n < 2 * w {
        return out;
    }
    let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (i, slot) in out.iter_mut().enumerate().take(n - w + 1).skip(w) {
        let left = &x[i - w..i];
        let right = &x[i..i + w];
        let delta = (stats::mean(right) - stats::mean(left)).abs();
        let pooled = ((stats::variance(left) + stats::variance(right)) / 2.0).sqrt();
        *slot = Some(if pooled > 1e-12 * scale {
            delta / pooled
        } else if delta > 1e-12 * scale {
            f64::INFINITY
        } else {
            0.0
        });
    }
    out
}

/// Indices where the mean-shift statistic exceeds `threshold` and is a strict
/// maximum over the surrounding `±w` split positions. Flat score plateaus (a
/// clean linear trend, for instance) yield no changepoint.
pub fn detect_changepoints(x: &[f64], w: usize, threshold: f64) -> Vec<usize> {
    let scores = mean_shift_scores(x, w);
    let mut out = Vec::new();
    for (i, s) in scores.iter().enumerate() {
        let Some(s) = *s else { continue };
        if s <= threshold {
            continue;
        }
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(scores.len() - 1);
        let dominant = (lo..=hi)
            .filter(|&j| j != i)
            .filter_map(|j| scores[j])
            .all(|other| s > other * (1.0 + 1e-9) + 1e-12);
        if dominant {
            out.push(i);
        }
    }
    out
}

fn stable_segments(x: &[f64], positions: &[usize], width: usize, quantile: f64) -> Vec<Segment> {
    let n = x.len();
    if width == 0 || n < width {
        return Vec::new();
    }
    let vars: Vec<f64> = (0..=n - width).map(|i| stats::variance(&x[i..i + width])).collect();
    let cut = stats::quantile(&vars, quantile);
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        if *v > cut {
            continue;
        }
        let (s, e) = (i, i + width - 1);
        match ranges.last_mut() {
            Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
            _ => ranges.push((s, e)),
        }
    }
    ranges
        .into_iter()
        .map(|(s, e)| {
            let piece = &x[s..=e];
            Segment {
                start: positions[s],
                end: positions[e],
                label: EventLabel::Stable,
                slope: stats::ols_line(piece).slope,
                variance: stats::variance(piece),
            }
        })
        .collect()
}

pub fn extract_within_channel_dynamics(
    window: &Window,
    channel: usize,
    config: &ToolConfig,
) -> Result<ChannelDynamics, ToolError> {
    let name = window.channel_names[channel].clone();
    let (positions, x) = finite_column(window, channel);
    let w = config.changepoint_window;
    let need = (2 * w).max(config.entropy_order);
    if x.len() < need {
        return Err(ToolError::TooShort {
            channel: name,
            need,
            found: x.len(),
        });
    }

    let cps = detect_changepoints(&x, w, config.changepoint_threshold);
    let mut bounds = vec![0];
    bounds.extend(cps.iter().copied());
    bounds.push(x.len());
    let segments = bounds
        .windows(2)
        .map(|b| TrendSegment {
            start: positions[b[0]],
            end: positions[b[1] - 1],
            slope: stats::ols_line(&x[b[0]..b[1]]).slope,
        })
        .collect();

    let extrema = stats::local_extrema(&x, config.extrema_radius);
    let pick = |kind| {
        extrema
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| positions[e.index])
            .collect::<Vec<_>>()
    };
    let entropy = permutation_entropy(&x, config.entropy_order, config.entropy_delay).map_err(|_| ToolError::TooShort {
        channel: name.clone(),
        need,
        found: x.len(),
    })?;

    Ok(ChannelDynamics {
        changepoints: cps.iter().map(|&i| positions[i]).collect(),
        segments,
        stable_segments: stable_segments(
            &x,
            &positions,
            config.segment_length_for(window.spec.seasonal_period),
            config.stable_quantile,
        ),
        local_maxima: pick(ExtremumKind::Maximum),
        local_minima: pick(ExtremumKind::Minimum),
        permutation_entropy: entropy,
        name,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dynamics(x: &[f64]) -> ChannelDynamics {
        let w = Window::univariate(x, None, 24);
        extract_within_channel_dynamics(&w, 0, &ToolConfig::default()).unwrap()
    }

    #[test]
    fn clean_step_has_one_changepoint() {
        let x: Vec<f64> = (0..96).map(|t| if t < 48 { 0.0 } else { 10.0 }).collect();
        let d = dynamics(&x);
        assert_eq!(d.changepoints, vec![48]);
        assert_eq!(d.segments.len(), 2);
        assert_eq!(d.segments[0].end, 47);
        assert_eq!(d.segments[1].slope, 0.0);
    }

    #[test]
    fn ramp_has_no_changepoints_or_extrema() {
        let x: Vec<f64> = (0..96).map(|t| 0.25 * t as f64).collect();
        let d = dynamics(&x);
        assert!(d.changepoints.is_empty());
        assert_eq!(d.segments.len(), 1);
        assert!((d.segments[0].slope - 0.25).abs() < 1e-12);
        assert!(d.local_maxima.is_empty() && d.local_minima.is_empty());
        assert_eq!(d.permutation_entropy, 0.0);
    }

    #[test]
    fn too_short_channel() {
        let w = Window::univariate(&[1.0; 20], None, 4);
        assert!(matches!(
            extract_within_channel_dynamics(&w, 0, &ToolConfig::default()),
            Err(ToolError::TooShort { need: 24, found: 20, .. })
        ));
    }

    #[test]
    fn missing_points_keep_original_positions() {
        let mut x: Vec<f64> = (0..60).map(|t| if t < 30 { 0.0 } else { 5.0 }).collect();
        x[3] = f64::NAN;
        let d = dynamics(&x);
        assert_eq!(d.changepoints, vec![30]);
        assert_eq!(d.segments[0].start, 0);
    }

    #[test]
    fn constant_channel_is_entirely_stable() {
        let d = dynamics(&[2.0; 48]);
        assert_eq!(d.stable_segments.len(), 1);
        assert_eq!((d.stable_segments[0].start, d.stable_segments[0].end), (0, 47));
        assert!(d.changepoints.is_empty());
    }
}
