use serde::{Deserialize, Serialize};

use super::{finite_column, ToolConfig};
use crate::data::Window;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventLabel {
    Rise,
    Decline,
    Stable,
    Oscillation,
}

impl EventLabel {
    /// Tie-break order for dominance.
    pub const ORDER: [EventLabel; 4] = [
        EventLabel::Rise,
        EventLabel::Decline,
        EventLabel::Stable,
        EventLabel::Oscillation,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub label: EventLabel,
    pub slope: f64,
    pub variance: f64,
}

impl Segment {
    pub fn steps(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Share of look-back steps covered by each label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prevalence {
    #[serde(rename = "Rise")]
    pub rise: f64,
    #[serde(rename = "Decline")]
    pub decline: f64,
    #[serde(rename = "Stable")]
    pub stable: f64,
    #[serde(rename = "Oscillation")]
    pub oscillation: f64,
}

impl Prevalence {
    pub fn get(&self, label: EventLabel) -> f64 {
        match label {
            EventLabel::Rise => self.rise,
            EventLabel::Decline => self.decline,
            EventLabel::Stable => self.stable,
            EventLabel::Oscillation => self.oscillation,
        }
    }

    fn slot(&mut self, label: EventLabel) -> &mut f64 {
        match label {
            EventLabel::Rise => &mut self.rise,
            EventLabel::Decline => &mut self.decline,
            EventLabel::Stable => &mut self.stable,
            EventLabel::Oscillation => &mut self.oscillation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub name: String,
    pub segment_length: usize,
    pub segments: Vec<Segment>,
    pub prevalence: Prevalence,
    pub dominant_label: EventLabel,
    /// OLS slope per step over the whole channel.
    pub trend_slope: f64,
}

fn label_segment(piece: &[f64], channel_std: f64, config: &ToolConfig) -> (EventLabel, f64, f64) {
    if piece.len() < 2 {
        return (EventLabel::Stable, 0.0, 0.0);
    }
    let fit = stats::ols_line(piece);
    let variance = stats::variance(piece);
    if channel_std * channel_std <= stats::ZERO_VARIANCE {
        return (EventLabel::Stable, fit.slope, variance);
    }
    let net = fit.slope.abs() * (piece.len() - 1) as f64;
    let trending = fit.r_squared.is_some_and(|r2| r2 >= config.trend_r_squared) && net > 1e-9 * channel_std;
    let label = if trending {
        if fit.slope > 0.0 {
            EventLabel::Rise
        } else {
            EventLabel::Decline
        }
    } else if variance.sqrt() < config.stable_ratio * channel_std {
        EventLabel::Stable
    } else {
        EventLabel::Oscillation
    };
    (label, fit.slope, variance)
}

/// Tiles the channel into fixed-length segments and labels each one. A
/// segment is a Rise or Decline when a straight line explains at least
/// `trend_r_squared` of its variance, Stable when its spread is small next to
/// the channel's, and an Oscillation otherwise.
pub fn summarize_events(window: &Window, channel: usize, config: &ToolConfig) -> EventSummary {
    let (positions, values) = finite_column(window, channel);
    let len = window.lookback();
    let g = config.segment_length_for(window.spec.seasonal_period).min(len.max(1));
    let channel_std = if values.len() >= 2 { stats::std_dev(&values) } else { 0.0 };

    let mut segments = Vec::new();
    let mut counts = Prevalence::default();
    let mut start = 0;
    while start < len {
        let end = (start + g).min(len) - 1;
        let lo = positions.partition_point(|&p| p < start);
        let hi = positions.partition_point(|&p| p <= end);
        let (label, slope, variance) = label_segment(&values[lo..hi], channel_std, config);
        *counts.slot(label) += (end - start + 1) as f64;
        segments.push(Segment {
            start,
            end,
            label,
            slope,
            variance,
        });
        start = end + 1;
    }

    let total = len.max(1) as f64;
    let prevalence = Prevalence {
        rise: counts.rise / total,
        decline: counts.decline / total,
        stable: counts.stable / total,
        oscillation: counts.oscillation / total,
    };
    let mut dominant = EventLabel::Rise;
    for label in EventLabel::ORDER {
        if counts.get(label) > counts.get(dominant) {
            dominant = label;
        }
    }
    EventSummary {
        name: window.channel_names[channel].clone(),
        segment_length: g,
        segments,
        prevalence,
        dominant_label: dominant,
        trend_slope: if values.len() >= 2 { stats::ols_line(&values).slope } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(x: &[f64]) -> EventSummary {
        summarize_events(&Window::univariate(x, None, 24), 0, &ToolConfig::default())
    }

    fn sum(p: &Prevalence) -> f64 {
        p.rise + p.decline + p.stable + p.oscillation
    }

    #[test]
    fn ramp_is_all_rise() {
        let e = events(&(0..96).map(|t| t as f64).collect::<Vec<_>>());
        assert_eq!(e.prevalence.rise, 1.0);
        assert_eq!(e.dominant_label, EventLabel::Rise);
        assert_eq!(e.segment_length, 6);
        assert_eq!(e.segments.len(), 16);
        assert!((e.trend_slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_is_all_stable() {
        let e = events(&[3.0; 50]);
        assert_eq!(e.prevalence.stable, 1.0);
        assert_eq!(e.dominant_label, EventLabel::Stable);
        // 50 = 8 * 6 + 2: short last segment
        assert_eq!(e.segments.last().unwrap().steps(), 2);
    }

    #[test]
    fn up_then_down_ties_to_rise() {
        let x: Vec<f64> = (0..96).map(|t| if t < 48 { t as f64 } else { (95 - t) as f64 }).collect();
        let e = events(&x);
        assert_eq!(e.prevalence.rise, 0.5);
        assert_eq!(e.prevalence.decline, 0.5);
        assert_eq!(e.dominant_label, EventLabel::Rise);
    }

    #[test]
    fn segments_tile_the_window() {
        let x: Vec<f64> = (0..77).map(|t| ((t * 37) % 11) as f64).collect();
        let e = events(&x);
        assert_eq!(e.segments[0].start, 0);
        for pair in e.segments.windows(2) {
            assert_eq!(pair[0].end + 1, pair[1].start);
        }
        assert_eq!(e.segments.last().unwrap().end, 76);
        assert!((sum(&e.prevalence) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prevalence_serializes_with_label_names() {
        let e = events(&[1.0; 8]);
        let v = serde_json::to_value(e.prevalence).unwrap();
        assert_eq!(v["Stable"], 1.0);
        assert_eq!(serde_json::to_value(e.dominant_label).unwrap(), "Stable");
    }
}
