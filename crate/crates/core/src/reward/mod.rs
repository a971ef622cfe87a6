//! Episode-level reward: accuracy, trend and seasonal consistency, turning
//! point alignment, and format/length penalties, combined once per episode.

mod decompose;
mod turning;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::stats;

pub use decompose::{decompose, Decomposition};
pub use turning::{match_extrema, turning_point_score};

/// Added to the truth variance in the nMSE denominator.
pub const NMSE_EPSILON: f64 = 1e-8;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RewardError {
    #[error("shape mismatch: forecast {forecast:?}, truth {truth:?}")]
    ShapeMismatch {
        forecast: (usize, usize),
        truth: (usize, usize),
    },
    #[error("decomposition period must be at least 2, got {0}")]
    InvalidPeriod(usize),
    #[error("invalid reward weights: {0}")]
    InvalidWeights(String),
}

/// Which reward terms are active. Disabled components drop out and the
/// remaining weights are rescaled to sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardTerms {
    pub prediction_error: bool,
    pub trend_seasonal: bool,
    pub structural_alignment: bool,
    pub length_penalty: bool,
}

impl Default for RewardTerms {
    fn default() -> Self {
        Self {
            prediction_error: true,
            trend_seasonal: true,
            structural_alignment: true,
            length_penalty: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub w_acc: f64,
    pub w_trend: f64,
    pub w_seas: f64,
    pub w_turn: f64,
    pub p_format: f64,
    /// Charged in proportion to `|answer rows - H| / H`, capped at one horizon.
    pub p_length_answer: f64,
    /// Charged in proportion to tokens over budget, capped at one budget.
    pub p_length_response: f64,
    pub token_budget: u64,
    pub turning_tolerance: usize,
    pub extrema_radius: usize,
    pub terms: RewardTerms,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_acc: 0.6,
            w_trend: 0.1,
            w_seas: 0.1,
            w_turn: 0.2,
            p_format: 1.0,
            p_length_answer: 0.2,
            p_length_response: 0.1,
            token_budget: 4096,
            turning_tolerance: 2,
            extrema_radius: 2,
            terms: RewardTerms::default(),
        }
    }
}

impl RewardWeights {
    /// Weights must be non-negative and sum to one; penalties non-negative and
    /// small enough that the format penalty dominates the length penalties.
    pub fn validate(&self) -> Result<(), RewardError> {
        let w = [self.w_acc, self.w_trend, self.w_seas, self.w_turn];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RewardError::InvalidWeights("component weights must be non-negative".into()));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(RewardError::InvalidWeights("component weights must sum to 1".into()));
        }
        let p = [self.p_format, self.p_length_answer, self.p_length_response];
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) || self.p_format > 1.0 {
            return Err(RewardError::InvalidWeights("penalties must lie in [0, 1]".into()));
        }
        if self.p_length_answer + self.p_length_response >= self.p_format {
            return Err(RewardError::InvalidWeights(
                "length penalties must stay below the format penalty".into(),
            ));
        }
        if self.token_budget == 0 {
            return Err(RewardError::InvalidWeights("token budget must be positive".into()));
        }
        Ok(())
    }

    /// `(w_acc, w_trend, w_seas, w_turn)` after switching terms off and rescaling.
    pub fn effective(&self) -> [f64; 4] {
        let t = self.terms;
        let raw = [
            if t.prediction_error { self.w_acc } else { 0.0 },
            if t.trend_seasonal { self.w_trend } else { 0.0 },
            if t.trend_seasonal { self.w_seas } else { 0.0 },
            if t.structural_alignment { self.w_turn } else { 0.0 },
        ];
        if t.prediction_error && t.trend_seasonal && t.structural_alignment {
            return raw;
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return [0.0; 4];
        }
        raw.map(|w| w / total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub accuracy: f64,
    pub trend: f64,
    pub seasonal: f64,
    pub turning: f64,
    pub nmse: Option<f64>,
    pub format_ok: bool,
    /// Answer rows minus the horizon.
    pub answer_length_delta: i64,
    pub response_tokens: Option<u64>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Trend,
    Seasonal,
}

fn check_shapes(forecast: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<(), RewardError> {
    if forecast.dim() != truth.dim() {
        return Err(RewardError::ShapeMismatch {
            forecast: forecast.dim(),
            truth: truth.dim(),
        });
    }
    Ok(())
}

/// MSE over every cell divided by the channel-averaged population variance of
/// the truth, plus [`NMSE_EPSILON`].
pub fn nmse(forecast: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64, RewardError> {
    check_shapes(forecast, truth)?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let mse = (&forecast - &truth).mapv(|d| d * d).mean().unwrap_or(0.0);
    let var = truth
        .axis_iter(Axis(1))
        .map(|c| stats::variance(&c.to_vec()))
        .sum::<f64>()
        / truth.ncols() as f64;
    Ok(mse / (var + NMSE_EPSILON))
}

/// `1 / (1 + ln(1 + nMSE))`, in `(0, 1]`.
pub fn accuracy_from_nmse(nmse: f64) -> f64 {
    1.0 / (1.0 + nmse.ln_1p())
}

pub fn accuracy_reward(forecast: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64, RewardError> {
    nmse(forecast, truth).map(accuracy_from_nmse)
}

fn pearson_or_convention(a: &[f64], b: &[f64]) -> f64 {
    match stats::pearson(a, b) {
        Some(r) => r,
        None => {
            let flat = |x: &[f64]| stats::variance(x) <= stats::ZERO_VARIANCE;
            if flat(a) && flat(b) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// `(rho + 1) / 2` for the Pearson correlation of one decomposition component,
/// averaged over channels. Two constant components count as `rho = 1`, one
/// constant side as `rho = 0`.
pub fn component_consistency(
    forecast: ArrayView2<f64>,
    truth: ArrayView2<f64>,
    which: Component,
    period: usize,
) -> Result<f64, RewardError> {
    check_shapes(forecast, truth)?;
    if forecast.ncols() == 0 {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for (f, t) in forecast.axis_iter(Axis(1)).zip(truth.axis_iter(Axis(1))) {
        let df = decompose(&f.to_vec(), period)?;
        let dt = decompose(&t.to_vec(), period)?;
        let (a, b) = match which {
            Component::Trend => (df.trend, dt.trend),
            Component::Seasonal => (df.seasonal, dt.seasonal),
        };
        total += (pearson_or_convention(&a, &b) + 1.0) / 2.0;
    }
    Ok((total / forecast.ncols() as f64).clamp(0.0, 1.0))
}

/// Channel-averaged turning point F1.
pub fn turning_reward(
    forecast: ArrayView2<f64>,
    truth: ArrayView2<f64>,
    radius: usize,
    tolerance: usize,
) -> Result<f64, RewardError> {
    check_shapes(forecast, truth)?;
    if forecast.ncols() == 0 {
        return Ok(1.0);
    }
    let sum: f64 = forecast
        .axis_iter(Axis(1))
        .zip(truth.axis_iter(Axis(1)))
        .map(|(f, t)| turning_point_score(&f.to_vec(), &t.to_vec(), radius, tolerance))
        .sum();
    Ok(sum / forecast.ncols() as f64)
}

/// Everything the episode reward looks at.
#[derive(Debug, Clone, Copy)]
pub struct RewardInput<'a> {
    /// Parsed answer, `None` when the episode ended without one.
    pub answer: Option<&'a Array2<f64>>,
    pub truth: &'a Array2<f64>,
    pub format_ok: bool,
    pub response_tokens: Option<u64>,
    pub period: usize,
}

/// Combines the components into one scalar:
/// `1 - sum w_i (1 - c_i) - length penalties` for a well-formed answer, and
/// `-p_format - length penalties` otherwise, clamped to `[-1, 1]`. The first
/// form equals `sum w_i c_i` when the weights sum to one and is exactly 1 for a
/// perfect answer.
pub fn total_reward(input: RewardInput<'_>, weights: &RewardWeights) -> Result<RewardBreakdown, RewardError> {
    let horizon = input.truth.nrows();
    let rows = input.answer.map_or(0, |a| a.nrows());
    let delta = rows as i64 - horizon as i64;

    let (mut accuracy, mut trend, mut seasonal, mut turning, mut nmse_value) = (0.0, 0.0, 0.0, 0.0, None);
    if let Some(answer) = input.answer {
        if answer.ncols() != input.truth.ncols() {
            return Err(RewardError::ShapeMismatch {
                forecast: answer.dim(),
                truth: input.truth.dim(),
            });
        }
        let common = rows.min(horizon);
        if common > 0 {
            let f = answer.slice(ndarray::s![..common, ..]);
            let t = input.truth.slice(ndarray::s![..common, ..]);
            let e = nmse(f, t)?;
            nmse_value = Some(e);
            accuracy = accuracy_from_nmse(e);
            trend = component_consistency(f, t, Component::Trend, input.period.max(2))?;
            seasonal = component_consistency(f, t, Component::Seasonal, input.period.max(2))?;
            turning = turning_reward(f, t, weights.extrema_radius, weights.turning_tolerance)?;
        }
    }

    let mut penalty = 0.0;
    if weights.terms.length_penalty {
        if horizon > 0 {
            penalty += weights.p_length_answer * (delta.unsigned_abs() as f64 / horizon as f64).min(1.0);
        }
        if let Some(tokens) = input.response_tokens {
            let excess = tokens.saturating_sub(weights.token_budget) as f64;
            penalty += weights.p_length_response * (excess / weights.token_budget as f64).min(1.0);
        }
    }

    let valid = input.format_ok && input.answer.is_some();
    let total = if valid {
        let [wa, wt, ws, wp] = weights.effective();
        let shortfall = wa * (1.0 - accuracy) + wt * (1.0 - trend) + ws * (1.0 - seasonal) + wp * (1.0 - turning);
        1.0 - shortfall - penalty
    } else {
        -weights.p_format - penalty
    };
    Ok(RewardBreakdown {
        accuracy,
        trend,
        seasonal,
        turning,
        nmse: nmse_value,
        format_ok: valid,
        answer_length_delta: delta,
        response_tokens: input.response_tokens,
        total: total.clamp(-1.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;

    use super::*;

    fn col(x: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((x.len(), 1), x.to_vec()).unwrap()
    }

    fn input<'a>(answer: Option<&'a Array2<f64>>, truth: &'a Array2<f64>) -> RewardInput<'a> {
        RewardInput {
            answer,
            truth,
            format_ok: true,
            response_tokens: None,
            period: 4,
        }
    }

    #[test]
    fn perfect_answer_scores_exactly_one() {
        let t = col(&[1.0, 3.0, 2.0, 5.0, 1.0, 0.0, 2.0, 4.0]);
        let r = total_reward(input(Some(&t), &t), &RewardWeights::default()).unwrap();
        assert_eq!(r.total, 1.0);
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn checkpoint_at_e_minus_one() {
        assert!((accuracy_from_nmse(std::f64::consts::E - 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_format_is_at_most_minus_format_penalty() {
        let t = col(&[1.0, 2.0, 3.0]);
        let mut i = input(Some(&t), &t);
        i.format_ok = false;
        let r = total_reward(i, &RewardWeights::default()).unwrap();
        assert_eq!(r.total, -1.0);
        assert!(!r.format_ok);
    }

    #[test]
    fn token_budget_edge() {
        let t = col(&[1.0, 2.0, 3.0]);
        let w = RewardWeights::default();
        let mut i = input(Some(&t), &t);
        i.response_tokens = Some(4096);
        assert_eq!(total_reward(i, &w).unwrap().total, 1.0);
        i.response_tokens = Some(4097);
        assert!(total_reward(i, &w).unwrap().total < 1.0);
        let off = RewardWeights {
            terms: RewardTerms {
                length_penalty: false,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(total_reward(i, &off).unwrap().total, 1.0);
    }

    #[test]
    fn short_answer_is_scored_on_the_common_prefix() {
        let t = col(&[1.0, 2.0, 3.0, 4.0]);
        let a = col(&[1.0, 2.0, 3.0]);
        let r = total_reward(input(Some(&a), &t), &RewardWeights::default()).unwrap();
        assert_eq!(r.answer_length_delta, -1);
        assert_eq!(r.accuracy, 1.0);
        assert!((r.total - (1.0 - 0.2 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn anti_correlated_trend() {
        let t: Vec<f64> = (0..16).map(|x| x as f64).collect();
        let f: Vec<f64> = t.iter().map(|v| -v).collect();
        let s = component_consistency(col(&f).view(), col(&t).view(), Component::Trend, 4).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn default_weights_validate() {
        RewardWeights::default().validate().unwrap();
        let bad = RewardWeights {
            w_acc: 0.9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let e = RewardWeights::default().effective();
        assert_eq!(e, [0.6, 0.1, 0.1, 0.2]);
    }

    #[test]
    fn disabled_terms_rescale() {
        let w = RewardWeights {
            terms: RewardTerms {
                structural_alignment: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let e = w.effective();
        assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(e[3], 0.0);
    }
}
