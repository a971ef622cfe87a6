use serde::{Deserialize, Serialize};

use super::ToolError;
use crate::data::Window;
use crate::models::{fitted_one_step, ForecastModelId};
use crate::stats;

const MAX_LAGS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub name: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    /// Sample autocorrelations at lags `1..=lags.len()`.
    pub autocorrelation: Vec<f64>,
    pub ljung_box_q: f64,
    /// Residuals farther than three standard deviations from zero.
    pub extreme_count: usize,
    /// 99th percentile of `|residual|` over the residual std.
    pub tail_ratio: Option<f64>,
}

/// Sample autocorrelation `sum (x_t - m)(x_{t-k} - m) / sum (x_t - m)^2` for
/// `k = 1..=max_lag`. A zero-variance input yields zeros.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let m = stats::mean(x);
    let dev: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    (1..=max_lag)
        .map(|k| {
            if denom <= stats::ZERO_VARIANCE * x.len() as f64 || k >= x.len() {
                return 0.0;
            }
            dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum::<f64>() / denom
        })
        .collect()
}

/// Ljung-Box statistic `n (n + 2) sum r_k^2 / (n - k)`.
pub fn ljung_box(acf: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    acf.iter()
        .enumerate()
        .filter(|(i, _)| i + 1 < n)
        .map(|(i, r)| r * r / (nf - (i + 1) as f64))
        .sum::<f64>()
        * nf
        * (nf + 2.0)
}

pub fn diagnose_residuals(
    window: &Window,
    channel: usize,
    baseline: &ForecastModelId,
) -> Result<ResidualDiagnostics, ToolError> {
    let history: Vec<f64> = window.channel(channel).to_vec();
    let fitted = fitted_one_step(baseline, &history)?;
    let residuals: Vec<f64> = history
        .iter()
        .zip(&fitted)
        .filter_map(|(obs, fit)| fit.map(|f| obs - f))
        .collect();
    if residuals.len() < 2 {
        return Err(ToolError::TooShort {
            channel: window.channel_names[channel].clone(),
            need: baseline.min_history().max(1) + 2,
            found: history.len(),
        });
    }

    let std = stats::std_dev(&residuals);
    let zero_spread = std * std <= stats::ZERO_VARIANCE;
    let lags = (window.lookback() / 4).min(MAX_LAGS).min(residuals.len() - 1).max(1);
    let acf = autocorrelation(&residuals, lags);
    let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    Ok(ResidualDiagnostics {
        name: window.channel_names[channel].clone(),
        count: residuals.len(),
        mean: stats::mean(&residuals),
        std: if zero_spread { 0.0 } else { std },
        skewness: stats::skewness(&residuals),
        excess_kurtosis: stats::excess_kurtosis(&residuals),
        ljung_box_q: ljung_box(&acf, residuals.len()),
        autocorrelation: acf,
        extreme_count: if zero_spread { 0 } else { abs.iter().filter(|a| **a > 3.0 * std).count() },
        tail_ratio: (!zero_spread).then(|| stats::quantile(&abs, 0.99) / std),
    })
}
