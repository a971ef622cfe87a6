use serde::{Deserialize, Serialize};

use super::RewardError;

/// Additive split `series = trend + seasonal + residual`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
}

/// Centered moving-average weights: width `p` for odd `p`, the `2 x p`
/// filter (half weights at both ends) for even `p`.
fn ma_weights(p: usize) -> Vec<f64> {
    if p % 2 == 1 {
        vec![1.0 / p as f64; p]
    } else {
        let mut w = vec![1.0 / p as f64; p + 1];
        w[0] = 0.5 / p as f64;
        w[p] = 0.5 / p as f64;
        w
    }
}

fn centered_ma(x: &[f64], width: usize) -> Vec<f64> {
    let weights = ma_weights(width);
    let n = x.len();
    let k = weights.len();
    let half = k / 2;
    if n < k {
        let m = x.iter().sum::<f64>() / n as f64;
        return vec![m; n];
    }
    let mut trend = vec![0.0; n];
    for c in half..n - half {
        trend[c] = weights.iter().zip(&x[c - half..=c + half]).map(|(w, v)| w * v).sum();
    }
    let (first, last) = (trend[half], trend[n - half - 1]);
    trend[..half].fill(first);
    trend[n - half..].fill(last);
    trend
}

/// Classical moving-average decomposition. The trend is a centered moving
/// average one period wide, held flat over the edges it cannot reach; a series
/// shorter than that window uses the widest odd window that fits in half of
/// it. The seasonal part is the de-meaned per-phase mean of the detrended
/// series and needs at least two full periods, otherwise it is zero.
pub fn decompose(series: &[f64], period: usize) -> Result<Decomposition, RewardError> {
    if period < 2 {
        return Err(RewardError::InvalidPeriod(period));
    }
    let n = series.len();
    if n == 0 {
        return Ok(Decomposition {
            trend: vec![],
            seasonal: vec![],
            residual: vec![],
        });
    }
    let full_window = ma_weights(period).len();
    let width = if n >= full_window {
        period
    } else {
        let half = (n / 2).max(1);
        if half % 2 == 1 {
            half
        } else {
            half - 1
        }
    };
    let trend = centered_ma(series, width);

    let mut seasonal = vec![0.0; n];
    if n >= 2 * period {
        let mut sums = vec![0.0; period];
        let mut counts = vec![0usize; period];
        for (t, (x, tr)) in series.iter().zip(&trend).enumerate() {
            sums[t % period] += x - tr;
            counts[t % period] += 1;
        }
        let phase: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect();
        let offset = phase.iter().sum::<f64>() / period as f64;
        for (t, s) in seasonal.iter_mut().enumerate() {
            *s = phase[t % period] - offset;
        }
    }
    let residual = series
        .iter()
        .zip(&trend)
        .zip(&seasonal)
        .map(|((x, t), s)| x - t - s)
        .collect();
    Ok(Decomposition {
        trend,
        seasonal,
        residual,
    })
}
