//! Small numeric helpers shared by the toolkit, reward and curriculum code.
//!
//! Dispersion measures are population (1/N) throughout.

use serde::{Deserialize, Serialize};

/// Variances below this are treated as zero dispersion.
pub const ZERO_VARIANCE: f64 = 1e-24;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Finite values only.
pub fn finite(x: impl IntoIterator<Item = f64>) -> Vec<f64> {
    x.into_iter().filter(|v| v.is_finite()).collect()
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Linear-interpolation quantile (the "type 7" estimator).
pub fn quantile(x: &[f64], q: f64) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let s = sorted(x);
    quantile_sorted(&s, q)
}

pub fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        s[lo]
    } else {
        s[lo] + (s[hi] - s[lo]) * frac
    }
}

/// Median absolute deviation from the median (unscaled).
pub fn mad(x: &[f64]) -> f64 {
    let m = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Population skewness `m3 / m2^1.5`; `None` for zero variance.
pub fn skewness(x: &[f64]) -> Option<f64> {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    if m2 <= ZERO_VARIANCE {
        return None;
    }
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    Some(m3 / m2.powf(1.5))
}

/// Excess kurtosis `m4 / m2^2 - 3`; `None` for zero variance.
pub fn excess_kurtosis(x: &[f64]) -> Option<f64> {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    if m2 <= ZERO_VARIANCE {
        return None;
    }
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    Some(m4 / (m2 * m2) - 3.0)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= ZERO_VARIANCE * x.len() as f64 || syy <= ZERO_VARIANCE * y.len() as f64 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ordinary least-squares line against the index `0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Share of variance explained; `None` when `y` is constant.
    pub r_squared: Option<f64>,
}

pub fn ols_line(y: &[f64]) -> LineFit {
    let n = y.len();
    if n < 2 {
        return LineFit {
            intercept: y.first().copied().unwrap_or(f64::NAN),
            slope: 0.0,
            r_squared: None,
        };
    }
    let tbar = (n - 1) as f64 / 2.0;
    let ybar = mean(y);
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for (t, v) in y.iter().enumerate() {
        let dt = t as f64 - tbar;
        let dy = v - ybar;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let r_squared = (syy > ZERO_VARIANCE * n as f64).then(|| ((slope * sty) / syy).clamp(0.0, 1.0));
    LineFit {
        intercept: ybar - slope * tbar,
        slope,
        r_squared,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extremum {
    pub index: usize,
    pub kind: ExtremumKind,
}

/// Strict local extrema over a `±radius` neighbourhood. Only indices with a
/// complete neighbourhood qualify, so endpoints of a monotone run never count.
pub fn local_extrema(x: &[f64], radius: usize) -> Vec<Extremum> {
    let n = x.len();
    if radius == 0 || n < 2 * radius + 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in radius..n - radius {
        let v = x[i];
        if !v.is_finite() {
            continue;
        }
        let neighbours = (i - radius..=i + radius).filter(|&j| j != i).map(|j| x[j]);
        let mut is_max = true;
        let mut is_min = true;
        for w in neighbours {
            if !w.is_finite() {
                is_max = false;
                is_min = false;
                break;
            }
            is_max &= v > w;
            is_min &= v < w;
        }
        if is_max {
            out.push(Extremum { index: i, kind: ExtremumKind::Maximum });
        } else if is_min {
            out.push(Extremum { index: i, kind: ExtremumKind::Minimum });
        }
    }
    out
}
