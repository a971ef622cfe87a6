use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::series::MultivariateSeries;

/// Standard deviations below this are treated as zero.
pub const STD_TOLERANCE: f64 = 1e-12;

/// Per-channel population mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreStats {
    pub mean: Vec<f64>,
    /// Effective divisor; 1.0 for flagged constant channels.
    pub std: Vec<f64>,
    /// Channels whose measured std fell below [`STD_TOLERANCE`].
    pub constant: Vec<bool>,
}

impl ZScoreStats {
    pub fn fit(values: &Array2<f64>) -> Self {
        let mut mean = Vec::with_capacity(values.ncols());
        let mut std = Vec::with_capacity(values.ncols());
        let mut constant = Vec::with_capacity(values.ncols());
        for col in values.columns() {
            let finite: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            let n = finite.len().max(1) as f64;
            let m = finite.iter().sum::<f64>() / n;
            let var = finite.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            let flat = sd < STD_TOLERANCE;
            mean.push(m);
            std.push(if flat { 1.0 } else { sd });
            constant.push(flat);
        }
        Self { mean, std, constant }
    }

    pub fn normalize(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std[j]);
        }
        out
    }

    pub fn denormalize(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| v * self.std[j] + self.mean[j]);
        }
        out
    }
}

/// Z-score normalizes a series. Pass `stats` to reuse statistics fit elsewhere
/// (e.g. on the training split).
pub fn zscore(series: &MultivariateSeries, stats: Option<&ZScoreStats>) -> (MultivariateSeries, ZScoreStats) {
    let stats = stats.cloned().unwrap_or_else(|| ZScoreStats::fit(series.values()));
    (series.with_values(stats.normalize(series.values())), stats)
}

pub fn denormalize(series: &MultivariateSeries, stats: &ZScoreStats) -> MultivariateSeries {
    series.with_values(stats.denormalize(series.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn constant_channel_is_flagged_and_zeroed() {
        let stats = ZScoreStats::fit(&array![[5.0], [5.0], [5.0]]);
        assert!(stats.constant[0]);
        assert_eq!(stats.std[0], 1.0);
        assert_eq!(stats.normalize(&array![[5.0], [5.0], [5.0]]).column(0).to_vec(), vec![0.0; 3]);
    }

    #[test]
    fn one_two_three() {
        let x = array![[1.0], [2.0], [3.0]];
        let stats = ZScoreStats::fit(&x);
        // population std of {1,2,3} is sqrt(2/3)
        let sd = (2.0f64 / 3.0).sqrt();
        assert_eq!(stats.mean[0], 2.0);
        assert!((stats.std[0] - sd).abs() < 1e-15);
        assert!((stats.std[0] - 0.8165).abs() < 1e-4);
        let z = stats.normalize(&x);
        for (got, want) in z.column(0).iter().zip([-1.0 / sd, 0.0, 1.0 / sd]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((z[[0, 0]] + 1.2247).abs() < 1e-4);
    }

    #[test]
    fn missing_values_pass_through() {
        let x = array![[1.0], [f64::NAN], [3.0]];
        let stats = ZScoreStats::fit(&x);
        assert_eq!(stats.mean[0], 2.0);
        let z = stats.normalize(&x);
        assert!(z[[1, 0]].is_nan());
    }
}
