use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::Window;
use crate::stats;

const TOP_PEAKS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub bin: usize,
    /// Period in steps, `n / bin`.
    pub period: f64,
    pub magnitude: f64,
    /// Share of the non-zero-frequency power in this bin.
    pub power_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStatistics {
    pub name: String,
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub std: Option<f64>,
    pub mad: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub coefficient_of_variation: Option<f64>,
    /// Strongest non-zero DFT bins of the mean-removed channel; undefined when
    /// the channel has missing values.
    pub spectral_peaks: Option<Vec<SpectralPeak>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicStatistics {
    pub channels: Vec<ChannelStatistics>,
    /// Pairwise-complete Pearson correlations, ordered like `channels`.
    pub correlation: Vec<Vec<Option<f64>>>,
}

/// Top non-zero-frequency bins of the plain DFT of `x - mean(x)`, strongest first.
pub fn dft_peaks(x: &[f64], top: usize) -> Vec<SpectralPeak> {
    let n = x.len();
    if n < 2 {
        return Vec::new();
    }
    let m = stats::mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let bins: Vec<(usize, f64)> = (1..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in centered.iter().enumerate() {
                let angle = 2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            (k, (re * re + im * im).sqrt())
        })
        .collect();
    let total_power: f64 = bins.iter().map(|(_, mag)| mag * mag).sum();
    if total_power <= stats::ZERO_VARIANCE {
        return Vec::new();
    }
    let mut ranked = bins;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(top)
        .map(|(k, mag)| SpectralPeak {
            bin: k,
            period: n as f64 / k as f64,
            magnitude: mag,
            power_fraction: mag * mag / total_power,
        })
        .collect()
}

fn channel_statistics(name: &str, column: &[f64]) -> ChannelStatistics {
    let finite = stats::finite(column.iter().copied());
    if finite.len() < 2 {
        return ChannelStatistics {
            name: name.to_string(),
            count: finite.len(),
            mean: None,
            median: None,
            std: None,
            mad: None,
            min: None,
            max: None,
            skewness: None,
            excess_kurtosis: None,
            coefficient_of_variation: None,
            spectral_peaks: None,
        };
    }
    let mean = stats::mean(&finite);
    let std = stats::std_dev(&finite);
    let zero_spread = std * std <= stats::ZERO_VARIANCE;
    let cv = (!zero_spread && mean.abs() > 1e-12).then(|| std / mean.abs());
    ChannelStatistics {
        name: name.to_string(),
        count: finite.len(),
        mean: Some(mean),
        median: Some(stats::median(&finite)),
        std: Some(if zero_spread { 0.0 } else { std }),
        mad: Some(stats::mad(&finite)),
        min: finite.iter().copied().reduce(f64::min),
        max: finite.iter().copied().reduce(f64::max),
        skewness: stats::skewness(&finite),
        excess_kurtosis: stats::excess_kurtosis(&finite),
        coefficient_of_variation: cv,
        spectral_peaks: (finite.len() == column.len()).then(|| dft_peaks(&finite, TOP_PEAKS)),
    }
}

pub fn extract_basic_statistics(window: &Window, channels: &[usize]) -> BasicStatistics {
    let columns: Vec<Vec<f64>> = channels.iter().map(|&c| window.channel(c).to_vec()).collect();
    let per_channel = channels
        .iter()
        .zip(&columns)
        .map(|(&c, col)| channel_statistics(&window.channel_names[c], col))
        .collect();
    let correlation = columns
        .iter()
        .map(|a| {
            columns
                .iter()
                .map(|b| {
                    let (xa, xb): (Vec<f64>, Vec<f64>) = a
                        .iter()
                        .zip(b)
                        .filter(|(u, v)| u.is_finite() && v.is_finite())
                        .map(|(u, v)| (*u, *v))
                        .unzip();
                    stats::pearson(&xa, &xb)
                })
                .collect()
        })
        .collect();
    BasicStatistics {
        channels: per_channel,
        correlation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats_of(x: &[f64]) -> ChannelStatistics {
        let w = Window::univariate(x, None, 1);
        extract_basic_statistics(&w, &[0]).channels.remove(0)
    }

    #[test]
    fn one_to_five() {
        let s = stats_of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.median, Some(3.0));
        assert_eq!(s.mad, Some(1.0));
        assert_eq!(s.mean, Some(3.0));
        assert_eq!(s.skewness, Some(0.0));
        assert_eq!(s.min, Some(1.0));
        assert_eq!(s.max, Some(5.0));
        // excess kurtosis of a discrete uniform on 5 points: 6.8/4 - 3
        assert!((s.excess_kurtosis.unwrap() - (-1.3)).abs() < 1e-12);
    }

    #[test]
    fn constant_channel_has_undefined_shape_measures() {
        let s = stats_of(&[4.0; 10]);
        assert_eq!(s.std, Some(0.0));
        assert_eq!(s.mad, Some(0.0));
        assert_eq!(s.skewness, None);
        assert_eq!(s.coefficient_of_variation, None);
        assert_eq!(s.spectral_peaks, Some(vec![]));
    }

    #[test]
    fn sinusoid_dominant_period() {
        let x: Vec<f64> = (0..96).map(|t| 3.0 + (2.0 * PI * t as f64 / 24.0).sin()).collect();
        let s = stats_of(&x);
        let peaks = s.spectral_peaks.unwrap();
        assert_eq!(peaks[0].bin, 4);
        assert_eq!(peaks[0].period, 24.0);
        assert!(peaks[0].power_fraction > 0.999);
    }

    #[test]
    fn all_missing_is_undefined() {
        let s = stats_of(&[f64::NAN, f64::NAN, 1.0]);
        assert_eq!(s.count, 1);
        assert_eq!(s.mean, None);
    }

    #[test]
    fn correlation_is_pairwise_complete() {
        let h = ndarray::array![[1.0, 2.0], [2.0, f64::NAN], [3.0, 6.0], [4.0, 8.0]];
        let w = Window::from_parts(
            h,
            None,
            vec!["a".into(), "b".into()],
            crate::data::WindowSpec::new(4, 1),
            crate::data::parse_timestamp("2020-01-01").unwrap(),
            crate::data::Frequency::HOURLY,
        )
        .unwrap();
        let s = extract_basic_statistics(&w, &[0, 1]);
        assert!((s.correlation[0][1].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.channels[1].spectral_peaks, None);
    }
}
