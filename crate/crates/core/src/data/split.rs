use super::series::MultivariateSeries;
use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.7, val: 0.1, test: 0.2 }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, DataError> {
        let r = Self { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) || self.train <= 0.0 {
            return Err(DataError::InvalidRatios(parts));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DataError::InvalidRatios(parts));
        }
        Ok(())
    }

    /// Row counts for a series of `len` rows; the test split takes the remainder.
    pub fn lengths(&self, len: usize) -> (usize, usize, usize) {
        // the epsilon absorbs representation error in products like 0.7 * 17420
        let take = |r: f64| ((len as f64) * r + 1e-9).floor() as usize;
        let train = take(self.train).min(len);
        let val = take(self.val).min(len - train);
        (train, val, len - train - val)
    }
}

/// Contiguous train/val/test split in time order.
pub fn split(
    series: &MultivariateSeries,
    ratios: SplitRatios,
) -> Result<(MultivariateSeries, MultivariateSeries, MultivariateSeries), DataError> {
    ratios.validate()?;
    let (train, val, _) = ratios.lengths(series.len());
    Ok((
        series.slice_rows(0, train),
        series.slice_rows(train, train + val),
        series.slice_rows(train + val, series.len()),
    ))
}
