use std::sync::Arc;

use chrono::NaiveDateTime;
use ndarray::{s, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::series::{Frequency, MultivariateSeries};
use super::DataError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lookback: usize,
    pub horizon: usize,
    pub stride: usize,
    /// Steps per dominant season, e.g. 24 for hourly data.
    pub seasonal_period: usize,
    /// Channels to forecast; empty means every channel.
    pub target_channels: Vec<String>,
    /// Channels copied into `Window::context` as exogenous covariates.
    #[serde(default)]
    pub context_channels: Vec<String>,
}

impl WindowSpec {
    pub fn new(lookback: usize, horizon: usize) -> Self {
        Self {
            lookback,
            horizon,
            stride: 1,
            seasonal_period: 24,
            target_channels: Vec::new(),
            context_channels: Vec::new(),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_period(mut self, period: usize) -> Self {
        self.seasonal_period = period;
        self
    }

    pub fn with_targets<I, S>(mut self, targets: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.target_channels = targets.into_iter().map(Into::into).collect();
        self
    }

    /// Checks positivity; with `seasonal` also requires `lookback >= seasonal_period`.
    pub fn validate(&self, seasonal: bool) -> Result<(), DataError> {
        if self.lookback == 0 || self.horizon == 0 || self.stride == 0 || self.seasonal_period == 0 {
            return Err(DataError::InvalidSpec(
                "lookback, horizon, stride and seasonal_period must be positive".into(),
            ));
        }
        if seasonal && self.lookback < self.seasonal_period {
            return Err(DataError::InvalidSpec(format!(
                "lookback {} shorter than seasonal period {}",
                self.lookback, self.seasonal_period
            )));
        }
        Ok(())
    }

    /// Number of windows a series of `len` rows yields.
    pub fn window_count(&self, len: usize) -> usize {
        let need = self.lookback + self.horizon;
        if len < need {
            0
        } else {
            (len - need) / self.stride + 1
        }
    }
}

/// One episode input: a look-back slice and, when available, the horizon that follows it.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `L x C`, every channel of the source series.
    pub history: Array2<f64>,
    pub context: Option<Array2<f64>>,
    /// `H x C_target`, present for evaluation and training windows.
    pub target: Option<Array2<f64>>,
    pub origin_index: usize,
    pub spec: Arc<WindowSpec>,
    pub channel_names: Vec<String>,
    /// Column indices of the target channels inside `history`.
    pub target_indices: Vec<usize>,
    /// Timestamp of the first history row.
    pub start: NaiveDateTime,
    pub frequency: Frequency,
}

impl Window {
    pub fn lookback(&self) -> usize {
        self.history.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn target_names(&self) -> Vec<String> {
        self.target_indices
            .iter()
            .map(|&i| self.channel_names[i].clone())
            .collect()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|c| c == name)
    }

    pub fn channel(&self, index: usize) -> ArrayView1<'_, f64> {
        self.history.column(index)
    }

    /// History restricted to the target channels, `L x C_target`.
    pub fn target_history(&self) -> Array2<f64> {
        self.history.select(Axis(1), &self.target_indices)
    }

    /// Timestamp of history row `i`; `i >= L` addresses the horizon.
    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + self.frequency.as_delta() * i as i32
    }

    /// Timestamp of the first forecast step.
    pub fn forecast_start(&self) -> NaiveDateTime {
        self.timestamp(self.lookback())
    }

    /// Builds a standalone window (no source series) from raw matrices, for
    /// fixtures and external callers.
    pub fn from_parts(
        history: Array2<f64>,
        target: Option<Array2<f64>>,
        channel_names: Vec<String>,
        spec: WindowSpec,
        start: NaiveDateTime,
        frequency: Frequency,
    ) -> Result<Self, DataError> {
        if history.ncols() != channel_names.len() {
            return Err(DataError::Shape("history columns != channel names".into()));
        }
        if history.nrows() != spec.lookback {
            return Err(DataError::Shape(format!(
                "history has {} rows, lookback is {}",
                history.nrows(),
                spec.lookback
            )));
        }
        let target_indices = resolve_targets(&channel_names, &spec.target_channels)?;
        if let Some(t) = &target {
            if t.nrows() != spec.horizon || t.ncols() != target_indices.len() {
                return Err(DataError::Shape(format!(
                    "target is {}x{}, expected {}x{}",
                    t.nrows(),
                    t.ncols(),
                    spec.horizon,
                    target_indices.len()
                )));
            }
        }
        Ok(Window {
            history,
            context: None,
            target,
            origin_index: 0,
            spec: Arc::new(spec),
            channel_names,
            target_indices,
            start,
            frequency,
        })
    }

    /// Single-channel convenience constructor used throughout tests and examples.
    pub fn univariate(history: &[f64], target: Option<&[f64]>, period: usize) -> Self {
        let spec = WindowSpec::new(history.len(), target.map_or(1, |t| t.len().max(1))).with_period(period);
        let h = Array2::from_shape_vec((history.len(), 1), history.to_vec()).expect("column");
        let t = target.map(|t| Array2::from_shape_vec((t.len(), 1), t.to_vec()).expect("column"));
        let start = chrono::NaiveDate::from_ymd_opt(2020, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("valid date");
        Window::from_parts(h, t, vec!["y".into()], spec, start, Frequency::HOURLY).expect("consistent univariate window")
    }
}

fn resolve_targets(channel_names: &[String], targets: &[String]) -> Result<Vec<usize>, DataError> {
    if targets.is_empty() {
        return Ok((0..channel_names.len()).collect());
    }
    targets
        .iter()
        .map(|t| {
            channel_names
                .iter()
                .position(|c| c == t)
                .ok_or_else(|| DataError::MissingColumn(t.clone()))
        })
        .collect()
}

/// Enumerates windows at `stride` spacing; window `i` starts at row `i * stride`.
pub fn make_windows(series: &MultivariateSeries, spec: &WindowSpec) -> Result<Vec<Window>, DataError> {
    spec.validate(false)?;
    let need = spec.lookback + spec.horizon;
    if series.len() < need {
        return Err(DataError::TooShort {
            required: need,
            found: series.len(),
        });
    }
    let target_indices = resolve_targets(series.channel_names(), &spec.target_channels)?;
    let context_indices = resolve_targets(series.channel_names(), &spec.context_channels)?;
    let shared = Arc::new(spec.clone());
    let values = series.values();
    let count = spec.window_count(series.len());
    let windows = (0..count)
        .map(|i| {
            let origin = i * spec.stride;
            let hist_end = origin + spec.lookback;
            let history = values.slice(s![origin..hist_end, ..]).to_owned();
            let target = values
                .slice(s![hist_end..hist_end + spec.horizon, ..])
                .select(Axis(1), &target_indices);
            let context = (!spec.context_channels.is_empty())
                .then(|| history.select(Axis(1), &context_indices));
            Window {
                history,
                context,
                target: Some(target),
                origin_index: origin,
                spec: Arc::clone(&shared),
                channel_names: series.channel_names().to_vec(),
                target_indices: target_indices.clone(),
                start: series.timestamps()[origin],
                frequency: series.frequency(),
            }
        })
        .collect();
    Ok(windows)
}
