//! Built-in forecasters behind one prediction interface, plus a client for
//! externally served models.

mod ar;
mod builtin;
mod external;

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::Window;

pub use ar::{fit_ar, ArFit, RIDGE_LAMBDA};
pub use builtin::{fitted_one_step, forecast_channel};
pub use external::{
    call_external, ExternalEndpoint, ExternalRegistry, PluginRequest, PluginResponse, DEFAULT_TIMEOUT,
};

/// Upper bound on the default AR order.
pub const MAX_DEFAULT_AR_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ForecastModelId {
    Naive,
    SeasonalNaive { period: usize },
    Drift,
    MovingAverage { window: usize },
    AutoRegressive { order: usize },
    External { endpoint: String },
}

impl ForecastModelId {
    /// AR order used when none is given: a quarter of the season, capped at 8.
    pub fn default_ar_order(seasonal_period: usize) -> usize {
        (seasonal_period / 4).clamp(1, MAX_DEFAULT_AR_ORDER)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::SeasonalNaive { .. } => "seasonal_naive",
            Self::Drift => "drift",
            Self::MovingAverage { .. } => "moving_average",
            Self::AutoRegressive { .. } => "auto_regressive",
            Self::External { .. } => "external",
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, Self::External { .. })
    }

    /// Minimum look-back the variant needs.
    pub fn min_history(&self) -> usize {
        match self {
            Self::Naive => 1,
            Self::SeasonalNaive { period } => *period,
            Self::Drift => 2,
            Self::MovingAverage { window } => *window,
            Self::AutoRegressive { order } => 3 * order,
            Self::External { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::SeasonalNaive { period: 0 } => Err(ModelError::InvalidParams("period must be positive".into())),
            Self::MovingAverage { window: 0 } => Err(ModelError::InvalidParams("window must be positive".into())),
            Self::AutoRegressive { order: 0 } => Err(ModelError::InvalidParams("order must be positive".into())),
            Self::External { endpoint } if endpoint.trim().is_empty() => {
                Err(ModelError::InvalidParams("external endpoint name is empty".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ForecastModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SeasonalNaive { period } => write!(f, "seasonal_naive(period={period})"),
            Self::MovingAverage { window } => write!(f, "moving_average(window={window})"),
            Self::AutoRegressive { order } => write!(f, "auto_regressive(order={order})"),
            Self::External { endpoint } => write!(f, "external({endpoint})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Optional per-model fit details carried alongside a forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitNote {
    AutoRegressive { fits: Vec<ArFit> },
    External { model_name: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// `H x C_target`.
    pub values: Array2<f64>,
    pub model_id: ForecastModelId,
    pub fit_note: Option<FitNote>,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.values.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ForecastDocument {
    model_id: ForecastModelId,
    values: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    fit_note: Option<FitNote>,
}

impl Serialize for Forecast {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ForecastDocument {
            model_id: self.model_id.clone(),
            values: self.rows(),
            fit_note: self.fit_note.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Forecast {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = ForecastDocument::deserialize(deserializer)?;
        let values = rows_to_matrix(&doc.values).map_err(serde::de::Error::custom)?;
        Ok(Forecast {
            values,
            model_id: doc.model_id,
            fit_note: doc.fit_note,
        })
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err("ragged rows".into());
    }
    Array2::from_shape_vec((rows.len(), cols), rows.concat()).map_err(|e| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("insufficient history: model needs {need} steps, window has {found}")]
    InsufficientHistory { need: usize, found: usize },
    #[error("history contains missing values")]
    MissingHistory,
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("external endpoint {0:?} is not registered")]
    UnknownEndpoint(String),
    #[error("external endpoint {endpoint:?} timed out after {seconds:.1}s")]
    Timeout { endpoint: String, seconds: f64 },
    #[error("external endpoint {endpoint:?} unreachable: {message}")]
    Transport { endpoint: String, message: String },
    #[error("external endpoint {endpoint:?} rejected the request ({status}): {body}")]
    Contract { endpoint: String, status: u16, body: String },
    #[error("external endpoint {endpoint:?} upstream failure ({status})")]
    Upstream { endpoint: String, status: u16 },
    #[error("external endpoint {endpoint:?} returned a malformed response: {message}")]
    Malformed { endpoint: String, message: String },
    #[error("forecast shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("forecast contains non-finite values")]
    NonFinite,
}

/// Runs `model` on the window's target channels for `horizon` steps.
pub fn predict_time_series(
    model: &ForecastModelId,
    window: &Window,
    horizon: usize,
    externals: &ExternalRegistry,
) -> Result<Forecast, ModelError> {
    model.validate()?;
    if horizon == 0 {
        return Err(ModelError::InvalidParams("horizon must be positive".into()));
    }
    let history = window.target_history();
    let forecast = match model {
        ForecastModelId::External { endpoint } => {
            let ep = externals
                .get(endpoint)
                .ok_or_else(|| ModelError::UnknownEndpoint(endpoint.clone()))?;
            let request = PluginRequest {
                history: history.rows().into_iter().map(|r| r.to_vec()).collect(),
                channel_names: window.target_names(),
                horizon,
                frequency: window.frequency.to_string(),
            };
            let response = call_external(endpoint, ep, &request)?;
            Forecast {
                values: response.0,
                model_id: model.clone(),
                fit_note: Some(FitNote::External { model_name: response.1 }),
            }
        }
        builtin_model => {
            let mut values = Array2::zeros((horizon, history.ncols()));
            let mut ar_fits = Vec::new();
            for (c, col) in history.columns().into_iter().enumerate() {
                let series = col.to_vec();
                let (path, fit) = forecast_channel(builtin_model, &series, horizon)?;
                values.column_mut(c).assign(&ndarray::Array1::from(path));
                ar_fits.extend(fit);
            }
            let fit_note = (!ar_fits.is_empty()).then_some(FitNote::AutoRegressive { fits: ar_fits });
            Forecast {
                values,
                model_id: builtin_model.clone(),
                fit_note,
            }
        }
    };
    validate_forecast(&forecast.values, horizon, history.ncols())?;
    Ok(forecast)
}

fn validate_forecast(values: &Array2<f64>, horizon: usize, channels: usize) -> Result<(), ModelError> {
    if values.dim() != (horizon, channels) {
        return Err(ModelError::ShapeMismatch {
            expected: (horizon, channels),
            found: values.dim(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok(())
}
