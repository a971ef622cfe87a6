use super::ar::{fit_ar, ArFit};
use super::{ForecastModelId, ModelError};

/// Forecasts one channel with a built-in model. Returns the path and, for AR,
/// the fitted coefficients.
pub fn forecast_channel(
    model: &ForecastModelId,
    history: &[f64],
    horizon: usize,
) -> Result<(Vec<f64>, Option<ArFit>), ModelError> {
    let need = model.min_history();
    if history.len() < need {
        return Err(ModelError::InsufficientHistory {
            need,
            found: history.len(),
        });
    }
    if history.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::MissingHistory);
    }
    let n = history.len();
    let last = history[n - 1];
    let path = match model {
        ForecastModelId::Naive => vec![last; horizon],
        ForecastModelId::SeasonalNaive { period } => {
            let season = &history[n - period..];
            (0..horizon).map(|h| season[h % period]).collect()
        }
        ForecastModelId::Drift => {
            let slope = (last - history[0]) / (n - 1) as f64;
            (1..=horizon).map(|h| last + h as f64 * slope).collect()
        }
        ForecastModelId::MovingAverage { window } => {
            let m = history[n - window..].iter().sum::<f64>() / *window as f64;
            vec![m; horizon]
        }
        ForecastModelId::AutoRegressive { order } => {
            let fit = fit_ar(history, *order)?;
            return Ok((fit.forecast(history, horizon), Some(fit)));
        }
        ForecastModelId::External { endpoint } => {
            return Err(ModelError::InvalidParams(format!(
                "external model {endpoint:?} has no in-process implementation"
            )))
        }
    };
    Ok((path, None))
}

/// In-sample one-step-ahead fitted values; `None` where the model has too
/// little past to predict.
pub fn fitted_one_step(model: &ForecastModelId, history: &[f64]) -> Result<Vec<Option<f64>>, ModelError> {
    let n = history.len();
    let need = model.min_history();
    if n < need.max(2) {
        return Err(ModelError::InsufficientHistory { need: need.max(2), found: n });
    }
    if history.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::MissingHistory);
    }
    let fitted = match model {
        ForecastModelId::Naive => (0..n).map(|t| (t >= 1).then(|| history[t - 1])).collect(),
        ForecastModelId::SeasonalNaive { period } => {
            (0..n).map(|t| (t >= *period).then(|| history[t - period])).collect()
        }
        ForecastModelId::Drift => {
            let slope = (history[n - 1] - history[0]) / (n - 1) as f64;
            (0..n).map(|t| (t >= 1).then(|| history[t - 1] + slope)).collect()
        }
        ForecastModelId::MovingAverage { window } => (0..n)
            .map(|t| (t >= *window).then(|| history[t - window..t].iter().sum::<f64>() / *window as f64))
            .collect(),
        ForecastModelId::AutoRegressive { order } => {
            let fit = fit_ar(history, *order)?;
            (0..n)
                .map(|t| (t >= *order).then(|| fit.predict_next(&history[..t])))
                .collect()
        }
        ForecastModelId::External { endpoint } => {
            return Err(ModelError::InvalidParams(format!(
                "residual diagnostics need a built-in baseline, got external {endpoint:?}"
            )))
        }
    };
    Ok(fitted)
}
