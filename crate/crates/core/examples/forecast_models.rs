//! Backtest each built-in forecaster on a few windows and inspect an AR fit.

use forecast_env::data::{make_windows, WindowSpec};
use forecast_env::eval::{mae, mse};
use forecast_env::models::{fit_ar, predict_time_series, ExternalRegistry, ForecastModelId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = forecast_env::fixtures::etth1_like(2);
    let spec = WindowSpec::new(168, 24).with_stride(97).with_targets(["OT"]);
    let windows: Vec<_> = make_windows(&series, &spec)?.into_iter().take(40).collect();
    let models = [
        ForecastModelId::Naive,
        ForecastModelId::SeasonalNaive { period: 24 },
        ForecastModelId::Drift,
        ForecastModelId::MovingAverage { window: 24 },
        ForecastModelId::AutoRegressive { order: 6 },
    ];
    let ext = ExternalRegistry::default();
    println!("{:<28} {:>10} {:>10}", "model", "MSE", "MAE");
    for m in &models {
        let (mut e2, mut e1) = (0.0, 0.0);
        for w in &windows {
            let f = predict_time_series(m, w, 24, &ext)?;
            let truth = w.target.as_ref().expect("test windows carry targets");
            e2 += mse(f.values.view(), truth.view())?;
            e1 += mae(f.values.view(), truth.view())?;
        }
        let n = windows.len() as f64;
        println!("{:<28} {:>10.4} {:>10.4}", m.to_string(), e2 / n, e1 / n);
    }

    let history: Vec<f64> = windows[0].target_history().column(0).to_vec();
    let fit = fit_ar(&history, 3)?;
    println!("\nAR(3) on window 0: intercept {:.4}, coefficients {:.4?}", fit.intercept, fit.coefficients);
    println!("next 4 steps: {:.3?}", fit.forecast(&history, 4));
    Ok(())
}
