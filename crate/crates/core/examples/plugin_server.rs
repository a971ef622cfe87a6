//! Serve the toolkit over HTTP and call it the way an external agent
//! framework would, including as a registered external forecaster.

use std::time::Duration;

use forecast_env::data::{make_windows, WindowSpec};
use forecast_env::models::{predict_time_series, ExternalEndpoint, ExternalRegistry, ForecastModelId};
use forecast_env::serve::serve_tools;
use forecast_env::toolkit::ToolConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = serve_tools("127.0.0.1:0", ToolConfig::default(), ExternalRegistry::default())?;
    println!("serving on {}", server.url());

    let registry: serde_json::Value = ureq::get(&format!("{}/registry", server.url())).call()?.into_json()?;
    println!("{} tools advertised", registry.as_array().map_or(0, Vec::len));

    let series = forecast_env::fixtures::seasonal(300, 24, 6);
    let window = make_windows(&series, &WindowSpec::new(96, 12))?.swap_remove(0);
    let mut externals = ExternalRegistry::default();
    externals.register(
        "served-ar",
        ExternalEndpoint::new(format!("{}/predict_time_series?model=ar:6", server.url())).with_timeout(Duration::from_secs(5)),
    );
    let remote = predict_time_series(&ForecastModelId::External { endpoint: "served-ar".into() }, &window, 12, &externals)?;
    let local = predict_time_series(&ForecastModelId::AutoRegressive { order: 6 }, &window, 12, &externals)?;
    println!("remote == local: {}", remote.values == local.values);
    println!("first steps: {:.3?}", &remote.rows()[..3]);
    Ok(())
}
