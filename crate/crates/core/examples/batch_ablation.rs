//! Batch evaluation of the full scripted pipeline and two ablations on the
//! seasonal fixture.

use forecast_env::eval::{run_batch, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = RunConfig::parse(
        "data.fixture = seasonal\nwindow.lookback = 96\nwindow.horizon = 24\neval.stride = 4\n",
    )?;
    for (label, key) in [
        ("full", None),
        ("w/o feature tools", Some("ablation.disable_feature_tools")),
        ("w/o model tools", Some("ablation.disable_model_tools")),
    ] {
        let mut config = base.clone();
        if let Some(k) = key {
            config.set(k, "true")?;
        }
        let policy = config.build_policy();
        let result = run_batch(&config, policy.as_ref(), None)?;
        println!("== {label} ==\n{}", result.report.table());
    }
    Ok(())
}
