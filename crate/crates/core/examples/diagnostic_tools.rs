//! Run every diagnostic tool on one window and print the payloads.

use forecast_env::data::{make_windows, WindowSpec};
use forecast_env::models::ForecastModelId;
use forecast_env::toolkit::{run_tool, tool_registry, ToolArgs, ToolConfig, ToolName};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = forecast_env::fixtures::etth1_like(1);
    let spec = WindowSpec::new(168, 24).with_targets(["OT"]);
    let window = make_windows(&series, &spec)?.swap_remove(500);

    println!("registry:");
    for t in tool_registry() {
        println!("  {}", t.name);
    }

    let config = ToolConfig::default();
    for tool in [
        ToolName::ExtractDataQuality,
        ToolName::ExtractBasicStatistics,
        ToolName::SummarizeEvents,
        ToolName::ExtractWithinChannelDynamics,
    ] {
        let args = ToolArgs {
            channel: Some("OT".into()),
            ..ToolArgs::default()
        };
        let result = run_tool(tool, &window, &args, &config, 1)?;
        println!("\n== {} ==\n{}", tool.as_str(), serde_json::to_string_pretty(&result.payload)?);
    }

    let args = ToolArgs {
        channel: Some("OT".into()),
        baseline: Some(ForecastModelId::SeasonalNaive { period: 24 }),
    };
    let residuals = run_tool(ToolName::DiagnoseResiduals, &window, &args, &config, 1)?;
    println!("\n== diagnose_residuals ==\n{}", serde_json::to_string_pretty(&residuals.payload)?);
    Ok(())
}
