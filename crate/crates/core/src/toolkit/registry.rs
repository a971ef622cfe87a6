use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ToolName;
use crate::memory::Stage;

pub const PREDICT_TIME_SERIES: &str = "predict_time_series";

/// Discovery record for one callable action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    /// JSON-schema style description of the `arguments` object.
    pub parameters: serde_json::Value,
    /// Stages at which the action is admissible.
    pub stages: Vec<Stage>,
}

fn channel_param() -> serde_json::Value {
    json!({"type": "string", "description": "restrict to one channel; default covers all target channels"})
}

fn describe(tool: ToolName) -> (&'static str, serde_json::Value) {
    match tool {
        ToolName::ExtractDataQuality => (
            "Missing values, constant channels, saturation plateaus and abnormal-value share per channel.",
            json!({"type": "object", "properties": {"channel": channel_param()}}),
        ),
        ToolName::ExtractBasicStatistics => (
            "Central tendency, dispersion, shape, cross-channel correlation and dominant DFT periods.",
            json!({"type": "object", "properties": {"channel": channel_param()}}),
        ),
        ToolName::ExtractWithinChannelDynamics => (
            "Changepoints, slopes between them, stable stretches, local extrema and permutation entropy.",
            json!({"type": "object", "properties": {"channel": channel_param()}}),
        ),
        ToolName::SummarizeEvents => (
            "Fixed-length segments labelled Rise, Decline, Stable or Oscillation with label prevalence.",
            json!({"type": "object", "properties": {"channel": channel_param()}}),
        ),
        ToolName::DiagnoseResiduals => (
            "In-sample one-step residuals of a baseline model: moments, autocorrelation, Ljung-Box, tails.",
            json!({
                "type": "object",
                "properties": {"channel": channel_param(), "baseline": {"type": "object", "description": "built-in model, e.g. {\"model\": \"naive\"}"}},
                "required": ["baseline"]
            }),
        ),
    }
}

/// Every admissible action name in a fixed order: the five diagnostic tools,
/// then the prediction interface.
pub fn tool_registry() -> Vec<ToolSpec> {
    let mut specs: Vec<ToolSpec> = ToolName::ALL
        .into_iter()
        .map(|tool| {
            let (description, parameters) = describe(tool);
            ToolSpec {
                name: tool.as_str().to_string(),
                description: description.to_string(),
                parameters,
                stages: vec![Stage::FeatureExtraction],
            }
        })
        .collect();
    specs.push(ToolSpec {
        name: PREDICT_TIME_SERIES.to_string(),
        description: "Forecast the target channels with a built-in or registered external model.".to_string(),
        parameters: json!({
            "type": "object",
            "properties": {
                "model": {"type": "string", "enum": ["naive", "seasonal_naive", "drift", "moving_average", "auto_regressive", "external"]},
                "period": {"type": "integer"},
                "window": {"type": "integer"},
                "order": {"type": "integer"},
                "endpoint": {"type": "string"}
            },
            "required": ["model"]
        }),
        stages: vec![Stage::Prediction],
    });
    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_diagnostics_and_one_predictor() {
        let reg = tool_registry();
        assert_eq!(reg.len(), 6);
        assert_eq!(reg[5].name, PREDICT_TIME_SERIES);
        let turn_one: Vec<_> = reg.iter().filter(|s| s.stages.contains(&Stage::FeatureExtraction)).collect();
        assert_eq!(turn_one.len(), 5);
        assert!(reg[..5].iter().all(|s| !s.stages.contains(&Stage::Prediction)));
        assert!(reg.iter().any(|s| s.name == "extract_data_quality"));
    }

    #[test]
    fn entries_round_trip() {
        for spec in tool_registry() {
            let text = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<ToolSpec>(&text).unwrap(), spec);
        }
        assert_eq!(tool_registry(), tool_registry());
    }
}
