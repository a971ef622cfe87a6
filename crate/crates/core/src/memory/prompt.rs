use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Memory, PredictionRecord, Stage};
use crate::data::{Window, TIMESTAMP_FORMAT};
use crate::toolkit::{tool_registry, ToolResult, PREDICT_TIME_SERIES};

/// Name of the terminal action in whitelists.
pub const FINAL_ANSWER: &str = "final_answer";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    /// Recent steps shown at the reflect/output stage.
    pub trunc_len: usize,
    pub decimals: usize,
    /// When false the prediction stage offers no actions.
    pub model_tools: bool,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            trunc_len: 48,
            decimals: 4,
            model_tools: true,
        }
    }
}

/// Admissible action names per stage.
pub fn whitelist(stage: Stage, config: &PromptConfig) -> Vec<String> {
    match stage {
        Stage::FeatureExtraction => tool_registry()
            .into_iter()
            .filter(|s| s.stages.contains(&Stage::FeatureExtraction))
            .map(|s| s.name)
            .collect(),
        Stage::Prediction if config.model_tools => vec![PREDICT_TIME_SERIES.to_string()],
        Stage::Prediction => Vec::new(),
        Stage::ReflectOutput => vec![FINAL_ANSWER.to_string()],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    /// Timestamp of the first shown row.
    pub start: String,
    pub channel_names: Vec<String>,
    /// Shown rows, oldest first; missing values are `None`.
    pub rows: Vec<Vec<Option<f64>>>,
    pub total_length: usize,
    pub truncated: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub stage: Stage,
    pub horizon: usize,
    pub target_channels: Vec<String>,
    pub frequency: String,
    pub forecast_start: String,
    pub seasonal_period: usize,
    pub history_view: HistoryView,
    pub injected_analysis: Option<Vec<ToolResult>>,
    pub injected_predictions: Option<Vec<PredictionRecord>>,
    pub allowed_actions: Vec<String>,
    pub output_contract: String,
    /// Corrections from rejected earlier responses.
    pub notices: Vec<String>,
    pub decimals: usize,
}

fn output_contract(stage: Stage, allowed: &[String], horizon: usize, targets: &[String]) -> String {
    match stage {
        Stage::FeatureExtraction => "Respond with a JSON object {\"name\": <tool>, \"arguments\": {...}} or a JSON array \
             of such objects, naming only the allowed tools. Do NOT call prediction functions."
            .to_string(),
        Stage::Prediction if allowed.is_empty() => {
            "No forecasting model may be called at this stage; any action will be rejected.".to_string()
        }
        Stage::Prediction => "Respond with one JSON object {\"name\": \"predict_time_series\", \"arguments\": \
             {\"model\": <naive|seasonal_naive|drift|moving_average|auto_regressive|external>, ...}}."
            .to_string(),
        Stage::ReflectOutput => format!(
            "Respond with ONLY the following tags: <think>reasoning</think> followed by <answer>forecast</answer>. \
             The answer holds {horizon} lines `timestamp,{}` continuing the series at its frequency.",
            targets.join(",")
        ),
    }
}

/// Builds the prompt for the stage implied by `memory`.
pub fn assemble_prompt(memory: &Memory, window: &Window, config: &PromptConfig, notices: Vec<String>) -> PromptBundle {
    let stage = memory.stage();
    let total = window.lookback();
    let shown = match stage {
        Stage::ReflectOutput => total.min(config.trunc_len),
        _ => total,
    };
    let first = total - shown;
    let rows = (first..total)
        .map(|r| {
            window
                .history
                .row(r)
                .iter()
                .map(|v| v.is_finite().then_some(*v))
                .collect()
        })
        .collect();
    let truncated = shown < total;
    let history_view = HistoryView {
        start: window.timestamp(first).format(TIMESTAMP_FORMAT).to_string(),
        channel_names: window.channel_names.clone(),
        rows,
        total_length: total,
        truncated,
        note: truncated.then(|| format!("showing the last {shown} of {total} steps")),
    };
    let allowed = whitelist(stage, config);
    let targets = window.target_names();
    PromptBundle {
        stage,
        horizon: window.horizon(),
        forecast_start: window.forecast_start().format(TIMESTAMP_FORMAT).to_string(),
        frequency: window.frequency.to_string(),
        seasonal_period: window.spec.seasonal_period,
        history_view,
        injected_analysis: (stage != Stage::FeatureExtraction).then(|| memory.analysis_history.clone()),
        injected_predictions: (stage == Stage::ReflectOutput).then(|| memory.prediction_results.clone()),
        output_contract: output_contract(stage, &allowed, window.horizon(), &targets),
        allowed_actions: allowed,
        target_channels: targets,
        notices,
        decimals: config.decimals,
    }
}

fn fmt_value(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) => format!("{x:.decimals$}"),
        None => "NA".to_string(),
    }
}

impl PromptBundle {
    /// Text form sent to a policy.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let d = self.decimals;
        let _ = writeln!(out, "## Stage\n{} (turn {})", self.stage, self.stage.turn());
        let _ = writeln!(
            out,
            "\n## Task\nForecast the next {} steps of [{}] at frequency {}, starting {}. Seasonal period: {} steps.",
            self.horizon,
            self.target_channels.join(", "),
            self.frequency,
            self.forecast_start,
            self.seasonal_period
        );
        let h = &self.history_view;
        let _ = writeln!(out, "\n## History ({} of {} steps, from {})", h.rows.len(), h.total_length, h.start);
        if let Some(note) = &h.note {
            let _ = writeln!(out, "note: {note}");
        }
        let _ = writeln!(out, "{}", h.channel_names.join(","));
        for row in &h.rows {
            let line: Vec<String> = row.iter().map(|v| fmt_value(*v, d)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        if let Some(analysis) = &self.injected_analysis {
            let _ = writeln!(out, "\n## Analysis History");
            if analysis.is_empty() {
                let _ = writeln!(out, "(none)");
            }
            for r in analysis {
                let _ = writeln!(out, "{}", serde_json::to_string(r).expect("plain data"));
            }
        }
        if let Some(preds) = &self.injected_predictions {
            let _ = writeln!(out, "\n## Prediction Results");
            for p in preds {
                let _ = writeln!(out, "model {} (turn {}):", p.model_id, p.turn);
                for row in p.forecast.values.rows() {
                    let line: Vec<String> = row.iter().map(|v| fmt_value(Some(*v), d)).collect();
                    let _ = writeln!(out, "{}", line.join(","));
                }
            }
        }
        if !self.notices.is_empty() {
            let _ = writeln!(out, "\n## Notices");
            for n in &self.notices {
                let _ = writeln!(out, "- {n}");
            }
        }
        let _ = writeln!(out, "\n## Allowed Actions");
        if self.allowed_actions.is_empty() {
            let _ = writeln!(out, "(none)");
        }
        let registry = tool_registry();
        for a in &self.allowed_actions {
            match registry.iter().find(|s| &s.name == a) {
                Some(spec) => {
                    let _ = writeln!(out, "- {a}: {} arguments: {}", spec.description, spec.parameters);
                }
                None => {
                    let _ = writeln!(out, "- {a}");
                }
            }
        }
        let _ = writeln!(out, "\n## Output Contract\n{}", self.output_contract);
        out
    }

    /// Hex SHA-256 of the rendered prompt.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}
