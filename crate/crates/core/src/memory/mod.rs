//! Episode memory, stage detection, and stage-aware prompt assembly.

mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::models::{Forecast, ForecastModelId};
use crate::toolkit::ToolResult;

pub use prompt::{assemble_prompt, whitelist, HistoryView, PromptBundle, PromptConfig, FINAL_ANSWER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FeatureExtraction,
    Prediction,
    ReflectOutput,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::FeatureExtraction, Stage::Prediction, Stage::ReflectOutput];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::FeatureExtraction => "feature_extraction",
            Stage::Prediction => "prediction",
            Stage::ReflectOutput => "reflect_output",
        }
    }

    /// Functional turn number, 1 to 3.
    pub fn turn(self) -> usize {
        match self {
            Stage::FeatureExtraction => 1,
            Stage::Prediction => 2,
            Stage::ReflectOutput => 3,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub model_id: ForecastModelId,
    pub forecast: Forecast,
    pub turn: usize,
}

/// One line of the action log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSummary {
    pub turn: usize,
    pub stage: Stage,
    pub summary: String,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemoryEntry {
    Tool(ToolResult),
    Prediction(PredictionRecord),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MemoryError {
    #[error("a prediction cannot be stored before any analysis while the feature stage is enabled")]
    PredictionBeforeAnalysis,
}

/// Append-only store backing the episode state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Memory {
    pub analysis_history: Vec<ToolResult>,
    pub prediction_results: Vec<PredictionRecord>,
    pub action_log: Vec<ActionSummary>,
    /// With the feature stage disabled, an empty analysis history already
    /// counts as ready for prediction.
    pub feature_stage: bool,
}

impl Default for Memory {
    fn default() -> Self {
        Self::new()
    }
}

impl Memory {
    pub fn new() -> Self {
        Self {
            analysis_history: Vec::new(),
            prediction_results: Vec::new(),
            action_log: Vec::new(),
            feature_stage: true,
        }
    }

    pub fn without_feature_stage() -> Self {
        Self {
            feature_stage: false,
            ..Self::new()
        }
    }

    pub fn write_result(&mut self, entry: MemoryEntry) -> Result<(), MemoryError> {
        match entry {
            MemoryEntry::Tool(result) => self.analysis_history.push(result),
            MemoryEntry::Prediction(record) => {
                if self.feature_stage && self.analysis_history.is_empty() {
                    return Err(MemoryError::PredictionBeforeAnalysis);
                }
                self.prediction_results.push(record);
            }
        }
        Ok(())
    }

    pub fn log_action(&mut self, summary: ActionSummary) {
        self.action_log.push(summary);
    }

    pub fn stage(&self) -> Stage {
        detect_stage(self)
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("memory is plain data")
    }
}

/// Stage from the emptiness of the two histories: nothing analysed yet means
/// feature extraction, analysis without a forecast means prediction, and a
/// stored forecast means reflection and output.
pub fn detect_stage(memory: &Memory) -> Stage {
    let analysed = !memory.analysis_history.is_empty() || !memory.feature_stage;
    match (analysed, memory.prediction_results.is_empty()) {
        (false, _) => Stage::FeatureExtraction,
        (true, true) => Stage::Prediction,
        (true, false) => Stage::ReflectOutput,
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;

    use super::*;
    use crate::toolkit::{ChannelScope, ToolName};

    fn tool(turn: usize) -> ToolResult {
        ToolResult {
            tool_name: ToolName::ExtractBasicStatistics,
            channel_scope: ChannelScope::All,
            payload: serde_json::json!({"k": turn}),
            produced_at_turn: turn,
        }
    }

    fn prediction() -> PredictionRecord {
        PredictionRecord {
            model_id: ForecastModelId::Naive,
            forecast: Forecast {
                values: Array2::zeros((2, 1)),
                model_id: ForecastModelId::Naive,
                fit_note: None,
            },
            turn: 2,
        }
    }

    #[test]
    fn stage_follows_emptiness() {
        let mut m = Memory::new();
        assert_eq!(m.stage(), Stage::FeatureExtraction);
        m.write_result(MemoryEntry::Tool(tool(1))).unwrap();
        assert_eq!(m.stage(), Stage::Prediction);
        m.write_result(MemoryEntry::Prediction(prediction())).unwrap();
        assert_eq!(m.stage(), Stage::ReflectOutput);
    }

    #[test]
    fn prediction_without_analysis_is_rejected() {
        let mut m = Memory::new();
        assert_eq!(
            m.write_result(MemoryEntry::Prediction(prediction())),
            Err(MemoryError::PredictionBeforeAnalysis)
        );
        assert!(m.prediction_results.is_empty());
        let mut skip = Memory::without_feature_stage();
        assert_eq!(skip.stage(), Stage::Prediction);
        skip.write_result(MemoryEntry::Prediction(prediction())).unwrap();
        assert_eq!(skip.stage(), Stage::ReflectOutput);
    }

    #[test]
    fn appends_preserve_prefix() {
        let mut m = Memory::new();
        for t in 0..3 {
            m.write_result(MemoryEntry::Tool(tool(t))).unwrap();
        }
        assert_eq!(m.analysis_history.len(), 3);
        let before = serde_json::to_string(&m.analysis_history).unwrap();
        m.write_result(MemoryEntry::Tool(tool(9))).unwrap();
        let after = serde_json::to_string(&m.analysis_history).unwrap();
        let stem = &before[..before.len() - 1];
        assert!(after.starts_with(stem));
        assert_eq!(m.analysis_history[2].produced_at_turn, 2);
    }
}
