use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::action::{parse_action, validate_action, Action, ParseContext, ParseError, Violation};
use super::policy::Policy;
use crate::data::{Window, TIMESTAMP_FORMAT};
use crate::memory::{assemble_prompt, ActionSummary, Memory, MemoryEntry, PredictionRecord, PromptConfig, Stage};
use crate::models::{predict_time_series, ExternalRegistry, Forecast, ForecastModelId};
use crate::reward::{total_reward, RewardBreakdown, RewardInput, RewardWeights};
use crate::toolkit::{run_tool, ToolConfig, ToolName, ToolResult};

pub const TRACE_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// Functional turns: feature extraction, prediction, reflect/output.
    pub max_turns: usize,
    /// Extra calls granted after parse errors, violations, or failed executions.
    pub max_retries: usize,
    pub prompt: PromptConfig,
    pub tools: ToolConfig,
    pub reward: RewardWeights,
    pub externals: ExternalRegistry,
    /// When false the episode starts at the prediction stage.
    pub features_enabled: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_turns: 3,
            max_retries: 2,
            prompt: PromptConfig::default(),
            tools: ToolConfig::default(),
            reward: RewardWeights::default(),
            externals: ExternalRegistry::default(),
            features_enabled: true,
        }
    }
}

/// Identifies the window an episode ran on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRef {
    pub origin_index: usize,
    pub lookback: usize,
    pub horizon: usize,
    pub history_start: String,
    pub forecast_start: String,
    pub target_channels: Vec<String>,
    pub seasonal_period: usize,
}

impl WindowRef {
    pub fn of(window: &Window) -> Self {
        Self {
            origin_index: window.origin_index,
            lookback: window.lookback(),
            horizon: window.horizon(),
            history_start: window.start.format(TIMESTAMP_FORMAT).to_string(),
            forecast_start: window.forecast_start().format(TIMESTAMP_FORMAT).to_string(),
            target_channels: window.target_names(),
            seasonal_period: window.spec.seasonal_period,
        }
    }
}

/// Result of executing one validated action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TurnOutput {
    Tool { result: ToolResult },
    ToolFailed { tool: ToolName, message: String },
    Forecast { forecast: Forecast },
    ModelFailed { model_id: ForecastModelId, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    /// Policy call number, starting at 1.
    pub call: usize,
    pub stage: Stage,
    pub prompt_digest: String,
    pub raw_text: String,
    pub completion_tokens: Option<u64>,
    pub action: Option<Action>,
    pub parse_error: Option<ParseError>,
    pub violation: Option<Violation>,
    pub outputs: Vec<TurnOutput>,
    /// Correction passed to the next prompt, if any.
    pub notice: Option<String>,
}

impl TurnRecord {
    /// Whether the turn moved the episode forward.
    pub fn is_functional(&self) -> bool {
        self.action.is_some() && self.violation.is_none() && self.notice.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    /// A well-formed, length-consistent final answer.
    Completed,
    /// Ended with a malformed or length-inconsistent answer, or without one.
    FailedFormat { reason: String },
    /// The policy could not be reached.
    FailedTransport { message: String },
}

/// Wall-clock cost of one call, kept out of the trace so traces stay byte-stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnTiming {
    pub call: usize,
    pub policy_ms: f64,
    pub execute_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub schema_version: String,
    pub window: WindowRef,
    pub turns: Vec<TurnRecord>,
    pub outcome: Outcome,
    /// Parsed answer rows (`rows x C_target`), when a final answer was accepted.
    pub final_forecast: Option<Vec<Vec<f64>>>,
    /// Ground truth of the horizon, when the window has one.
    pub truth: Option<Vec<Vec<f64>>>,
    pub reward: Option<RewardBreakdown>,
    pub memory: Memory,
    #[serde(skip)]
    pub timing: Vec<TurnTiming>,
}

impl EpisodeTrace {
    /// Canonical serialized form; identical contents give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace is plain data");
        s.push('\n');
        s
    }

    pub fn from_json(raw: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(raw)
    }

    pub fn timing_json(&self) -> String {
        serde_json::to_string_pretty(&self.timing).expect("plain data")
    }

    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    pub fn functional_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.is_functional()).count()
    }

    pub fn violations(&self) -> usize {
        self.turns.iter().filter(|t| t.violation.is_some()).count()
    }

    pub fn final_matrix(&self) -> Option<Array2<f64>> {
        self.final_forecast
            .as_ref()
            .and_then(|rows| crate::models::rows_to_matrix(rows).ok())
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Drives `policy` through one episode on `window`.
pub fn run_episode(window: &Window, policy: &dyn Policy, config: &EpisodeConfig) -> EpisodeTrace {
    let mut memory = if config.features_enabled {
        Memory::new()
    } else {
        Memory::without_feature_stage()
    };
    let ctx = ParseContext::for_window(window);
    let mut session = policy.session();
    let mut turns: Vec<TurnRecord> = Vec::new();
    let mut timing = Vec::new();
    let mut notices = Vec::new();
    let mut failures = 0usize;
    let mut answer = None;
    let mut outcome = None;
    let max_calls = config.max_turns + config.max_retries;

    while turns.len() < max_calls {
        let call = turns.len() + 1;
        let bundle = assemble_prompt(&memory, window, &config.prompt, std::mem::take(&mut notices));
        let stage = bundle.stage;
        let rendered = bundle.render();
        let mut record = TurnRecord {
            call,
            stage,
            prompt_digest: bundle.digest(),
            raw_text: String::new(),
            completion_tokens: None,
            action: None,
            parse_error: None,
            violation: None,
            outputs: Vec::new(),
            notice: None,
        };
        let started = Instant::now();
        let reply = session.respond(&bundle, &rendered);
        let policy_ms = ms(started);
        let started = Instant::now();
        let reply = match reply {
            Ok(r) => r,
            Err(e) => {
                timing.push(TurnTiming {
                    call,
                    policy_ms,
                    execute_ms: 0.0,
                });
                turns.push(record);
                outcome = Some(Outcome::FailedTransport { message: e.to_string() });
                break;
            }
        };
        record.raw_text = reply.text;
        record.completion_tokens = reply.completion_tokens;

        match parse_action(&record.raw_text, &ctx) {
            Err(e) => {
                record.notice = Some(format!(
                    "Your previous response could not be parsed ({}): {}. Follow the output contract.",
                    serde_json::to_value(e.class).expect("plain enum").as_str().unwrap_or_default(),
                    e.message
                ));
                record.parse_error = Some(e);
            }
            Ok(action) => {
                if let Err(v) = validate_action(&action, stage, &bundle.allowed_actions) {
                    record.notice = Some(format!("Rejected action: {}. Allowed: {}.", v.rule, bundle.allowed_actions.join(", ")));
                    record.violation = Some(v);
                } else {
                    execute(&action, stage, window, config, &mut memory, &mut record, &mut answer);
                }
                let accepted = record.notice.is_none();
                memory.log_action(ActionSummary {
                    turn: call,
                    stage,
                    summary: action.summary(),
                    accepted,
                });
                record.action = Some(action);
            }
        }
        timing.push(TurnTiming {
            call,
            policy_ms,
            execute_ms: ms(started),
        });
        if let Some(n) = &record.notice {
            notices.push(n.clone());
            failures += 1;
        }
        turns.push(record);
        if answer.is_some() || failures > config.max_retries {
            break;
        }
    }

    let response_tokens = turns.iter().filter_map(|t| t.completion_tokens).max();
    let final_answer: Option<super::action::FinalAnswer> = answer;
    let outcome = outcome.unwrap_or_else(|| match &final_answer {
        Some(a) if a.format_ok && a.length_consistent => Outcome::Completed,
        Some(a) if !a.length_consistent => Outcome::FailedFormat {
            reason: format!("answer has {} rows, horizon is {}", a.values.len(), window.horizon()),
        },
        Some(a) => Outcome::FailedFormat {
            reason: a.format_issues.join("; "),
        },
        None => Outcome::FailedFormat {
            reason: "no final answer within the turn and retry budget".into(),
        },
    });
    let matrix = final_answer.as_ref().map(|a| a.matrix());
    let reward = match (&window.target, &outcome) {
        (Some(truth), Outcome::Completed | Outcome::FailedFormat { .. }) => total_reward(
            RewardInput {
                answer: matrix.as_ref(),
                truth,
                format_ok: final_answer.as_ref().is_some_and(|a| a.format_ok),
                response_tokens,
                period: window.spec.seasonal_period,
            },
            &config.reward,
        )
        .ok(),
        _ => None,
    };
    EpisodeTrace {
        schema_version: TRACE_SCHEMA_VERSION.to_string(),
        window: WindowRef::of(window),
        turns,
        outcome,
        final_forecast: final_answer.map(|a| a.values),
        truth: window.target.as_ref().map(|t| t.rows().into_iter().map(|r| r.to_vec()).collect()),
        reward,
        memory,
        timing,
    }
}

fn execute(
    action: &Action,
    stage: Stage,
    window: &Window,
    config: &EpisodeConfig,
    memory: &mut Memory,
    record: &mut TurnRecord,
    answer: &mut Option<super::action::FinalAnswer>,
) {
    match action {
        Action::ToolCalls { calls } => {
            let mut ok = 0;
            for c in calls {
                match run_tool(c.tool, window, &c.args, &config.tools, stage.turn()) {
                    Ok(result) => {
                        memory
                            .write_result(MemoryEntry::Tool(result.clone()))
                            .expect("tool results are always accepted");
                        record.outputs.push(TurnOutput::Tool { result });
                        ok += 1;
                    }
                    Err(e) => record.outputs.push(TurnOutput::ToolFailed {
                        tool: c.tool,
                        message: e.to_string(),
                    }),
                }
            }
            if ok == 0 {
                record.notice = Some("Every requested tool failed; see the errors and choose other tools or arguments.".into());
            }
        }
        Action::ModelCall { model_id } => {
            match predict_time_series(model_id, window, window.horizon(), &config.externals) {
                Ok(forecast) => {
                    let entry = PredictionRecord {
                        model_id: model_id.clone(),
                        forecast: forecast.clone(),
                        turn: stage.turn(),
                    };
                    match memory.write_result(MemoryEntry::Prediction(entry)) {
                        Ok(()) => record.outputs.push(TurnOutput::Forecast { forecast }),
                        Err(e) => record.notice = Some(e.to_string()),
                    }
                }
                Err(e) => {
                    record.notice = Some(format!("Model {model_id} failed: {e}. Choose another model."));
                    record.outputs.push(TurnOutput::ModelFailed {
                        model_id: model_id.clone(),
                        message: e.to_string(),
                    });
                }
            }
        }
        Action::FinalAnswer(a) => *answer = Some(a.clone()),
    }
}
