use chrono::NaiveDateTime;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{parse_timestamp, Frequency, Window, TIMESTAMP_FORMAT};
use crate::memory::{Stage, FINAL_ANSWER};
use crate::models::ForecastModelId;
use crate::toolkit::{ToolArgs, ToolName, PREDICT_TIME_SERIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: ToolName,
    pub args: ToolArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalAnswer {
    pub think: Option<String>,
    /// `rows x C_target`; rows may differ from the horizon.
    pub values: Vec<Vec<f64>>,
    pub length_consistent: bool,
    /// False for text outside the tags, a missing think block, or timestamps
    /// that do not continue the series.
    pub format_ok: bool,
    pub format_issues: Vec<String>,
}

impl FinalAnswer {
    pub fn matrix(&self) -> Array2<f64> {
        crate::models::rows_to_matrix(&self.values).expect("rows validated at parse time")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// One or more diagnostic tool calls, executed in listed order.
    ToolCalls { calls: Vec<ToolCall> },
    ModelCall { model_id: ForecastModelId },
    FinalAnswer(FinalAnswer),
}

impl Action {
    /// Whitelist names this action needs.
    pub fn names(&self) -> Vec<String> {
        match self {
            Action::ToolCalls { calls } => calls.iter().map(|c| c.tool.as_str().to_string()).collect(),
            Action::ModelCall { .. } => vec![PREDICT_TIME_SERIES.to_string()],
            Action::FinalAnswer(_) => vec![FINAL_ANSWER.to_string()],
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Action::ToolCalls { calls } => format!(
                "tools: {}",
                calls.iter().map(|c| c.tool.as_str()).collect::<Vec<_>>().join(", ")
            ),
            Action::ModelCall { model_id } => format!("{PREDICT_TIME_SERIES}: {model_id}"),
            Action::FinalAnswer(a) => format!("final answer: {} rows", a.values.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseFailure {
    NoActionFound,
    UnknownTool,
    MalformedArguments,
    MalformedAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{class:?}: {message}")]
pub struct ParseError {
    pub class: ParseFailure,
    pub message: String,
}

fn fail(class: ParseFailure, message: impl Into<String>) -> ParseError {
    ParseError {
        class,
        message: message.into(),
    }
}

/// What the parser needs to know about the episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseContext {
    pub horizon: usize,
    pub channels: usize,
    pub forecast_start: NaiveDateTime,
    pub frequency: Frequency,
    pub seasonal_period: usize,
}

impl ParseContext {
    pub fn for_window(window: &Window) -> Self {
        Self {
            horizon: window.horizon(),
            channels: window.target_indices.len(),
            forecast_start: window.forecast_start(),
            frequency: window.frequency,
            seasonal_period: window.spec.seasonal_period,
        }
    }
}

/// Parses one raw policy response. Tagged text is a final answer; anything
/// else must be a JSON call object or array of them.
pub fn parse_action(raw: &str, ctx: &ParseContext) -> Result<Action, ParseError> {
    if raw.contains("<answer>") || raw.contains("<think>") {
        return parse_answer(raw, ctx).map(Action::FinalAnswer);
    }
    let value = extract_json(raw).ok_or_else(|| fail(ParseFailure::NoActionFound, "no JSON action or answer tags"))?;
    let items = match value {
        Value::Array(items) if !items.is_empty() => items,
        Value::Array(_) => return Err(fail(ParseFailure::NoActionFound, "empty action list")),
        other => vec![other],
    };
    let mut calls = Vec::new();
    let mut model = None;
    for item in &items {
        let obj = item
            .as_object()
            .ok_or_else(|| fail(ParseFailure::NoActionFound, "action must be a JSON object"))?;
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| fail(ParseFailure::NoActionFound, "action object lacks a string `name`"))?;
        let arguments = match obj.get("arguments") {
            None | Some(Value::Null) => Value::Object(Default::default()),
            Some(Value::String(s)) => serde_json::from_str(s)
                .map_err(|e| fail(ParseFailure::MalformedArguments, format!("arguments string is not JSON: {e}")))?,
            Some(v) => v.clone(),
        };
        if name == PREDICT_TIME_SERIES {
            model = Some(parse_model(&arguments, ctx.seasonal_period)?);
        } else {
            let tool: ToolName = name
                .parse()
                .map_err(|_| fail(ParseFailure::UnknownTool, format!("unknown tool {name:?}")))?;
            let args = parse_tool_args(&arguments, ctx.seasonal_period)?;
            calls.push(ToolCall { tool, args });
        }
    }
    match (model, calls.is_empty(), items.len()) {
        (Some(model_id), true, 1) => Ok(Action::ModelCall { model_id }),
        (Some(_), _, _) => Err(fail(
            ParseFailure::MalformedArguments,
            "predict_time_series must be the only action in a response",
        )),
        (None, _, _) => Ok(Action::ToolCalls { calls }),
    }
}

/// Whole text as JSON, else the outermost `{...}` or `[...]` span.
fn extract_json(raw: &str) -> Option<Value> {
    let trimmed = raw.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Some(v);
    }
    let open = trimmed.find(['{', '['])?;
    let close_char = if trimmed.as_bytes()[open] == b'{' { '}' } else { ']' };
    let close = trimmed.rfind(close_char)?;
    (close > open)
        .then(|| serde_json::from_str(&trimmed[open..=close]).ok())
        .flatten()
}

fn usize_arg(args: &serde_json::Map<String, Value>, key: &str) -> Result<Option<usize>, ParseError> {
    match args.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| fail(ParseFailure::MalformedArguments, format!("`{key}` must be a non-negative integer"))),
    }
}

/// Model arguments, e.g. `{"model": "seasonal_naive", "period": 24}`. Missing
/// parameters fall back to the seasonal period; heavy model names from the
/// strategy prompt route to external endpoints of the same name.
pub fn parse_model(arguments: &Value, seasonal_period: usize) -> Result<ForecastModelId, ParseError> {
    let args = arguments
        .as_object()
        .ok_or_else(|| fail(ParseFailure::MalformedArguments, "arguments must be an object"))?;
    let name = args
        .get("model")
        .and_then(Value::as_str)
        .ok_or_else(|| fail(ParseFailure::MalformedArguments, "`model` must name a forecaster"))?;
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let model = match key.as_str() {
        "naive" => ForecastModelId::Naive,
        "seasonalnaive" => ForecastModelId::SeasonalNaive {
            period: usize_arg(args, "period")?.unwrap_or(seasonal_period),
        },
        "drift" => ForecastModelId::Drift,
        "movingaverage" => ForecastModelId::MovingAverage {
            window: usize_arg(args, "window")?.unwrap_or(seasonal_period),
        },
        "autoregressive" | "ar" | "arima" => ForecastModelId::AutoRegressive {
            order: usize_arg(args, "order")?.unwrap_or_else(|| ForecastModelId::default_ar_order(seasonal_period)),
        },
        "external" => ForecastModelId::External {
            endpoint: args
                .get("endpoint")
                .and_then(Value::as_str)
                .ok_or_else(|| fail(ParseFailure::MalformedArguments, "external model needs an `endpoint`"))?
                .to_string(),
        },
        "patchtst" | "itransformer" | "chronos2" | "chronos" | "timesfm" | "dlinear" => ForecastModelId::External {
            endpoint: name.to_string(),
        },
        _ => return Err(fail(ParseFailure::MalformedArguments, format!("unknown model {name:?}"))),
    };
    model
        .validate()
        .map_err(|e| fail(ParseFailure::MalformedArguments, e.to_string()))?;
    Ok(model)
}

fn parse_tool_args(arguments: &Value, seasonal_period: usize) -> Result<ToolArgs, ParseError> {
    let args = arguments
        .as_object()
        .ok_or_else(|| fail(ParseFailure::MalformedArguments, "arguments must be an object"))?;
    let channel = match args.get("channel") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(fail(ParseFailure::MalformedArguments, "`channel` must be a string")),
    };
    let baseline = match args.get("baseline") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(parse_model(&serde_json::json!({ "model": s }), seasonal_period)?),
        Some(v) => Some(parse_model(v, seasonal_period)?),
    };
    Ok(ToolArgs { channel, baseline })
}

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<(usize, &'a str, usize)> {
    let start = text.find(open)?;
    let body_start = start + open.len();
    let end = body_start + text[body_start..].find(close)?;
    Some((start, &text[body_start..end], end + close.len()))
}

fn parse_answer(raw: &str, ctx: &ParseContext) -> Result<FinalAnswer, ParseError> {
    let mut issues = Vec::new();
    let (a_start, body, a_end) = between(raw, "<answer>", "</answer>")
        .ok_or_else(|| fail(ParseFailure::MalformedAnswer, "missing <answer>...</answer>"))?;
    let think = between(raw, "<think>", "</think>");
    let mut outside = String::new();
    match think {
        Some((t_start, _, t_end)) if t_end <= a_start => {
            outside.push_str(&raw[..t_start]);
            outside.push_str(&raw[t_end..a_start]);
        }
        Some(_) => {
            issues.push("<think> must precede <answer>".to_string());
            outside.push_str(&raw[..a_start]);
        }
        None => {
            issues.push("missing <think>...</think>".to_string());
            outside.push_str(&raw[..a_start]);
        }
    }
    outside.push_str(&raw[a_end..]);
    if !outside.trim().is_empty() {
        issues.push("text outside the <think>/<answer> tags".to_string());
    }

    let mut values = Vec::new();
    let mut stamped = Vec::new();
    for line in body.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let (ts, nums) = match parse_timestamp(fields[0]) {
            Some(ts) if fields.len() > 1 => (Some(ts), &fields[1..]),
            _ => (None, &fields[..]),
        };
        if nums.len() != ctx.channels {
            return Err(fail(
                ParseFailure::MalformedAnswer,
                format!("line {line:?} has {} values, expected {}", nums.len(), ctx.channels),
            ));
        }
        let row = nums
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| fail(ParseFailure::MalformedAnswer, format!("non-numeric value in {line:?}")))?;
        stamped.push(ts);
        values.push(row);
    }
    if values.is_empty() {
        return Err(fail(ParseFailure::MalformedAnswer, "empty <answer>"));
    }
    if stamped.iter().any(Option::is_some) {
        let expected = |i: usize| ctx.forecast_start + ctx.frequency.as_delta() * i as i32;
        let bad = stamped
            .iter()
            .enumerate()
            .find(|(i, ts)| **ts != Some(expected(*i)));
        if let Some((i, _)) = bad {
            issues.push(format!(
                "timestamp on answer line {} should be {}",
                i + 1,
                expected(i).format(TIMESTAMP_FORMAT)
            ));
        }
    }
    Ok(FinalAnswer {
        think: think.map(|(_, t, _)| t.trim().to_string()),
        length_consistent: values.len() == ctx.horizon,
        values,
        format_ok: issues.is_empty(),
        format_issues: issues,
    })
}

/// A rejected action and the rule it broke.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
}

/// Checks the action against the stage and its whitelist.
pub fn validate_action(action: &Action, stage: Stage, allowed: &[String]) -> Result<(), Violation> {
    let rule = match (action, stage) {
        (Action::ToolCalls { .. }, Stage::FeatureExtraction)
        | (Action::ModelCall { .. }, Stage::Prediction)
        | (Action::FinalAnswer(_), Stage::ReflectOutput) => None,
        (Action::ModelCall { .. }, Stage::FeatureExtraction) => Some("prediction at feature-extraction stage".to_string()),
        (Action::ModelCall { .. }, Stage::ReflectOutput) => Some("prediction at reflect-output stage".to_string()),
        (Action::ToolCalls { .. }, s) => Some(format!("tool call at {} stage", s.as_str().replace('_', "-"))),
        (Action::FinalAnswer(_), s) => Some(format!("final answer at {} stage", s.as_str().replace('_', "-"))),
    };
    if let Some(rule) = rule {
        return Err(Violation { rule });
    }
    for name in action.names() {
        if !allowed.contains(&name) {
            return Err(Violation {
                rule: format!("{name} is not allowed at {} stage", stage.as_str().replace('_', "-")),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(h: usize) -> ParseContext {
        ParseContext {
            horizon: h,
            channels: 1,
            forecast_start: parse_timestamp("2020-01-05T00:00:00").unwrap(),
            frequency: Frequency::HOURLY,
            seasonal_period: 24,
        }
    }

    #[test]
    fn tool_call_document() {
        let a = parse_action(r#"{"name":"extract_basic_statistics","arguments":{}}"#, &ctx(2)).unwrap();
        assert_eq!(
            a,
            Action::ToolCalls {
                calls: vec![ToolCall {
                    tool: ToolName::ExtractBasicStatistics,
                    args: ToolArgs::default()
                }]
            }
        );
    }

    #[test]
    fn bare_answer_lengths() {
        let raw = "<think>ok</think><answer>1.0\n2.0</answer>";
        let Action::FinalAnswer(a) = parse_action(raw, &ctx(2)).unwrap() else { panic!() };
        assert_eq!(a.values, vec![vec![1.0], vec![2.0]]);
        assert!(a.length_consistent && a.format_ok);
        let Action::FinalAnswer(a) = parse_action(raw, &ctx(3)).unwrap() else { panic!() };
        assert!(!a.length_consistent);
    }

    #[test]
    fn stray_text_and_bad_timestamps_flag_format() {
        let Action::FinalAnswer(a) = parse_action("sure! <think>x</think><answer>1</answer>", &ctx(1)).unwrap() else {
            panic!()
        };
        assert!(!a.format_ok);
        let raw = "<think>x</think><answer>\n2020-01-05T00:00:00,1\n2020-01-05T02:00:00,2\n</answer>";
        let Action::FinalAnswer(a) = parse_action(raw, &ctx(2)).unwrap() else { panic!() };
        assert!(!a.format_ok);
        let raw = "<think>x</think><answer>\n2020-01-05T00:00:00,1\n2020-01-05T01:00:00,2\n</answer>";
        let Action::FinalAnswer(a) = parse_action(raw, &ctx(2)).unwrap() else { panic!() };
        assert!(a.format_ok, "{:?}", a.format_issues);
    }

    #[test]
    fn failure_classes() {
        assert_eq!(parse_action("hello", &ctx(1)).unwrap_err().class, ParseFailure::NoActionFound);
        assert_eq!(
            parse_action(r#"{"name":"make_coffee","arguments":{}}"#, &ctx(1)).unwrap_err().class,
            ParseFailure::UnknownTool
        );
        assert_eq!(
            parse_action("<think>a</think><answer>x</answer>", &ctx(1)).unwrap_err().class,
            ParseFailure::MalformedAnswer
        );
    }

    #[test]
    fn model_aliases() {
        let m = |v: Value| parse_model(&v, 24).unwrap();
        assert_eq!(m(serde_json::json!({"model": "ARIMA"})), ForecastModelId::AutoRegressive { order: 6 });
        assert_eq!(
            m(serde_json::json!({"model": "seasonal_naive"})),
            ForecastModelId::SeasonalNaive { period: 24 }
        );
        assert_eq!(
            m(serde_json::json!({"model": "PatchTST"})),
            ForecastModelId::External { endpoint: "PatchTST".into() }
        );
    }

    #[test]
    fn stage_rules() {
        let model = Action::ModelCall {
            model_id: ForecastModelId::Naive,
        };
        let all = vec![PREDICT_TIME_SERIES.to_string()];
        assert_eq!(
            validate_action(&model, Stage::FeatureExtraction, &all).unwrap_err().rule,
            "prediction at feature-extraction stage"
        );
        assert!(validate_action(&model, Stage::Prediction, &all).is_ok());
        assert!(validate_action(&model, Stage::Prediction, &[]).is_err());
        let tools = parse_action(r#"[{"name":"summarize_events"},{"name":"extract_data_quality"}]"#, &ctx(1)).unwrap();
        assert!(validate_action(&tools, Stage::ReflectOutput, &[FINAL_ANSWER.to_string()]).is_err());
    }
}
