//! HTTP surface exposing the diagnostic tools and built-in forecasters to
//! external agent frameworks.
//!
//! Routes:
//! - `GET /registry`: tool specs as a JSON array.
//! - `POST /tools/<name>`: body [`ToolRequest`], reply a stored-form tool result.
//! - `POST /predict_time_series[?model=<spec>]`: plugin-protocol request, with an
//!   optional `model` and `seasonal_period` in the body; reply `{forecast, model_name}`.
//!
//! Errors reply `{"error": "..."}` with 400 for contract errors and 404 for
//! unknown routes or tools.

use chrono::NaiveDateTime;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::{parse_timestamp, Frequency, Window, WindowSpec};
use crate::eval::parse_model_spec;
use crate::models::{predict_time_series, ExternalRegistry};
use crate::orchestrator::parse_model;
use crate::stub::{RecordedRequest, StubResponse, StubServer};
use crate::toolkit::{run_tool, tool_registry, ToolArgs, ToolConfig, ToolName};

fn default_period() -> usize {
    24
}

fn default_frequency() -> String {
    "1h".into()
}

fn default_start() -> String {
    "2000-01-01T00:00:00".into()
}

/// Series payload shared by both endpoints; `null` cells are missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRequest {
    pub history: Vec<Vec<Option<f64>>>,
    pub channel_names: Vec<String>,
    #[serde(default = "default_start")]
    pub start: String,
    #[serde(default = "default_frequency")]
    pub frequency: String,
    #[serde(default = "default_period")]
    pub seasonal_period: usize,
    #[serde(default)]
    pub target_channels: Vec<String>,
    #[serde(default)]
    pub arguments: Value,
}

#[derive(Debug, Clone, Deserialize)]
struct PredictRequest {
    history: Vec<Vec<Option<f64>>>,
    channel_names: Vec<String>,
    horizon: usize,
    #[serde(default = "default_frequency")]
    frequency: String,
    #[serde(default = "default_period")]
    seasonal_period: usize,
    #[serde(default)]
    model: Option<Value>,
}

fn bad(msg: impl Into<String>) -> StubResponse {
    StubResponse::json(400, &json!({"error": msg.into()}))
}

fn build_window(
    history: &[Vec<Option<f64>>],
    channel_names: Vec<String>,
    horizon: usize,
    start: &str,
    frequency: &str,
    seasonal_period: usize,
    targets: Vec<String>,
) -> Result<Window, String> {
    let c = channel_names.len();
    if history.is_empty() || history.iter().any(|r| r.len() != c) {
        return Err(format!("history must be a non-empty list of rows with {c} values"));
    }
    let values: Vec<f64> = history.iter().flatten().map(|v| v.unwrap_or(f64::NAN)).collect();
    let matrix = Array2::from_shape_vec((history.len(), c), values).map_err(|e| e.to_string())?;
    let start: NaiveDateTime = parse_timestamp(start).ok_or_else(|| format!("bad start timestamp {start:?}"))?;
    let frequency: Frequency = frequency.parse().map_err(|e: crate::data::DataError| e.to_string())?;
    let spec = WindowSpec::new(history.len(), horizon.max(1))
        .with_period(seasonal_period.max(1))
        .with_targets(targets);
    Window::from_parts(matrix, None, channel_names, spec, start, frequency).map_err(|e| e.to_string())
}

fn tool_route(name: &str, body: &str, config: &ToolConfig) -> StubResponse {
    let Ok(tool) = name.parse::<ToolName>() else {
        return StubResponse::json(404, &json!({"error": format!("unknown tool {name:?}")}));
    };
    let req: ToolRequest = match serde_json::from_str(body) {
        Ok(r) => r,
        Err(e) => return bad(format!("malformed request: {e}")),
    };
    let window = match build_window(
        &req.history,
        req.channel_names,
        1,
        &req.start,
        &req.frequency,
        req.seasonal_period,
        req.target_channels,
    ) {
        Ok(w) => w,
        Err(e) => return bad(e),
    };
    let args = if req.arguments.is_null() {
        ToolArgs::default()
    } else {
        let mut args: ToolArgs = match serde_json::from_value(req.arguments.clone()) {
            Ok(a) => a,
            Err(e) => return bad(format!("bad arguments: {e}")),
        };
        if let Some(Value::String(s)) = req.arguments.get("baseline") {
            match parse_model_spec(s, window.spec.seasonal_period) {
                Ok(m) => args.baseline = Some(m),
                Err(e) => return bad(e),
            }
        }
        args
    };
    match run_tool(tool, &window, &args, config, 0) {
        Ok(result) => StubResponse::json(200, &serde_json::to_value(result).expect("plain data")),
        Err(e) => bad(e.to_string()),
    }
}

fn query_model(url: &str) -> Option<String> {
    let (_, query) = url.split_once('?')?;
    query
        .split('&')
        .find_map(|kv| kv.strip_prefix("model="))
        .map(|v| v.replace("%3A", ":").replace("%3a", ":"))
}

fn predict_route(url: &str, body: &str, externals: &ExternalRegistry) -> StubResponse {
    let req: PredictRequest = match serde_json::from_str(body) {
        Ok(r) => r,
        Err(e) => return bad(format!("malformed request: {e}")),
    };
    let period = req.seasonal_period.max(1);
    let model = match (&req.model, query_model(url)) {
        (Some(Value::String(s)), _) => parse_model_spec(s, period),
        (Some(v @ Value::Object(_)), _) => parse_model(v, period).map_err(|e| e.message),
        (Some(_), _) => Err("`model` must be a string or object".to_string()),
        (None, Some(q)) => parse_model_spec(&q, period),
        (None, None) => Ok(crate::models::ForecastModelId::Naive),
    };
    let model = match model {
        Ok(m) => m,
        Err(e) => return bad(e),
    };
    let window = match build_window(
        &req.history,
        req.channel_names,
        req.horizon,
        &default_start(),
        &req.frequency,
        period,
        Vec::new(),
    ) {
        Ok(w) => w,
        Err(e) => return bad(e),
    };
    match predict_time_series(&model, &window, req.horizon, externals) {
        Ok(f) => StubResponse::json(200, &json!({"forecast": f.rows(), "model_name": model.to_string()})),
        Err(e) => bad(e.to_string()),
    }
}

/// Routes one request; pure, so it can be exercised without a socket.
pub fn handle(req: &RecordedRequest, config: &ToolConfig, externals: &ExternalRegistry) -> StubResponse {
    let path = req.url.split('?').next().unwrap_or("");
    match (req.method.as_str(), path) {
        ("GET", "/registry") => StubResponse::json(200, &serde_json::to_value(tool_registry()).expect("plain data")),
        ("POST", "/predict_time_series") => predict_route(&req.url, &req.body, externals),
        ("POST", p) if p.starts_with("/tools/") => tool_route(&p["/tools/".len()..], &req.body, config),
        _ => StubResponse::json(404, &json!({"error": format!("no route for {} {}", req.method, req.url)})),
    }
}

/// Starts the tool server on `addr` (e.g. `127.0.0.1:8080`).
pub fn serve_tools(addr: &str, config: ToolConfig, externals: ExternalRegistry) -> std::io::Result<StubServer> {
    StubServer::bind(addr, Box::new(move |req| handle(req, &config, &externals)))
}
