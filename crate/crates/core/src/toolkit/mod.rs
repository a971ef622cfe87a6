//! Diagnostic tools: pure functions from a [`Window`] to structured,
//! JSON-serializable summaries that are stored in memory and injected into
//! prompts verbatim.

mod dynamics;
mod events;
mod quality;
mod registry;
mod residuals;
mod statistics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Window;
use crate::models::{ForecastModelId, ModelError};

pub use dynamics::{detect_changepoints, extract_within_channel_dynamics, mean_shift_scores, ChannelDynamics, TrendSegment};
pub use events::{summarize_events, EventLabel, EventSummary, Prevalence, Segment};
pub use quality::{assess_data_quality, ChannelQuality, QualityReport};
pub use registry::{tool_registry, ToolSpec, PREDICT_TIME_SERIES};
pub use residuals::{autocorrelation, diagnose_residuals, ljung_box, ResidualDiagnostics};
pub use statistics::{dft_peaks, extract_basic_statistics, BasicStatistics, ChannelStatistics, SpectralPeak};

/// Registered names of the diagnostic tools, in registry order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolName {
    ExtractDataQuality,
    ExtractBasicStatistics,
    ExtractWithinChannelDynamics,
    SummarizeEvents,
    DiagnoseResiduals,
}

impl ToolName {
    pub const ALL: [ToolName; 5] = [
        ToolName::ExtractDataQuality,
        ToolName::ExtractBasicStatistics,
        ToolName::ExtractWithinChannelDynamics,
        ToolName::SummarizeEvents,
        ToolName::DiagnoseResiduals,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolName::ExtractDataQuality => "extract_data_quality",
            ToolName::ExtractBasicStatistics => "extract_basic_statistics",
            ToolName::ExtractWithinChannelDynamics => "extract_within_channel_dynamics",
            ToolName::SummarizeEvents => "summarize_events",
            ToolName::DiagnoseResiduals => "diagnose_residuals",
        }
    }
}

impl fmt::Display for ToolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolName {
    type Err = ToolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ToolName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ToolError::UnknownTool(s.to_string()))
    }
}

/// Tunables shared by the tools. Defaults match the documented behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolConfig {
    /// Range below which a channel counts as constant.
    pub constant_tolerance: f64,
    pub abnormal_z: f64,
    /// A channel is abnormal when more than this share of points exceeds `abnormal_z`.
    pub abnormal_fraction: f64,
    pub changepoint_window: usize,
    pub changepoint_threshold: f64,
    pub extrema_radius: usize,
    /// Rolling-variance percentile below which a stretch counts as stable.
    pub stable_quantile: f64,
    /// Event segment length; `None` uses `max(seasonal_period / 4, 4)`.
    pub segment_length: Option<usize>,
    pub stable_ratio: f64,
    pub trend_r_squared: f64,
    pub entropy_order: usize,
    pub entropy_delay: usize,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            constant_tolerance: 1e-9,
            abnormal_z: 3.0,
            abnormal_fraction: 0.05,
            changepoint_window: 12,
            changepoint_threshold: 3.0,
            extrema_radius: 2,
            stable_quantile: 0.25,
            segment_length: None,
            stable_ratio: 0.25,
            trend_r_squared: 0.5,
            entropy_order: crate::curriculum::DEFAULT_ORDER,
            entropy_delay: crate::curriculum::DEFAULT_DELAY,
        }
    }
}

impl ToolConfig {
    pub fn segment_length_for(&self, seasonal_period: usize) -> usize {
        self.segment_length.unwrap_or((seasonal_period / 4).max(4)).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelScope {
    All,
    Channel(String),
}

/// Arguments accepted by the tool dispatcher.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ToolArgs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<ForecastModelId>,
}

/// Output of one tool invocation as stored in the analysis history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub tool_name: ToolName,
    pub channel_scope: ChannelScope,
    pub payload: serde_json::Value,
    pub produced_at_turn: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("channel {channel:?} too short: need {need} non-missing points, found {found}")]
    TooShort { channel: String, need: usize, found: usize },
    #[error("diagnose_residuals requires a `baseline` model argument")]
    MissingBaseline,
    #[error("baseline cannot fit: {0}")]
    Baseline(#[from] ModelError),
    #[error("empty history")]
    EmptyHistory,
}

fn scoped_channels(window: &Window, channel: Option<&str>, default_targets: bool) -> Result<(ChannelScope, Vec<usize>), ToolError> {
    match channel {
        Some(name) => {
            let idx = window
                .channel_index(name)
                .ok_or_else(|| ToolError::UnknownChannel(name.to_string()))?;
            Ok((ChannelScope::Channel(name.to_string()), vec![idx]))
        }
        None if default_targets => Ok((ChannelScope::All, window.target_indices.clone())),
        None => Ok((ChannelScope::All, (0..window.channel_names.len()).collect())),
    }
}

fn to_payload<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("tool payloads are plain data")
}

/// Runs a registered tool. Per-channel tools cover every target channel unless
/// `args.channel` narrows them.
pub fn run_tool(
    tool: ToolName,
    window: &Window,
    args: &ToolArgs,
    config: &ToolConfig,
    turn: usize,
) -> Result<ToolResult, ToolError> {
    if window.history.nrows() == 0 {
        return Err(ToolError::EmptyHistory);
    }
    let channel = args.channel.as_deref();
    let (scope, payload) = match tool {
        ToolName::ExtractDataQuality => {
            let (scope, idx) = scoped_channels(window, channel, false)?;
            (scope, to_payload(&assess_data_quality(window, &idx, config)))
        }
        ToolName::ExtractBasicStatistics => {
            let (scope, idx) = scoped_channels(window, channel, false)?;
            (scope, to_payload(&extract_basic_statistics(window, &idx)))
        }
        ToolName::ExtractWithinChannelDynamics => {
            let (scope, idx) = scoped_channels(window, channel, true)?;
            let channels = idx
                .iter()
                .map(|&c| extract_within_channel_dynamics(window, c, config))
                .collect::<Result<Vec<_>, _>>()?;
            (scope, serde_json::json!({ "channels": channels }))
        }
        ToolName::SummarizeEvents => {
            let (scope, idx) = scoped_channels(window, channel, true)?;
            let channels: Vec<EventSummary> = idx.iter().map(|&c| summarize_events(window, c, config)).collect();
            (scope, serde_json::json!({ "channels": channels }))
        }
        ToolName::DiagnoseResiduals => {
            let baseline = args.baseline.as_ref().ok_or(ToolError::MissingBaseline)?;
            let (scope, idx) = scoped_channels(window, channel, true)?;
            let channels = idx
                .iter()
                .map(|&c| diagnose_residuals(window, c, baseline))
                .collect::<Result<Vec<_>, _>>()?;
            (scope, serde_json::json!({ "baseline": baseline, "channels": channels }))
        }
    };
    Ok(ToolResult {
        tool_name: tool,
        channel_scope: scope,
        payload,
        produced_at_turn: turn,
    })
}

/// Finite values of one column together with their row positions.
pub(crate) fn finite_column(window: &Window, channel: usize) -> (Vec<usize>, Vec<f64>) {
    window
        .channel(channel)
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(i, v)| (i, *v))
        .unzip()
}
