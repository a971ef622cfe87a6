use serde::{Deserialize, Serialize};

use crate::data::TIMESTAMP_FORMAT;
use crate::memory::{PromptBundle, Stage};
use crate::models::ForecastModelId;
use crate::toolkit::{BasicStatistics, ChannelDynamics, EventLabel, EventSummary, QualityReport, ToolName, ToolResult};

/// One policy reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyReply {
    pub text: String,
    /// Completion tokens, when the backend reports them.
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy transport failure: {0}")]
    Transport(String),
    #[error("policy endpoint returned an unusable response: {0}")]
    Protocol(String),
}

/// Per-episode conversation state.
pub trait PolicySession {
    fn respond(&mut self, bundle: &PromptBundle, rendered: &str) -> Result<PolicyReply, PolicyError>;
}

/// A policy shared by many episode workers; each episode opens its own session.
pub trait Policy: Send + Sync {
    fn session(&self) -> Box<dyn PolicySession + '_>;
}

/// Tunables of the rule-based policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptedConfig {
    /// Clip the stored forecast to the history range widened by `refine_margin`
    /// times that range.
    pub refine: bool,
    pub refine_margin: f64,
    /// Share of spectral power near the seasonal period that counts as strongly seasonal.
    pub seasonal_power: f64,
    /// Minimum `|slope| * L / std` for a trend to pick the drift model.
    pub trend_strength: f64,
    /// Permutation entropy above which the series counts as irregular.
    pub high_entropy: f64,
    /// Always call this model instead of consulting the rule table.
    pub fixed_model: Option<ForecastModelId>,
}

impl Default for ScriptedConfig {
    fn default() -> Self {
        Self {
            refine: true,
            refine_margin: 0.5,
            seasonal_power: 0.5,
            trend_strength: 1.0,
            high_entropy: 0.9,
            fixed_model: None,
        }
    }
}

/// Deterministic rule-based agent.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    pub config: ScriptedConfig,
}

impl ScriptedPolicy {
    pub fn new(config: ScriptedConfig) -> Self {
        Self { config }
    }
}

impl Policy for ScriptedPolicy {
    fn session(&self) -> Box<dyn PolicySession + '_> {
        Box::new(ScriptedSession { config: &self.config })
    }
}

struct ScriptedSession<'a> {
    config: &'a ScriptedConfig,
}

/// Diagnostics the model-selection rule reads, pulled from the analysis history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleInputs {
    pub any_abnormal: bool,
    /// Mean over target channels of the spectral power within 10% of the seasonal period.
    pub seasonal_power: Option<f64>,
    pub dominant: Option<EventLabel>,
    /// Mean over target channels of `|trend slope| * L / std`.
    pub trend_strength: Option<f64>,
    pub perm_entropy: Option<f64>,
    pub lookback: usize,
    pub period: usize,
}

fn payload<T: serde::de::DeserializeOwned>(results: &[ToolResult], tool: ToolName) -> Vec<T> {
    results
        .iter()
        .filter(|r| r.tool_name == tool)
        .filter_map(|r| serde_json::from_value(r.payload.clone()).ok())
        .collect()
}

#[derive(Deserialize)]
struct Channels<T> {
    channels: Vec<T>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

impl RuleInputs {
    pub fn from_bundle(bundle: &PromptBundle) -> Self {
        let analysis = bundle.injected_analysis.as_deref().unwrap_or(&[]);
        let targets = &bundle.target_channels;
        let is_target = |name: &str| targets.iter().any(|t| t == name);
        let period = bundle.seasonal_period;
        let lookback = bundle.history_view.total_length;

        let quality: Vec<QualityReport> = payload(analysis, ToolName::ExtractDataQuality);
        let any_abnormal = quality
            .iter()
            .flat_map(|q| &q.channels)
            .any(|c| c.abnormal && is_target(&c.name));

        let stats: Vec<BasicStatistics> = payload(analysis, ToolName::ExtractBasicStatistics);
        let powers: Vec<f64> = stats
            .iter()
            .flat_map(|s| &s.channels)
            .filter(|c| is_target(&c.name))
            .filter_map(|c| c.spectral_peaks.as_ref())
            .map(|peaks| {
                peaks
                    .iter()
                    .filter(|p| (p.period - period as f64).abs() <= 0.1 * period as f64)
                    .map(|p| p.power_fraction)
                    .sum()
            })
            .collect();
        let stds: Vec<(String, f64)> = stats
            .iter()
            .flat_map(|s| &s.channels)
            .filter_map(|c| c.std.map(|s| (c.name.clone(), s)))
            .collect();

        let events: Vec<Channels<EventSummary>> = payload(analysis, ToolName::SummarizeEvents);
        let events: Vec<&EventSummary> = events.iter().flat_map(|e| &e.channels).collect();
        let dominant = (!events.is_empty()).then(|| {
            let total = |label| events.iter().map(|e| e.prevalence.get(label)).sum::<f64>();
            let mut best = EventLabel::Rise;
            for label in EventLabel::ORDER {
                if total(label) > total(best) {
                    best = label;
                }
            }
            best
        });
        let strengths: Vec<f64> = events
            .iter()
            .filter_map(|e| {
                let std = stds.iter().find(|(n, _)| n == &e.name)?.1;
                (std > 0.0).then(|| e.trend_slope.abs() * lookback as f64 / std)
            })
            .collect();

        let dynamics: Vec<Channels<ChannelDynamics>> = payload(analysis, ToolName::ExtractWithinChannelDynamics);
        let entropies: Vec<f64> = dynamics
            .iter()
            .flat_map(|d| &d.channels)
            .map(|c| c.permutation_entropy)
            .collect();

        RuleInputs {
            any_abnormal,
            seasonal_power: mean(&powers),
            dominant,
            trend_strength: mean(&strengths),
            perm_entropy: mean(&entropies),
            lookback,
            period,
        }
    }
}

/// The model-selection table, first matching rule wins:
/// abnormal channel -> moving average over one period; strong seasonality or a
/// dominant Stable pattern -> seasonal naive; a dominant strong Rise/Decline ->
/// drift; dominant Oscillation or high entropy -> AR; else seasonal naive when
/// a full period fits, naive otherwise. Without any diagnostics -> naive.
pub fn select_model(inputs: &RuleInputs, config: &ScriptedConfig) -> ForecastModelId {
    let (l, p) = (inputs.lookback, inputs.period.max(1));
    let seasonal_fits = l >= p;
    let fallback = if seasonal_fits {
        ForecastModelId::SeasonalNaive { period: p }
    } else {
        ForecastModelId::Naive
    };
    let informed = inputs.seasonal_power.is_some() || inputs.dominant.is_some() || inputs.any_abnormal;
    if !informed && inputs.perm_entropy.is_none() {
        return ForecastModelId::Naive;
    }
    if inputs.any_abnormal {
        return ForecastModelId::MovingAverage { window: p.min(l).max(1) };
    }
    let strongly_seasonal = inputs.seasonal_power.is_some_and(|s| s >= config.seasonal_power);
    if seasonal_fits && (strongly_seasonal || inputs.dominant == Some(EventLabel::Stable)) {
        return ForecastModelId::SeasonalNaive { period: p };
    }
    let trending = matches!(inputs.dominant, Some(EventLabel::Rise | EventLabel::Decline));
    if trending && inputs.trend_strength.is_some_and(|s| s >= config.trend_strength) {
        return ForecastModelId::Drift;
    }
    let irregular = inputs.dominant == Some(EventLabel::Oscillation)
        || inputs.perm_entropy.is_some_and(|h| h >= config.high_entropy);
    if irregular {
        let order = ForecastModelId::default_ar_order(p);
        if l >= 3 * order {
            return ForecastModelId::AutoRegressive { order };
        }
    }
    fallback
}

/// Turn-1 tool list; dynamics needs two changepoint windows of history.
pub fn scripted_tools(lookback: usize) -> Vec<ToolName> {
    let mut tools = vec![
        ToolName::ExtractDataQuality,
        ToolName::ExtractBasicStatistics,
        ToolName::SummarizeEvents,
    ];
    if lookback >= 24 {
        tools.push(ToolName::ExtractWithinChannelDynamics);
    }
    tools
}

/// Clips each channel to `[min - m, max + m]` of its shown history, with `m`
/// the history range times `margin`.
pub fn refine_clip(rows: &mut [Vec<f64>], history: &[Vec<Option<f64>>], channel_cols: &[usize], margin: f64) {
    for (k, &col) in channel_cols.iter().enumerate() {
        let vals: Vec<f64> = history.iter().filter_map(|r| r[col]).collect();
        if vals.is_empty() {
            continue;
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m = (hi - lo) * margin;
        for row in rows.iter_mut() {
            row[k] = row[k].clamp(lo - m, hi + m);
        }
    }
}

impl PolicySession for ScriptedSession<'_> {
    fn respond(&mut self, bundle: &PromptBundle, _rendered: &str) -> Result<PolicyReply, PolicyError> {
        let text = match bundle.stage {
            Stage::FeatureExtraction => {
                let calls: Vec<serde_json::Value> = scripted_tools(bundle.history_view.total_length)
                    .into_iter()
                    .map(|t| serde_json::json!({"name": t.as_str(), "arguments": {}}))
                    .collect();
                serde_json::to_string(&calls).expect("plain json")
            }
            Stage::Prediction => {
                let model = match &self.config.fixed_model {
                    Some(m) => m.clone(),
                    None => select_model(&RuleInputs::from_bundle(bundle), self.config),
                };
                let arguments = serde_json::to_value(&model).expect("plain json");
                serde_json::json!({"name": crate::toolkit::PREDICT_TIME_SERIES, "arguments": arguments}).to_string()
            }
            Stage::ReflectOutput => self.final_answer(bundle),
        };
        Ok(PolicyReply {
            text,
            completion_tokens: None,
        })
    }
}

impl ScriptedSession<'_> {
    fn final_answer(&self, bundle: &PromptBundle) -> String {
        let Some(record) = bundle.injected_predictions.as_ref().and_then(|p| p.last()) else {
            return "<think>no forecast available</think><answer></answer>".to_string();
        };
        let mut rows = record.forecast.rows();
        let cols: Vec<usize> = bundle
            .target_channels
            .iter()
            .filter_map(|t| bundle.history_view.channel_names.iter().position(|c| c == t))
            .collect();
        let refined = self.config.refine;
        if refined {
            refine_clip(&mut rows, &bundle.history_view.rows, &cols, self.config.refine_margin);
        }
        let start = crate::data::parse_timestamp(&bundle.forecast_start).expect("bundle timestamps are canonical");
        let step = bundle
            .frequency
            .parse::<crate::data::Frequency>()
            .expect("bundle frequency is canonical")
            .as_delta();
        let mut answer = String::new();
        for (i, row) in rows.iter().enumerate() {
            let ts = start + step * i as i32;
            let vals: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            answer.push_str(&format!("{},{}\n", ts.format(TIMESTAMP_FORMAT), vals.join(",")));
        }
        format!(
            "<think>Forecast from {}{}.</think>\n<answer>\n{}</answer>",
            record.model_id,
            if refined { ", clipped to the widened history range" } else { "" },
            answer
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> RuleInputs {
        RuleInputs {
            lookback: 96,
            period: 24,
            ..Default::default()
        }
    }

    #[test]
    fn rule_precedence() {
        let c = ScriptedConfig::default();
        assert_eq!(select_model(&inputs(), &c), ForecastModelId::Naive);
        let mut i = inputs();
        i.dominant = Some(EventLabel::Rise);
        i.trend_strength = Some(3.0);
        assert_eq!(select_model(&i, &c), ForecastModelId::Drift);
        i.seasonal_power = Some(0.9);
        assert_eq!(select_model(&i, &c), ForecastModelId::SeasonalNaive { period: 24 });
        i.any_abnormal = true;
        assert_eq!(select_model(&i, &c), ForecastModelId::MovingAverage { window: 24 });
        let mut i = inputs();
        i.dominant = Some(EventLabel::Oscillation);
        assert_eq!(select_model(&i, &c), ForecastModelId::AutoRegressive { order: 6 });
        i.lookback = 12;
        assert_eq!(select_model(&i, &c), ForecastModelId::Naive);
    }

    #[test]
    fn clip_bounds() {
        let mut rows = vec![vec![100.0], vec![-100.0], vec![1.5]];
        let hist = vec![vec![Some(0.0)], vec![Some(2.0)], vec![None]];
        refine_clip(&mut rows, &hist, &[0], 0.5);
        assert_eq!(rows, vec![vec![3.0], vec![-1.0], vec![1.5]]);
    }
}
