use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curriculum::CurriculumConfig;
use crate::data::{SplitRatios, WindowSpec};
use crate::memory::PromptConfig;
use crate::models::{ExternalEndpoint, ExternalRegistry, ForecastModelId};
use crate::orchestrator::{EpisodeConfig, Policy, RemoteConfig, RemotePolicy, ScriptedConfig, ScriptedPolicy};
use crate::reward::RewardWeights;
use crate::toolkit::ToolConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Scripted,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Label used in reports and trace names.
    pub name: String,
    /// CSV file; takes precedence over `fixture`.
    pub path: Option<PathBuf>,
    /// Bundled synthetic dataset: `etth1`, `epf`, or `seasonal`.
    pub fixture: Option<String>,
    pub timestamp_column: String,
    pub columns: Option<Vec<String>>,
    pub split: SplitRatios,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            name: "seasonal".into(),
            path: None,
            fixture: Some("seasonal".into()),
            timestamp_column: "date".into(),
            columns: None,
            split: SplitRatios::default(),
        }
    }
}

/// Ablation wirings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub disable_feature_tools: bool,
    pub disable_model_tools: bool,
    pub disable_refine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub window: WindowSpec,
    /// Keep every `eval_stride`-th test window.
    pub eval_stride: usize,
    pub max_windows: Option<usize>,
    /// Worker threads for the batch runner; 0 uses all cores.
    pub workers: usize,
    pub policy: PolicyKind,
    pub scripted: ScriptedConfig,
    pub llm: RemoteConfig,
    pub reward: RewardWeights,
    pub tools: ToolConfig,
    pub prompt: PromptConfig,
    pub max_turns: usize,
    pub max_retries: usize,
    pub ablation: Ablation,
    pub curriculum: CurriculumConfig,
    pub epochs_per_stage: usize,
    /// External forecasters by name.
    pub externals: BTreeMap<String, String>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let episode = EpisodeConfig::default();
        Self {
            dataset: DatasetConfig::default(),
            window: WindowSpec::new(96, 96),
            eval_stride: 1,
            max_windows: None,
            workers: 0,
            policy: PolicyKind::Scripted,
            scripted: ScriptedConfig::default(),
            llm: RemoteConfig::default(),
            reward: RewardWeights::default(),
            tools: ToolConfig::default(),
            prompt: PromptConfig::default(),
            max_turns: episode.max_turns,
            max_retries: episode.max_retries,
            ablation: Ablation::default(),
            curriculum: CurriculumConfig::default(),
            epochs_per_stage: 1,
            externals: BTreeMap::new(),
            seed: 0,
            out: PathBuf::from("runs/latest"),
        }
    }
}

/// Named look-back/horizon settings.
pub fn preset(name: &str) -> Option<(usize, usize)> {
    match name {
        "short_term" => Some((168, 24)),
        "long_term" => Some((96, 96)),
        _ => None,
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(invalid(key, v, "expected a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| invalid(key, v, e.to_string()))
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// Model spec such as `naive`, `drift`, `seasonal_naive:24`,
/// `moving_average:12`, `auto_regressive:6` (or `ar:6`), `external:name`.
pub fn parse_model_spec(spec: &str, period: usize) -> Result<ForecastModelId, String> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let num = |default: usize| -> Result<usize, String> {
        arg.map_or(Ok(default), |a| a.parse().map_err(|_| format!("bad parameter {a:?}")))
    };
    let model = match name {
        "naive" => ForecastModelId::Naive,
        "drift" => ForecastModelId::Drift,
        "seasonal_naive" => ForecastModelId::SeasonalNaive { period: num(period)? },
        "moving_average" => ForecastModelId::MovingAverage { window: num(period)? },
        "auto_regressive" | "ar" => ForecastModelId::AutoRegressive {
            order: num(ForecastModelId::default_ar_order(period))?,
        },
        "external" => ForecastModelId::External {
            endpoint: arg.ok_or("external model needs a name")?.to_string(),
        },
        other => return Err(format!("unknown model {other:?}")),
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let period = self.window.seasonal_period;
        match key {
            "preset" => {
                let (l, h) = preset(v).ok_or_else(|| invalid(key, v, "expected short_term or long_term"))?;
                self.window.lookback = l;
                self.window.horizon = h;
            }
            "data.name" => self.dataset.name = v.to_string(),
            "data.path" => {
                self.dataset.path = Some(PathBuf::from(v));
                self.dataset.fixture = None;
            }
            "data.fixture" => {
                self.dataset.fixture = Some(v.to_string());
                self.dataset.path = None;
                self.dataset.name = v.to_string();
            }
            "data.timestamp_column" => self.dataset.timestamp_column = v.to_string(),
            "data.columns" => self.dataset.columns = Some(parse_list(v)),
            "data.split" => {
                let parts: Vec<f64> = parse_list(v)
                    .iter()
                    .map(|p| parse_num::<f64>(key, p))
                    .collect::<Result<_, _>>()?;
                let [train, val, test] = parts[..] else {
                    return Err(invalid(key, v, "expected train,val,test"));
                };
                self.dataset.split = SplitRatios::new(train, val, test).map_err(|e| invalid(key, v, e.to_string()))?;
            }
            "window.lookback" => self.window.lookback = parse_num(key, v)?,
            "window.horizon" => self.window.horizon = parse_num(key, v)?,
            "window.stride" => self.window.stride = parse_num(key, v)?,
            "window.seasonal_period" => self.window.seasonal_period = parse_num(key, v)?,
            "window.targets" => self.window.target_channels = parse_list(v),
            "window.context" => self.window.context_channels = parse_list(v),
            "eval.stride" => self.eval_stride = parse_num(key, v)?,
            "eval.max_windows" => self.max_windows = Some(parse_num(key, v)?),
            "eval.workers" => self.workers = parse_num(key, v)?,
            "policy" => {
                self.policy = match v {
                    "scripted" => PolicyKind::Scripted,
                    "remote" => PolicyKind::Remote,
                    _ => return Err(invalid(key, v, "expected scripted or remote")),
                }
            }
            "policy.fixed_model" => {
                self.scripted.fixed_model = Some(parse_model_spec(v, period).map_err(|e| invalid(key, v, e))?)
            }
            "policy.refine_margin" => self.scripted.refine_margin = parse_num(key, v)?,
            "policy.seasonal_power" => self.scripted.seasonal_power = parse_num(key, v)?,
            "policy.trend_strength" => self.scripted.trend_strength = parse_num(key, v)?,
            "policy.high_entropy" => self.scripted.high_entropy = parse_num(key, v)?,
            "llm.endpoint" => self.llm.endpoint = v.to_string(),
            "llm.api_key" => self.llm.api_key = (!v.is_empty()).then(|| v.to_string()),
            "llm.model" => self.llm.model = v.to_string(),
            "llm.temperature" => self.llm.temperature = parse_num(key, v)?,
            "llm.max_tokens" => self.llm.max_tokens = parse_num(key, v)?,
            "llm.timeout_secs" => self.llm.timeout_secs = parse_num(key, v)?,
            "reward.w_acc" => self.reward.w_acc = parse_num(key, v)?,
            "reward.w_trend" => self.reward.w_trend = parse_num(key, v)?,
            "reward.w_seas" => self.reward.w_seas = parse_num(key, v)?,
            "reward.w_turn" => self.reward.w_turn = parse_num(key, v)?,
            "reward.p_format" => self.reward.p_format = parse_num(key, v)?,
            "reward.p_length_answer" => self.reward.p_length_answer = parse_num(key, v)?,
            "reward.p_length_response" => self.reward.p_length_response = parse_num(key, v)?,
            "reward.token_budget" => self.reward.token_budget = parse_num(key, v)?,
            "reward.turning_tolerance" => self.reward.turning_tolerance = parse_num(key, v)?,
            "reward.extrema_radius" => self.reward.extrema_radius = parse_num(key, v)?,
            "reward.terms.prediction_error" => self.reward.terms.prediction_error = parse_bool(key, v)?,
            "reward.terms.trend_seasonal" => self.reward.terms.trend_seasonal = parse_bool(key, v)?,
            "reward.terms.structural_alignment" => self.reward.terms.structural_alignment = parse_bool(key, v)?,
            "reward.terms.length_penalty" => self.reward.terms.length_penalty = parse_bool(key, v)?,
            "tools.changepoint_window" => self.tools.changepoint_window = parse_num(key, v)?,
            "tools.changepoint_threshold" => self.tools.changepoint_threshold = parse_num(key, v)?,
            "tools.abnormal_z" => self.tools.abnormal_z = parse_num(key, v)?,
            "tools.abnormal_fraction" => self.tools.abnormal_fraction = parse_num(key, v)?,
            "tools.extrema_radius" => self.tools.extrema_radius = parse_num(key, v)?,
            "tools.entropy_order" => self.tools.entropy_order = parse_num(key, v)?,
            "tools.entropy_delay" => self.tools.entropy_delay = parse_num(key, v)?,
            "prompt.trunc_len" => self.prompt.trunc_len = parse_num(key, v)?,
            "prompt.decimals" => self.prompt.decimals = parse_num(key, v)?,
            "episode.max_turns" => self.max_turns = parse_num(key, v)?,
            "episode.max_retries" => self.max_retries = parse_num(key, v)?,
            "ablation.disable_feature_tools" => self.ablation.disable_feature_tools = parse_bool(key, v)?,
            "ablation.disable_model_tools" => self.ablation.disable_model_tools = parse_bool(key, v)?,
            "ablation.disable_refine" => self.ablation.disable_refine = parse_bool(key, v)?,
            "curriculum.teacher" => {
                self.curriculum.teacher = parse_model_spec(v, period).map_err(|e| invalid(key, v, e))?
            }
            "curriculum.order" => self.curriculum.order = parse_num(key, v)?,
            "curriculum.delay" => self.curriculum.delay = parse_num(key, v)?,
            "curriculum.epochs_per_stage" => self.epochs_per_stage = parse_num(key, v)?,
            "seed" => {
                self.seed = parse_num(key, v)?;
                self.curriculum.seed = self.seed;
            }
            "out" => self.out = PathBuf::from(v),
            _ => match key.strip_prefix("external.") {
                Some(name) if !name.is_empty() => {
                    self.externals.insert(name.to_string(), v.to_string());
                }
                _ => return Err(ConfigError::UnknownKey(key.to_string())),
            },
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.merge_text(text)?;
        Ok(config)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// `LLM_ENDPOINT`, `LLM_API_KEY`, and `LLM_MODEL` override the file.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        self.apply_env_from(|k| std::env::var(k).ok())
    }

    pub fn apply_env_from(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        for (var, key) in [
            ("LLM_ENDPOINT", "llm.endpoint"),
            ("LLM_API_KEY", "llm.api_key"),
            ("LLM_MODEL", "llm.model"),
        ] {
            if let Some(v) = get(var) {
                self.set(key, &v)?;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.window
            .validate(false)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.reward.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.eval_stride == 0 {
            return Err(ConfigError::Invalid("eval.stride must be positive".into()));
        }
        if self.max_turns == 0 {
            return Err(ConfigError::Invalid("episode.max_turns must be positive".into()));
        }
        if self.dataset.path.is_none() && self.dataset.fixture.is_none() {
            return Err(ConfigError::Invalid("set data.path or data.fixture".into()));
        }
        Ok(())
    }

    pub fn external_registry(&self) -> ExternalRegistry {
        let mut reg = ExternalRegistry::default();
        for (name, url) in &self.externals {
            reg.register(name.clone(), ExternalEndpoint::new(url.clone()));
        }
        reg
    }

    /// Episode settings with the ablation toggles applied.
    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            max_turns: self.max_turns,
            max_retries: self.max_retries,
            prompt: PromptConfig {
                model_tools: !self.ablation.disable_model_tools,
                ..self.prompt.clone()
            },
            tools: self.tools.clone(),
            reward: self.reward.clone(),
            externals: self.external_registry(),
            features_enabled: !self.ablation.disable_feature_tools,
        }
    }

    pub fn build_policy(&self) -> Box<dyn Policy> {
        match self.policy {
            PolicyKind::Scripted => Box::new(ScriptedPolicy::new(ScriptedConfig {
                refine: self.scripted.refine && !self.ablation.disable_refine,
                ..self.scripted.clone()
            })),
            PolicyKind::Remote => Box::new(RemotePolicy::new(self.llm.clone())),
        }
    }

    /// JSON form written next to run outputs, with the API key masked.
    pub fn resolved_json(&self) -> String {
        let mut shown = self.clone();
        if shown.llm.api_key.is_some() {
            shown.llm.api_key = Some("***".into());
        }
        let mut s = serde_json::to_string_pretty(&shown).expect("config is plain data");
        s.push('\n');
        s
    }
}
