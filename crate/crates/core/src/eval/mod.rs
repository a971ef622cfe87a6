//! Raw-scale metrics, batch evaluation over test windows, and run configuration.

mod config;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, make_windows, split, CsvSchema, DataError, MultivariateSeries, Window};
use crate::orchestrator::{run_episode, EpisodeTrace, Outcome, Policy};

pub use config::{parse_model_spec, preset, Ablation, ConfigError, DatasetConfig, PolicyKind, RunConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("shape mismatch: forecast {forecast:?} vs truth {truth:?}")]
pub struct MetricError {
    pub forecast: (usize, usize),
    pub truth: (usize, usize),
}

fn check(f: &ArrayView2<f64>, t: &ArrayView2<f64>) -> Result<(), MetricError> {
    if f.dim() != t.dim() || t.is_empty() {
        return Err(MetricError {
            forecast: f.dim(),
            truth: t.dim(),
        });
    }
    Ok(())
}

/// Mean squared error over all horizon steps and channels.
pub fn mse(forecast: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64, MetricError> {
    check(&forecast, &truth)?;
    let sum: f64 = forecast.iter().zip(truth.iter()).map(|(f, t)| (f - t) * (f - t)).sum();
    Ok(sum / truth.len() as f64)
}

pub fn mae(forecast: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64, MetricError> {
    check(&forecast, &truth)?;
    let sum: f64 = forecast.iter().zip(truth.iter()).map(|(f, t)| (f - t).abs()).sum();
    Ok(sum / truth.len() as f64)
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error("no test windows: the test split has {rows} rows, a window needs {need}")]
    NoWindows { rows: usize, need: usize },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), EvalError> {
    std::fs::write(path, contents).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads the configured dataset from its CSV file or the bundled fixture.
pub fn load_dataset(config: &RunConfig) -> Result<MultivariateSeries, EvalError> {
    let ds = &config.dataset;
    if let Some(path) = &ds.path {
        let mut schema = CsvSchema::new(ds.timestamp_column.clone());
        schema.value_columns = ds.columns.clone();
        return Ok(load_csv(path, &schema)?.series);
    }
    let name = ds.fixture.as_deref().unwrap_or_default();
    crate::fixtures::by_name(name, config.seed).ok_or_else(|| EvalError::UnknownFixture(name.to_string()))
}

/// Test-split windows, thinned by `eval_stride` and capped at `max_windows`.
pub fn test_windows(series: &MultivariateSeries, config: &RunConfig) -> Result<Vec<Window>, EvalError> {
    let (_, _, test) = split(series, config.dataset.split)?;
    let need = config.window.lookback + config.window.horizon;
    if test.len() < need {
        return Err(EvalError::NoWindows { rows: test.len(), need });
    }
    let windows = make_windows(&test, &config.window)?;
    Ok(windows
        .into_iter()
        .step_by(config.eval_stride.max(1))
        .take(config.max_windows.unwrap_or(usize::MAX))
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeCounts {
    pub completed: usize,
    pub failed_format: usize,
    pub failed_transport: usize,
}

impl EpisodeCounts {
    pub fn total(&self) -> usize {
        self.completed + self.failed_format + self.failed_transport
    }
}

/// Component means over every episode that received a reward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanReward {
    pub accuracy: f64,
    pub trend: f64,
    pub seasonal: f64,
    pub turning: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub lookback: usize,
    pub horizon: usize,
    pub windows: usize,
    pub counts: EpisodeCounts,
    /// Over completed episodes; `None` when none completed.
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    pub mean_reward: Option<MeanReward>,
}

impl EvalReport {
    /// MSE with "no completed episode" ranked worst.
    pub fn mse_or_inf(&self) -> f64 {
        self.mse.unwrap_or(f64::INFINITY)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>5} {:>8} {:>10} {:>14} {:>17} {:>14} {:>14} {:>10}",
            "dataset", "L", "H", "windows", "completed", "failed_format", "failed_transport", "MSE", "MAE", "reward"
        );
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>5} {:>8} {:>10} {:>14} {:>17} {:>14} {:>14} {:>10}",
            self.dataset,
            self.lookback,
            self.horizon,
            self.windows,
            self.counts.completed,
            self.counts.failed_format,
            self.counts.failed_transport,
            fmt(self.mse),
            fmt(self.mae),
            self.mean_reward.map_or("-".to_string(), |r| format!("{:.4}", r.total)),
        );
        out
    }
}

/// Per-episode raw-scale errors, `None` unless the episode completed.
pub fn episode_errors(trace: &EpisodeTrace) -> Option<(f64, f64)> {
    if !trace.completed() {
        return None;
    }
    let f = trace.final_matrix()?;
    let t = crate::models::rows_to_matrix(trace.truth.as_ref()?).ok()?;
    Some((mse(f.view(), t.view()).ok()?, mae(f.view(), t.view()).ok()?))
}

fn ordered_mean(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Aggregates traces; values are sorted before summing so the result does not
/// depend on trace order.
pub fn aggregate(dataset: &str, lookback: usize, horizon: usize, traces: &[EpisodeTrace]) -> EvalReport {
    let mut counts = EpisodeCounts::default();
    for t in traces {
        match t.outcome {
            Outcome::Completed => counts.completed += 1,
            Outcome::FailedFormat { .. } => counts.failed_format += 1,
            Outcome::FailedTransport { .. } => counts.failed_transport += 1,
        }
    }
    let errors: Vec<(f64, f64)> = traces.iter().filter_map(episode_errors).collect();
    let rewards: Vec<_> = traces.iter().filter_map(|t| t.reward.as_ref()).collect();
    let field = |f: fn(&crate::reward::RewardBreakdown) -> f64| ordered_mean(rewards.iter().map(|r| f(r)).collect());
    let mean_reward = (!rewards.is_empty()).then(|| MeanReward {
        accuracy: field(|r| r.accuracy).unwrap_or_default(),
        trend: field(|r| r.trend).unwrap_or_default(),
        seasonal: field(|r| r.seasonal).unwrap_or_default(),
        turning: field(|r| r.turning).unwrap_or_default(),
        total: field(|r| r.total).unwrap_or_default(),
    });
    EvalReport {
        dataset: dataset.to_string(),
        lookback,
        horizon,
        windows: traces.len(),
        counts,
        mse: ordered_mean(errors.iter().map(|e| e.0).collect()),
        mae: ordered_mean(errors.iter().map(|e| e.1).collect()),
        mean_reward,
    }
}

/// Wall-clock figures, kept apart from the report so reports stay byte-stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub episodes: usize,
    pub wall_ms: f64,
    pub mean_policy_ms: f64,
    pub mean_execute_ms: f64,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub report: EvalReport,
    pub traces: Vec<EpisodeTrace>,
    pub runtime: RuntimeStats,
}

pub fn trace_file_name(dataset: &str, origin_index: usize) -> String {
    format!("{dataset}-{origin_index:06}.json")
}

/// Runs one episode per window on a worker pool.
pub fn run_episodes(windows: &[Window], policy: &dyn Policy, config: &RunConfig) -> Vec<EpisodeTrace> {
    let episode = config.episode_config();
    let run = || {
        windows
            .par_iter()
            .map(|w| run_episode(w, policy, &episode))
            .collect::<Vec<_>>()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(config.workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// Evaluates the configured policy on the test windows. With `out`, writes
/// `traces/<dataset>-<origin>.json` (+ `.timing.json`), `report.json`,
/// `report.txt`, `runtime.json`, and `resolved_config.json`.
pub fn run_batch(config: &RunConfig, policy: &dyn Policy, out: Option<&Path>) -> Result<BatchResult, EvalError> {
    config.validate()?;
    let started = Instant::now();
    let series = load_dataset(config)?;
    let windows = test_windows(&series, config)?;
    if windows.is_empty() {
        return Err(EvalError::NoWindows {
            rows: 0,
            need: config.window.lookback + config.window.horizon,
        });
    }
    let traces = run_episodes(&windows, policy, config);
    let report = aggregate(&config.dataset.name, config.window.lookback, config.window.horizon, &traces);
    let calls: Vec<_> = traces.iter().flat_map(|t| &t.timing).collect();
    let n = calls.len().max(1) as f64;
    let runtime = RuntimeStats {
        episodes: traces.len(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        mean_policy_ms: calls.iter().map(|c| c.policy_ms).sum::<f64>() / n,
        mean_execute_ms: calls.iter().map(|c| c.execute_ms).sum::<f64>() / n,
    };
    if let Some(dir) = out {
        write_outputs(dir, config, &report, &traces, &runtime)?;
    }
    Ok(BatchResult {
        report,
        traces,
        runtime,
    })
}

fn write_outputs(
    dir: &Path,
    config: &RunConfig,
    report: &EvalReport,
    traces: &[EpisodeTrace],
    runtime: &RuntimeStats,
) -> Result<(), EvalError> {
    let trace_dir = dir.join("traces");
    std::fs::create_dir_all(&trace_dir).map_err(|source| EvalError::Io {
        path: trace_dir.display().to_string(),
        source,
    })?;
    for t in traces {
        let name = trace_file_name(&config.dataset.name, t.window.origin_index);
        write_file(&trace_dir.join(&name), &t.to_json())?;
        write_file(&trace_dir.join(name.replace(".json", ".timing.json")), &t.timing_json())?;
    }
    write_file(&dir.join("report.json"), &report.to_json())?;
    write_file(&dir.join("report.txt"), &report.table())?;
    write_file(
        &dir.join("runtime.json"),
        &serde_json::to_string_pretty(runtime).expect("plain data"),
    )?;
    write_file(&dir.join("resolved_config.json"), &config.resolved_json())
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn hand_metrics() {
        let t = array![[1.0], [2.0]];
        let f = array![[2.0], [4.0]];
        assert_eq!(mse(f.view(), t.view()).unwrap(), 2.5);
        assert_eq!(mae(f.view(), t.view()).unwrap(), 1.5);
        assert_eq!(mse(t.view(), t.view()).unwrap(), 0.0);
        assert!(mse(f.view(), array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn scripted_batch_on_seasonal_fixture() {
        let mut config = RunConfig {
            max_windows: Some(12),
            eval_stride: 24,
            ..RunConfig::default()
        };
        let policy = config.build_policy();
        let r = run_batch(&config, policy.as_ref(), None).unwrap();
        assert_eq!(r.report.counts.completed, 12);
        assert!(r.report.mse.unwrap() < 1.0);

        config.ablation.disable_model_tools = true;
        let r = run_batch(&config, policy.as_ref(), None).unwrap();
        assert_eq!(r.report.counts.failed_format, 12);
        assert_eq!(r.report.mse, None);
    }
}
