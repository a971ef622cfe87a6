use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use forecast_env::curriculum::{assign_bands, manifest_string, schedule, score_windows};
use forecast_env::data::{make_windows, parse_timestamp, split, Window};
use forecast_env::eval::{self, mae, mse, EvalError, PolicyKind, RunConfig};
use forecast_env::orchestrator::{run_episode, Outcome};
use forecast_env::reward::{total_reward, RewardInput};
use forecast_env::toolkit::{run_tool, ToolArgs, ToolName};

/// Multi-turn forecasting environment: data checks, tool analysis, episodes,
/// batch evaluation, curriculum manifests, and reward scoring.
#[derive(Parser)]
#[command(name = "forecast-env", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `short_term` (L=168, H=24) or `long_term` (L=96, H=96).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Bundled dataset: etth1, epf, seasonal.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// CSV dataset path.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// scripted or remote.
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Any config key, e.g. `--set window.lookback=48`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, global = true)]
    disable_feature_tools: bool,
    #[arg(long, global = true)]
    disable_model_tools: bool,
    #[arg(long, global = true)]
    disable_refine: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a dataset, print its summary.
    Ingest,
    /// Run one diagnostic tool on a test window and print its payload.
    Analyze {
        #[arg(long)]
        tool: String,
        #[arg(long, default_value_t = 0)]
        window: usize,
        #[arg(long)]
        channel: Option<String>,
        /// Baseline model spec for diagnose_residuals, e.g. `seasonal_naive:24`.
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Run one episode on a test window and write its trace.
    Episode {
        #[arg(long, default_value_t = 0)]
        window: usize,
    },
    /// Evaluate the policy on every (subsampled) test window.
    Batch,
    /// Score training windows, band them, and write the staged manifest.
    Curriculum,
    /// Score a forecast CSV against a truth CSV.
    Reward {
        #[arg(long)]
        forecast: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 24)]
        period: usize,
        /// Response token count, for the length penalty.
        #[arg(long)]
        tokens: Option<u64>,
    },
    /// Serve the toolkit and built-in forecasters over HTTP.
    ServeTools {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

enum Failure {
    Config(String),
    Data(String),
    Transport(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Transport(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Transport(m) | Failure::Other(m) => m,
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(c) => Failure::Config(c.to_string()),
            EvalError::Io { .. } => Failure::Other(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let cfg_err = |e: eval::ConfigError| Failure::Config(e.to_string());
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path).map_err(cfg_err)?,
        None => RunConfig::default(),
    };
    let mut set = |k: &str, v: &str| config.set(k, v).map_err(cfg_err);
    if let Some(p) = &common.preset {
        set("preset", p)?;
    }
    if let Some(f) = &common.fixture {
        set("data.fixture", f)?;
    }
    if let Some(d) = &common.data {
        set("data.path", &d.display().to_string())?;
    }
    if let Some(p) = &common.policy {
        set("policy", p)?;
    }
    if let Some(s) = common.seed {
        set("seed", &s.to_string())?;
    }
    if let Some(o) = &common.out {
        set("out", &o.display().to_string())?;
    }
    for kv in &common.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        set(k.trim(), v)?;
    }
    if common.disable_feature_tools {
        set("ablation.disable_feature_tools", "true")?;
    }
    if common.disable_model_tools {
        set("ablation.disable_model_tools", "true")?;
    }
    if common.disable_refine {
        set("ablation.disable_refine", "true")?;
    }
    config.apply_env().map_err(cfg_err)?;
    config.validate().map_err(cfg_err)?;
    Ok(config)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn pick_window(config: &RunConfig, index: usize) -> Result<Window, Failure> {
    let series = eval::load_dataset(config)?;
    let windows = eval::test_windows(&series, config)?;
    let count = windows.len();
    windows
        .into_iter()
        .nth(index)
        .ok_or_else(|| Failure::Data(format!("window {index} out of range; {count} test windows")))
}

/// Prints a line, ignoring a closed stdout (e.g. piped into `head`).
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data")
}

fn ingest(config: &RunConfig) -> Result<(), Failure> {
    let series = eval::load_dataset(config)?;
    let ts = series.timestamps();
    let summary = json!({
        "dataset": config.dataset.name,
        "rows": series.len(),
        "channels": series.n_channels(),
        "channel_names": series.channel_names(),
        "frequency": series.frequency().to_string(),
        "start": ts.first().map(|t| t.to_string()),
        "end": ts.last().map(|t| t.to_string()),
        "missing_cells": series.missing_positions().len(),
    });
    emit(&pretty(&summary));
    Ok(())
}

fn analyze(config: &RunConfig, tool: &str, index: usize, channel: Option<String>, baseline: Option<String>) -> Result<(), Failure> {
    let tool: ToolName = tool.parse().map_err(|e: forecast_env::toolkit::ToolError| Failure::Config(e.to_string()))?;
    let window = pick_window(config, index)?;
    let baseline = baseline
        .map(|b| eval::parse_model_spec(&b, window.spec.seasonal_period))
        .transpose()
        .map_err(Failure::Config)?;
    let result = run_tool(tool, &window, &ToolArgs { channel, baseline }, &config.tools, 1)
        .map_err(|e| Failure::Data(e.to_string()))?;
    emit(&pretty(&result));
    Ok(())
}

fn episode(config: &RunConfig, index: usize) -> Result<(), Failure> {
    let window = pick_window(config, index)?;
    let policy = config.build_policy();
    let trace = run_episode(&window, policy.as_ref(), &config.episode_config());
    let name = eval::trace_file_name(&config.dataset.name, window.origin_index);
    let path = config.out.join(&name);
    write(&path, &trace.to_json())?;
    write(&config.out.join(name.replace(".json", ".timing.json")), &trace.timing_json())?;
    write(&config.out.join("resolved_config.json"), &config.resolved_json())?;
    let summary = json!({
        "trace": path.display().to_string(),
        "outcome": trace.outcome,
        "calls": trace.turns.len(),
        "functional_turns": trace.functional_turns(),
        "violations": trace.violations(),
        "reward": trace.reward.as_ref().map(|r| r.total),
        "mse": eval::episode_errors(&trace).map(|e| e.0),
    });
    emit(&pretty(&summary));
    match trace.outcome {
        Outcome::FailedTransport { message } => Err(Failure::Transport(message)),
        _ => Ok(()),
    }
}

fn batch(config: &RunConfig) -> Result<(), Failure> {
    let policy = config.build_policy();
    let result = eval::run_batch(config, policy.as_ref(), Some(&config.out))?;
    emit(result.report.table().trim_end());
    emit(&format!("outputs written to {}", config.out.display()));
    let c = result.report.counts;
    if config.policy == PolicyKind::Remote && c.failed_transport == c.total() {
        return Err(Failure::Transport("every episode failed to reach the policy endpoint".into()));
    }
    Ok(())
}

fn curriculum(config: &RunConfig) -> Result<(), Failure> {
    let series = eval::load_dataset(config)?;
    let (train, _, _) = split(&series, config.dataset.split).map_err(|e| Failure::Data(e.to_string()))?;
    let windows: Vec<Window> = make_windows(&train, &config.window)
        .map_err(|e| Failure::Data(e.to_string()))?
        .into_iter()
        .step_by(config.eval_stride.max(1))
        .take(config.max_windows.unwrap_or(usize::MAX))
        .collect();
    let (mut profiles, skipped) = score_windows(&config.dataset.name, &windows, &config.curriculum, &config.external_registry());
    let banding = assign_bands(&mut profiles, None).map_err(|e| Failure::Data(e.to_string()))?;
    let plan = schedule(&profiles, config.epochs_per_stage, config.curriculum.seed);
    write(&config.out.join("manifest.jsonl"), &manifest_string(&plan))?;
    let summary = json!({
        "scored": profiles.len(),
        "unscorable": skipped,
        "thresholds": banding.thresholds,
        "warnings": banding.warnings,
        "stage_starts": plan.stage_starts,
        "skipped_bands": plan.skipped_bands,
        "band_sizes": (1..=3u8).map(|b| profiles.iter().filter(|p| p.band == Some(b)).count()).collect::<Vec<_>>(),
    });
    write(&config.out.join("curriculum.json"), &pretty(&summary))?;
    write(&config.out.join("resolved_config.json"), &config.resolved_json())?;
    emit(&pretty(&summary));
    Ok(())
}

/// Numeric rows of a CSV; a leading timestamp column and header lines are skipped.
fn read_matrix(path: &Path) -> Result<ndarray::Array2<f64>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if parse_timestamp(fields[0]).is_some() || (fields.len() > 1 && fields[0].parse::<f64>().is_err()) {
            fields.remove(0);
        }
        let Ok(row) = fields.iter().map(|f| f.parse::<f64>()).collect::<Result<Vec<_>, _>>() else {
            if rows.is_empty() {
                continue;
            }
            return Err(Failure::Data(format!("{}: non-numeric row {line:?}", path.display())));
        };
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
        return Err(Failure::Data(format!("{}: expected a rectangular numeric table", path.display())));
    }
    ndarray::Array2::from_shape_vec((rows.len(), cols), rows.concat()).map_err(|e| Failure::Data(e.to_string()))
}

fn reward(config: &RunConfig, forecast: &Path, truth: &Path, period: usize, tokens: Option<u64>) -> Result<(), Failure> {
    let f = read_matrix(forecast)?;
    let t = read_matrix(truth)?;
    let breakdown = total_reward(
        RewardInput {
            answer: Some(&f),
            truth: &t,
            format_ok: true,
            response_tokens: tokens,
            period,
        },
        &config.reward,
    )
    .map_err(|e| Failure::Data(e.to_string()))?;
    let same = f.dim() == t.dim();
    let out = json!({
        "reward": breakdown,
        "mse": same.then(|| mse(f.view(), t.view()).ok()).flatten(),
        "mae": same.then(|| mae(f.view(), t.view()).ok()).flatten(),
    });
    emit(&pretty(&out));
    Ok(())
}

fn serve(config: &RunConfig, addr: &str) -> Result<(), Failure> {
    let server = forecast_env::serve::serve_tools(addr, config.tools.clone(), config.external_registry())
        .map_err(|e| Failure::Transport(format!("cannot bind {addr}: {e}")))?;
    eprintln!("serving tools on {}", server.url());
    server.join();
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = resolve(&cli.common)?;
    match cli.command {
        Command::Ingest => ingest(&config),
        Command::Analyze {
            tool,
            window,
            channel,
            baseline,
        } => analyze(&config, &tool, window, channel, baseline),
        Command::Episode { window } => episode(&config, window),
        Command::Batch => batch(&config),
        Command::Curriculum => curriculum(&config),
        Command::Reward {
            forecast,
            truth,
            period,
            tokens,
        } => reward(&config, &forecast, &truth, period, tokens),
        Command::ServeTools { addr } => serve(&config, &addr),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
