//! One three-turn episode with the rule-based policy; prints the turn log and
//! writes the full trace to a temp file.

use forecast_env::data::{make_windows, WindowSpec};
use forecast_env::orchestrator::{run_episode, EpisodeConfig, ScriptedConfig, ScriptedPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = forecast_env::fixtures::seasonal(400, 24, 3);
    let window = make_windows(&series, &WindowSpec::new(96, 24))?.swap_remove(100);
    let policy = ScriptedPolicy::new(ScriptedConfig::default());
    let trace = run_episode(&window, &policy, &EpisodeConfig::default());

    for turn in &trace.turns {
        let first_line = turn.raw_text.lines().next().unwrap_or("");
        println!("call {} [{}] {} output(s): {:.100}", turn.call, turn.stage.as_str(), turn.outputs.len(), first_line);
    }
    println!("outcome: {:?}", trace.outcome);
    if let Some(r) = &trace.reward {
        println!(
            "reward total {:.4} (accuracy {:.4}, trend {:.4}, seasonal {:.4}, turning {:.4})",
            r.total, r.accuracy, r.trend, r.seasonal, r.turning
        );
    }
    let path = std::env::temp_dir().join("forecast-env-episode.json");
    std::fs::write(&path, trace.to_json())?;
    println!("trace written to {}", path.display());
    Ok(())
}
