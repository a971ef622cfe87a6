//! Drive an episode through the chat-completions client against a local stub
//! that replays a canned script, then against one that always fails.

use forecast_env::data::{make_windows, WindowSpec};
use forecast_env::orchestrator::{run_episode, EpisodeConfig, RemoteConfig, RemotePolicy};
use forecast_env::stub;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = forecast_env::fixtures::seasonal(300, 24, 5);
    let window = make_windows(&series, &WindowSpec::new(48, 6))?.swap_remove(10);

    let answer: String = window
        .target_history()
        .column(0)
        .iter()
        .skip(48 - 24)
        .take(6)
        .enumerate()
        .map(|(i, v)| format!("{},{v}\n", window.start + window.frequency.as_delta() * (48 + i as i32)))
        .collect();
    let script = vec![
        r#"[{"name":"extract_basic_statistics","arguments":{}},{"name":"summarize_events","arguments":{}}]"#.to_string(),
        r#"{"name":"predict_time_series","arguments":{"model":"seasonal_naive","period":24}}"#.to_string(),
        format!("<think>Seasonal naive fits the daily cycle.</think>\n<answer>\n{answer}</answer>"),
    ];
    let server = stub::replay_chat(script, Some(120))?;
    let policy = RemotePolicy::new(RemoteConfig {
        endpoint: server.url(),
        ..RemoteConfig::default()
    });
    let trace = run_episode(&window, &policy, &EpisodeConfig::default());
    println!("replayed: {:?}, {} requests, reward {:?}", trace.outcome, server.requests().len(), trace.reward.map(|r| r.total));

    let failing = stub::fixed_status(500)?;
    let policy = RemotePolicy::new(RemoteConfig {
        endpoint: failing.url(),
        ..RemoteConfig::default()
    });
    let trace = run_episode(&window, &policy, &EpisodeConfig::default());
    println!("failing endpoint: {:?}", trace.outcome);
    Ok(())
}
