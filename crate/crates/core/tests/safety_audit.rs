//! Trace audit over fuzzed policy outputs: nothing executes unless the
//! action validated for the current stage, and every episode terminates.

mod common;

use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use forecast_env::memory::{whitelist, PromptBundle, Stage};
use forecast_env::orchestrator::{
    run_episode, validate_action, Action, EpisodeConfig, Policy, PolicyError, PolicyReply, PolicySession, TurnOutput,
};

const TOOLS: [&str; 7] = [
    "extract_data_quality",
    "extract_basic_statistics",
    "extract_within_channel_dynamics",
    "summarize_events",
    "diagnose_residuals",
    "predict_time_series",
    "not_a_tool",
];

fn random_output(rng: &mut ChaCha8Rng, horizon: usize) -> String {
    let call = |rng: &mut ChaCha8Rng| {
        let name = TOOLS[rng.gen_range(0..TOOLS.len())];
        let args = match rng.gen_range(0..5) {
            0 => r#"{"model":"naive"}"#.to_string(),
            1 => format!(r#"{{"model":"seasonal_naive","period":{}}}"#, rng.gen_range(0..40)),
            2 => r#"{"channel":"OT"}"#.to_string(),
            3 => r#"{"baseline":{"model":"drift"}}"#.to_string(),
            _ => "{}".to_string(),
        };
        format!(r#"{{"name":"{name}","arguments":{args}}}"#)
    };
    let answer = |rng: &mut ChaCha8Rng| {
        let rows = rng.gen_range(0..horizon + 3);
        let body: String = (0..rows)
            .map(|i| format!("2020-01-03 {:02}:00:00,{:.3}\n", (5 + i) % 24, rng.gen_range(-5.0..5.0)))
            .collect();
        format!("<think>x</think>\n<answer>\n{body}</answer>")
    };
    match rng.gen_range(0..7) {
        0 => call(rng),
        1 => {
            let n = rng.gen_range(1..4);
            format!("[{}]", (0..n).map(|_| call(rng)).collect::<Vec<_>>().join(","))
        }
        2 => answer(rng),
        3 => format!("```json\n{}\n```", call(rng)),
        4 => format!("{}\n{}", call(rng), answer(rng)),
        5 => String::from_utf8_lossy(&(0..rng.gen_range(0..40)).map(|_| rng.gen::<u8>()).collect::<Vec<_>>()).into_owned(),
        _ => call(rng).chars().take(rng.gen_range(0..30)).collect(),
    }
}

struct Fuzz {
    rng: Mutex<ChaCha8Rng>,
    horizon: usize,
}

struct FuzzSession<'a>(&'a Fuzz);

impl PolicySession for FuzzSession<'_> {
    fn respond(&mut self, _: &PromptBundle, _: &str) -> Result<PolicyReply, PolicyError> {
        let mut rng = self.0.rng.lock().unwrap();
        Ok(PolicyReply {
            text: random_output(&mut rng, self.0.horizon),
            completion_tokens: Some(rng.gen_range(0..6000)),
        })
    }
}

impl Policy for Fuzz {
    fn session(&self) -> Box<dyn PolicySession + '_> {
        Box::new(FuzzSession(self))
    }
}

#[test]
fn nothing_executes_without_a_validated_action() {
    let window = common::golden_window();
    let config = EpisodeConfig::default();
    let policy = Fuzz {
        rng: Mutex::new(ChaCha8Rng::seed_from_u64(2024)),
        horizon: window.horizon(),
    };
    let mut outputs_seen = 0;
    let mut turns_seen = 0;
    let mut episode = 0;
    while turns_seen < 10_000 {
        episode += 1;
        let trace = run_episode(&window, &policy, &config);
        assert!(trace.turns.len() <= config.max_turns + config.max_retries, "episode {episode}");
        assert!(trace.reward.is_some());
        for turn in &trace.turns {
            turns_seen += 1;
            if turn.outputs.is_empty() {
                continue;
            }
            outputs_seen += 1;
            let action = turn.action.as_ref().expect("outputs imply a parsed action");
            assert!(turn.parse_error.is_none() && turn.violation.is_none(), "episode {episode} call {}", turn.call);
            let allowed = whitelist(turn.stage, &config.prompt);
            assert!(validate_action(action, turn.stage, &allowed).is_ok());
            for out in &turn.outputs {
                match out {
                    TurnOutput::Tool { .. } | TurnOutput::ToolFailed { .. } => {
                        assert_eq!(turn.stage, Stage::FeatureExtraction);
                        assert!(matches!(action, Action::ToolCalls { .. }));
                    }
                    TurnOutput::Forecast { .. } | TurnOutput::ModelFailed { .. } => {
                        assert_eq!(turn.stage, Stage::Prediction);
                        assert!(matches!(action, Action::ModelCall { .. }));
                    }
                }
            }
        }
        if trace.completed() {
            assert!(trace.final_forecast.is_some());
        }
    }
    assert!(outputs_seen > 0);
}
