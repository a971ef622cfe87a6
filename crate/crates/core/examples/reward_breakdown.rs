//! Score a perfect, a shifted, a noisy, and a malformed answer.

use ndarray::Array2;
use forecast_env::reward::{total_reward, RewardInput, RewardWeights};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = Array2::from_shape_fn((24, 1), |(t, _)| (t as f64 * std::f64::consts::TAU / 12.0).sin() * 4.0 + 0.1 * t as f64);
    let shifted = truth.mapv(|v| v + 1.0);
    let noisy = Array2::from_shape_fn((24, 1), |(t, c)| truth[[t, c]] + if t % 2 == 0 { 1.5 } else { -1.5 });
    let weights = RewardWeights::default();

    type Case<'a> = (&'a str, Option<&'a Array2<f64>>, bool, Option<u64>);
    let cases: [Case; 5] = [
        ("perfect", Some(&truth), true, Some(800)),
        ("shifted by 1", Some(&shifted), true, Some(800)),
        ("alternating noise", Some(&noisy), true, Some(800)),
        ("perfect, 6000 tokens", Some(&truth), true, Some(6000)),
        ("malformed", None, false, Some(800)),
    ];
    println!("{:<22} {:>8} {:>8} {:>8} {:>8} {:>8}", "answer", "acc", "trend", "seas", "turn", "total");
    for (name, answer, format_ok, tokens) in cases {
        let r = total_reward(
            RewardInput {
                answer,
                truth: &truth,
                format_ok,
                response_tokens: tokens,
                period: 12,
            },
            &weights,
        )?;
        println!(
            "{name:<22} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.accuracy, r.trend, r.seasonal, r.turning, r.total
        );
    }
    Ok(())
}
