//! Locate a level shift with the sliding mean-shift detector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use forecast_env::toolkit::{detect_changepoints, mean_shift_scores};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1.0).expect("valid sigma");
    let x: Vec<f64> = (0..150).map(|t| noise.sample(&mut rng) + if t >= 90 { 5.0 } else { 0.0 }).collect();
    let scores = mean_shift_scores(&x, 12);
    let peak = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    println!("true shift at 90; peak score {peak:?}");
    println!("detected changepoints: {:?}", detect_changepoints(&x, 12, 3.0));
}
