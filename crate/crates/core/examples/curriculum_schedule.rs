//! Score training windows by teacher error and permutation entropy, band them,
//! and print the staged manifest head.

use forecast_env::curriculum::{assign_bands, manifest_string, permutation_entropy, schedule, score_windows, CurriculumConfig};
use forecast_env::data::{make_windows, split, SplitRatios, WindowSpec};
use forecast_env::models::ExternalRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ramp: Vec<f64> = (0..100).map(f64::from).collect();
    println!("permutation entropy: ramp {:.3}", permutation_entropy(&ramp, 3, 1)?);

    let series = forecast_env::fixtures::epf_like(4);
    let (train, _, _) = split(&series, SplitRatios::default())?;
    let spec = WindowSpec::new(168, 24).with_stride(101).with_targets(["OT"]);
    let windows = make_windows(&train, &spec)?;
    let (mut profiles, skipped) = score_windows("epf", &windows, &CurriculumConfig::default(), &ExternalRegistry::default());
    let banding = assign_bands(&mut profiles, None)?;
    println!(
        "{} windows scored, {} skipped; thresholds {:?}",
        profiles.len(),
        skipped.len(),
        banding.thresholds
    );
    let plan = schedule(&profiles, 1, 42);
    println!("stage starts: {:?}", plan.stage_starts);
    for line in manifest_string(&plan).lines().take(5) {
        println!("{line}");
    }
    Ok(())
}
