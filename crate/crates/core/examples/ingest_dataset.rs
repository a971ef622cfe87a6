//! Write the ETTh1-layout fixture to CSV, load it back, split, normalize, and window it.

use forecast_env::data::{load_csv, make_windows, split, zscore, CsvSchema, SplitRatios, WindowSpec};
use forecast_env::fixtures;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("forecast-env-ingest");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("ETTh1.csv");
    fixtures::write_csv(&fixtures::etth1_like(0), &path)?;

    let loaded = load_csv(&path, &CsvSchema::new("date"))?;
    let s = &loaded.series;
    println!("{}: {} rows x {} channels at {}", path.display(), s.len(), s.n_channels(), s.frequency());
    println!("channels: {:?}", s.channel_names());

    let (train, val, test) = split(s, SplitRatios::default())?;
    println!("split: train {} / val {} / test {}", train.len(), val.len(), test.len());

    let (normed, stats) = zscore(&test, Some(&forecast_env::data::ZScoreStats::fit(train.values())));
    println!("train means used for scaling: {:.3?}", stats.mean);

    let spec = WindowSpec::new(168, 24).with_stride(24).with_targets(["OT"]);
    let windows = make_windows(&normed, &spec)?;
    let w = &windows[0];
    println!(
        "{} test windows; first starts {} with history {:?} and target {:?}",
        windows.len(),
        w.start,
        w.history.dim(),
        w.target.as_ref().map(|t| t.dim())
    );
    Ok(())
}
