use crate::stats::{local_extrema, Extremum};

/// Greedy one-to-one matching of forecast extrema to truth extrema of the same
/// polarity within `tolerance` steps, scanning both lists left to right. Each
/// forecast extremum takes the earliest unmatched truth extremum in range.
pub fn match_extrema(forecast: &[Extremum], truth: &[Extremum], tolerance: usize) -> usize {
    let mut used = vec![false; truth.len()];
    let mut matched = 0;
    for f in forecast {
        let hit = truth
            .iter()
            .enumerate()
            .find(|(j, t)| !used[*j] && t.kind == f.kind && t.index.abs_diff(f.index) <= tolerance);
        if let Some((j, _)) = hit {
            used[j] = true;
            matched += 1;
        }
    }
    matched
}

/// F1 of matched turning points; two extrema-free series score 1.
pub fn turning_point_score(forecast: &[f64], truth: &[f64], radius: usize, tolerance: usize) -> f64 {
    let fe = local_extrema(forecast, radius);
    let te = local_extrema(truth, radius);
    if fe.is_empty() && te.is_empty() {
        return 1.0;
    }
    let matched = match_extrema(&fe, &te, tolerance);
    2.0 * matched as f64 / (fe.len() + te.len()) as f64
}
