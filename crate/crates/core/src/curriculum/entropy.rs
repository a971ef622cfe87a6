use std::collections::BTreeMap;

use super::CurriculumError;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_DELAY: usize = 1;

/// Ordinal pattern of one delay vector, encoded as a Lehmer code of the stable
/// argsort. Equal values rank the earlier index lower.
fn pattern_code(series: &[f64], start: usize, order: usize, delay: usize, scratch: &mut Vec<usize>) -> u64 {
    scratch.clear();
    scratch.extend(0..order);
    scratch.sort_by(|&a, &b| series[start + a * delay].total_cmp(&series[start + b * delay]));
    let mut code = 0u64;
    for i in 0..order {
        let smaller_after = scratch[i + 1..].iter().filter(|&&v| v < scratch[i]).count() as u64;
        code = code * (order - i) as u64 + smaller_after;
    }
    code
}

/// Counts of each ordinal pattern, keyed by Lehmer code.
pub fn ordinal_histogram(series: &[f64], order: usize, delay: usize) -> Result<BTreeMap<u64, usize>, CurriculumError> {
    check(series, order, delay)?;
    let span = (order - 1) * delay;
    let mut counts = BTreeMap::new();
    let mut scratch = Vec::with_capacity(order);
    for start in 0..series.len() - span {
        *counts.entry(pattern_code(series, start, order, delay, &mut scratch)).or_insert(0) += 1;
    }
    Ok(counts)
}

fn check(series: &[f64], order: usize, delay: usize) -> Result<(), CurriculumError> {
    if order < 2 {
        return Err(CurriculumError::InvalidOrder(order));
    }
    if order > 20 {
        return Err(CurriculumError::InvalidOrder(order));
    }
    if delay == 0 {
        return Err(CurriculumError::InvalidDelay);
    }
    let need = (order - 1) * delay + 1;
    if series.len() < need {
        return Err(CurriculumError::SeriesTooShort { need, found: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(CurriculumError::NonFinite);
    }
    Ok(())
}

/// Normalized permutation entropy in `[0, 1]`: Shannon entropy of the ordinal
/// pattern distribution divided by `ln(order!)`.
pub fn permutation_entropy(series: &[f64], order: usize, delay: usize) -> Result<f64, CurriculumError> {
    let counts = ordinal_histogram(series, order, delay)?;
    let total = counts.values().sum::<usize>() as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    let max = (2..=order).map(|k| (k as f64).ln()).sum::<f64>();
    // `+ 0.0` folds a negative zero from the single-pattern case
    Ok((h / max).clamp(0.0, 1.0) + 0.0)
}
