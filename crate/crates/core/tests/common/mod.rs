//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use forecast_env::data::{Window, WindowSpec};
use forecast_env::eval::RunConfig;
use forecast_env::stats::{Extremum, ExtremumKind};

/// Maximum one-to-one matching between same-kind extrema within `tol`, by
/// exhaustive search over every assignment.
pub fn exhaustive_matching(f: &[Extremum], t: &[Extremum], tol: usize) -> usize {
    fn go(i: usize, f: &[Extremum], t: &[Extremum], used: &mut Vec<bool>, tol: usize) -> usize {
        if i == f.len() {
            return 0;
        }
        let mut best = go(i + 1, f, t, used, tol);
        for j in 0..t.len() {
            if !used[j] && t[j].kind == f[i].kind && t[j].index.abs_diff(f[i].index) <= tol {
                used[j] = true;
                best = best.max(1 + go(i + 1, f, t, used, tol));
                used[j] = false;
            }
        }
        best
    }
    go(0, f, t, &mut vec![false; t.len()], tol)
}

/// Strict extrema by direct comparison with every neighbour.
pub fn naive_extrema(x: &[f64], radius: usize) -> Vec<Extremum> {
    let mut out = Vec::new();
    if x.len() < 2 * radius + 1 || radius == 0 {
        return out;
    }
    for i in radius..x.len() - radius {
        let others: Vec<f64> = (i - radius..=i + radius).filter(|&j| j != i).map(|j| x[j]).collect();
        if others.iter().all(|&w| x[i] > w) {
            out.push(Extremum { index: i, kind: ExtremumKind::Maximum });
        } else if others.iter().all(|&w| x[i] < w) {
            out.push(Extremum { index: i, kind: ExtremumKind::Minimum });
        }
    }
    out
}

pub fn f1_oracle(f: &[f64], t: &[f64], radius: usize, tol: usize) -> f64 {
    let fe = naive_extrema(f, radius);
    let te = naive_extrema(t, radius);
    if fe.is_empty() && te.is_empty() {
        return 1.0;
    }
    2.0 * exhaustive_matching(&fe, &te, tol) as f64 / (fe.len() + te.len()) as f64
}

/// Ordinal patterns keyed by the full argsort vector (ties broken by index).
pub fn pattern_counts(x: &[f64], m: usize, d: usize) -> HashMap<Vec<usize>, usize> {
    let mut counts = HashMap::new();
    for s in 0..=x.len() - 1 - (m - 1) * d {
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| x[s + a * d].partial_cmp(&x[s + b * d]).unwrap().then(a.cmp(&b)));
        *counts.entry(idx).or_insert(0) += 1;
    }
    counts
}

pub fn pe_oracle(x: &[f64], m: usize, d: usize) -> f64 {
    let counts = pattern_counts(x, m, d);
    let n: usize = counts.values().sum();
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum();
    let factorial: f64 = (1..=m).map(|k| k as f64).product();
    h / factorial.ln()
}

/// Solves the AR(p)-with-intercept normal equations `(X'X) b = X'y` by
/// Gaussian elimination with partial pivoting. Returns `[c, phi_1..phi_p]`.
pub fn ar_normal_equations(x: &[f64], p: usize) -> Vec<f64> {
    let k = p + 1;
    let mut a = vec![vec![0.0; k + 1]; k];
    for t in p..x.len() {
        let mut row = vec![1.0];
        row.extend((1..=p).map(|lag| x[t - lag]));
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * x[t];
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (cell, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *cell -= f * p;
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

pub fn mse_oracle(f: &[Vec<f64>], t: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for (fr, tr) in f.iter().zip(t) {
        for (a, b) in fr.iter().zip(tr) {
            s += (a - b).powi(2);
            n += 1;
        }
    }
    s / n as f64
}

pub fn mae_oracle(f: &[Vec<f64>], t: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for (fr, tr) in f.iter().zip(t) {
        for (a, b) in fr.iter().zip(tr) {
            s += (a - b).abs();
            n += 1;
        }
    }
    s / n as f64
}

/// Fixed window used for golden traces: 48 steps of the seasonal fixture, horizon 12.
pub fn golden_window() -> Window {
    let series = forecast_env::fixtures::seasonal(200, 24, 7);
    let spec = WindowSpec::new(48, 12).with_period(24).with_stride(1);
    forecast_env::data::make_windows(&series, &spec).unwrap().swap_remove(5)
}

/// Short-term configuration over the ETTh1-layout fixture yielding at least 200 test windows.
pub fn protocol_config() -> RunConfig {
    let mut c = RunConfig::parse("data.fixture = etth1\npreset = short_term\neval.stride = 16\neval.max_windows = 200\n").unwrap();
    c.seed = 0;
    c
}

pub fn seasonal_config() -> RunConfig {
    RunConfig::parse("data.fixture = seasonal\nwindow.lookback = 96\nwindow.horizon = 24\neval.stride = 4\n").unwrap()
}
