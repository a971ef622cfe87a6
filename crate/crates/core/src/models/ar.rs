use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Ridge penalty applied when the lagged design matrix is rank deficient.
pub const RIDGE_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArFit {
    pub intercept: f64,
    /// `coefficients[i]` multiplies `x[t - 1 - i]`.
    pub coefficients: Vec<f64>,
    /// True when the ridge fallback was used.
    pub regularized: bool,
}

impl ArFit {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// One-step prediction from the most recent `order` values (oldest first).
    pub fn predict_next(&self, recent: &[f64]) -> f64 {
        let p = self.order();
        debug_assert!(recent.len() >= p);
        let mut acc = self.intercept;
        for (i, c) in self.coefficients.iter().enumerate() {
            acc += c * recent[recent.len() - 1 - i];
        }
        acc
    }

    /// Iterates the recursion `horizon` steps past the end of `history`.
    pub fn forecast(&self, history: &[f64], horizon: usize) -> Vec<f64> {
        let mut buf = history.to_vec();
        for _ in 0..horizon {
            let next = self.predict_next(&buf);
            buf.push(next);
        }
        buf.split_off(history.len())
    }
}

/// Fits `x_t = c + sum_i phi_i x_{t-i}` by least squares over the history.
pub fn fit_ar(history: &[f64], order: usize) -> Result<ArFit, ModelError> {
    if order == 0 {
        return Err(ModelError::InvalidParams("AR order must be positive".into()));
    }
    if history.len() < 3 * order {
        return Err(ModelError::InsufficientHistory {
            need: 3 * order,
            found: history.len(),
        });
    }
    if history.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::MissingHistory);
    }
    let (lo, hi) = history
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let scale = lo.abs().max(hi.abs()).max(1.0);
    if hi - lo <= 1e-12 * scale {
        return Ok(ArFit {
            intercept: history[0],
            coefficients: vec![0.0; order],
            regularized: false,
        });
    }

    let rows = history.len() - order;
    let cols = order + 1;
    let design = DMatrix::from_fn(rows, cols, |r, c| {
        if c == 0 {
            1.0
        } else {
            history[order + r - c]
        }
    });
    let response = DVector::from_iterator(rows, history[order..].iter().copied());

    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let deficient = (0..cols).any(|i| r[(i, i)].abs() <= 1e-10 * diag_max);

    let beta = if deficient {
        let mut gram = design.transpose() * &design;
        for i in 0..cols {
            gram[(i, i)] += RIDGE_LAMBDA;
        }
        let rhs = design.transpose() * &response;
        gram.cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| ModelError::Numerical("ridge system not positive definite".into()))?
    } else {
        let qty = qr.q().transpose() * &response;
        r.solve_upper_triangular(&qty)
            .ok_or_else(|| ModelError::Numerical("singular triangular factor".into()))?
    };

    Ok(ArFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        regularized: deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_half_recurrence() {
        let mut x = vec![1.0];
        for _ in 1..40 {
            x.push(0.5 * x.last().unwrap());
        }
        let fit = fit_ar(&x, 1).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-6, "{fit:?}");
        assert!(fit.intercept.abs() < 1e-6);
    }

    #[test]
    fn constant_history_is_intercept_only() {
        let fit = fit_ar(&[4.25; 30], 3).unwrap();
        assert_eq!(fit.intercept, 4.25);
        assert!(fit.coefficients.iter().all(|c| c.abs() < 1e-9));
        assert_eq!(fit.forecast(&[4.25; 30], 5), vec![4.25; 5]);
    }

    #[test]
    fn rank_deficient_design_falls_back_to_ridge() {
        // period-2 alternation: lag 2 duplicates the intercept column pattern
        let x: Vec<f64> = (0..30).map(|t| if t % 2 == 0 { 1.0 } else { 3.0 }).collect();
        let fit = fit_ar(&x, 2).unwrap();
        assert!(fit.regularized);
        let next = fit.forecast(&x, 4);
        for (got, want) in next.iter().zip([1.0, 3.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-4, "{next:?}");
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(fit_ar(&[1.0; 5], 2), Err(ModelError::InsufficientHistory { need: 6, found: 5 })));
        assert!(fit_ar(&[1.0; 5], 0).is_err());
        assert!(matches!(fit_ar(&[1.0, f64::NAN, 2.0, 3.0], 1), Err(ModelError::MissingHistory)));
    }
}
