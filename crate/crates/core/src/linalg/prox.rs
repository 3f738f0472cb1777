//! Norms and the proximal / thresholding maps used by the sparse updates.

use serde::{Deserialize, Serialize};

use super::matrix::{norm2, Matrix};
use crate::error::{Error, Result};

/// How the sparse component is regularised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparsityRule {
    /// Entrywise ℓ1 penalty, solved by soft thresholding at `lambda`.
    SoftEntry { lambda: f64 },
    /// Per-frame ℓ2,1 penalty over image columns, solved by column shrinkage.
    ColumnBlock { lambda: f64 },
    /// Hard cardinality constraint: keep the `kappa` largest entries.
    Cardinality { kappa: usize },
}

impl SparsityRule {
    /// Checks the rule against the size of the data matrix.
    pub fn validate(&self, entries: usize) -> Result<()> {
        match *self {
            SparsityRule::SoftEntry { lambda } | SparsityRule::ColumnBlock { lambda } => {
                check_lambda(lambda)
            }
            SparsityRule::Cardinality { kappa } if kappa > entries => Err(
                Error::InvalidParameter(format!("kappa = {kappa} exceeds {entries} entries")),
            ),
            SparsityRule::Cardinality { .. } => Ok(()),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            SparsityRule::SoftEntry { lambda } | SparsityRule::ColumnBlock { lambda } => {
                Some(lambda)
            }
            SparsityRule::Cardinality { .. } => None,
        }
    }

    /// The same rule with its λ replaced; cardinality rules are returned as-is.
    pub fn with_lambda(self, lambda: f64) -> Self {
        match self {
            SparsityRule::SoftEntry { .. } => SparsityRule::SoftEntry { lambda },
            SparsityRule::ColumnBlock { .. } => SparsityRule::ColumnBlock { lambda },
            rule => rule,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be a finite non-negative number, got {lambda}"
        )));
    }
    Ok(())
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    norm2(m.as_slice())
}

/// Squared Frobenius norm.
pub fn frobenius_norm_sq(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum()
}

pub fn l1_norm(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v.abs()).sum()
}

#[inline]
pub fn soft_threshold_scalar(x: f64, lambda: f64) -> f64 {
    let mag = x.abs() - lambda;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// Entrywise shrinkage `sign(x)·max(|x| − λ, 0)`, the proximal map of `λ‖·‖₁`.
pub fn soft_threshold(m: &Matrix, lambda: f64) -> Result<Matrix> {
    check_lambda(lambda)?;
    Ok(m.map(|x| soft_threshold_scalar(x, lambda)))
}

/// Scales `column` in place by `max(0, 1 − λ/‖column‖₂)`.
pub(crate) fn shrink_column_in_place(column: &mut [f64], lambda: f64) {
    let norm = norm2(column);
    let factor = if norm > lambda { 1.0 - lambda / norm } else { 0.0 };
    if factor == 0.0 {
        column.iter_mut().for_each(|v| *v = 0.0);
    } else if lambda > 0.0 {
        column.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Group shrinkage of every column, the proximal map of `λ Σ_c ‖c‖₂`.
///
/// Columns whose norm does not exceed λ become exactly zero.
pub fn column_shrink(m: &Matrix, lambda: f64) -> Result<Matrix> {
    check_lambda(lambda)?;
    let mut out = m.clone();
    for c in out.columns_mut() {
        shrink_column_in_place(c, lambda);
    }
    Ok(out)
}

/// Keeps the `kappa` largest-magnitude entries and zeroes the rest.
///
/// Ties at the cut-off magnitude go to the lowest column-major index.
pub fn hard_threshold_top(m: &Matrix, kappa: usize) -> Result<Matrix> {
    let total = m.len();
    if kappa > total {
        return Err(Error::InvalidParameter(format!(
            "kappa = {kappa} exceeds {total} entries"
        )));
    }
    let mut out = m.clone();
    hard_threshold_in_place(out.as_mut_slice(), kappa);
    Ok(out)
}

/// In-place form of [`hard_threshold_top`] for `kappa <= values.len()`.
/// Returns the squared norm of the discarded entries.
pub(crate) fn hard_threshold_in_place(values: &mut [f64], kappa: usize) -> f64 {
    if kappa == values.len() {
        return 0.0;
    }
    if kappa == 0 {
        let dropped = values.iter().map(|v| v * v).sum();
        values.iter_mut().for_each(|v| *v = 0.0);
        return dropped;
    }
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    // Descending order: the kappa-th largest magnitude lands at index kappa - 1.
    let (_, cutoff, _) = mags.select_nth_unstable_by(kappa - 1, |a, b| b.total_cmp(a));
    let cutoff = *cutoff;
    drop(mags);
    let above = values.iter().filter(|v| v.abs() > cutoff).count();
    let mut ties_left = kappa - above;
    let mut dropped = 0.0;
    for v in values.iter_mut() {
        let a = v.abs();
        if a > cutoff {
            continue;
        }
        if a == cutoff && ties_left > 0 {
            ties_left -= 1;
            continue;
        }
        dropped += *v * *v;
        *v = 0.0;
    }
    dropped
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&Matrix::from_rows(&[&[3.0, 4.0]])), 5.0);
        assert_eq!(frobenius_norm(&Matrix::zeros(2, 2)), 0.0);
        assert!(approx(
            frobenius_norm(&Matrix::identity(2)),
            2f64.sqrt(),
            1e-15
        ));
    }

    #[test]
    fn soft_threshold_examples() {
        let m = Matrix::from_rows(&[&[0.25, -0.05, -0.30]]);
        let s = soft_threshold(&m, 0.1).unwrap();
        assert!(approx(s[(0, 0)], 0.15, 1e-15));
        assert_eq!(s[(0, 1)], 0.0);
        assert!(approx(s[(0, 2)], -0.20, 1e-15));
        assert!(soft_threshold(&m, -0.1).is_err());
    }

    #[test]
    fn column_shrink_examples() {
        let m = Matrix::from_rows(&[&[3.0], &[4.0]]);
        let at_norm = column_shrink(&m, 5.0).unwrap();
        assert_eq!(at_norm.as_slice(), &[0.0, 0.0]);
        let half = column_shrink(&m, 2.5).unwrap();
        assert!(approx(half[(0, 0)], 1.5, 1e-15) && approx(half[(1, 0)], 2.0, 1e-15));
        let same = column_shrink(&m, 0.0).unwrap();
        assert_eq!(same, m);
        let zero = column_shrink(&Matrix::zeros(3, 2), 0.5).unwrap();
        assert_eq!(zero, Matrix::zeros(3, 2));
    }

    /// Independent route: golden-section search on the scaling factor of
    /// `½‖h − s‖² + λ‖s‖₂` along the ray `s = t·h` (the minimiser lies on it).
    #[test]
    fn column_shrink_matches_numeric_minimisation() {
        let h = [3.0, 4.0];
        let lambda = 2.5;
        let obj = |t: f64| {
            let r: f64 = h.iter().map(|x| (x - t * x) * (x - t * x)).sum();
            0.5 * r + lambda * t.abs() * 5.0
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if obj(a) < obj(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let t = 0.5 * (lo + hi);
        let out = column_shrink(&Matrix::from_rows(&[&[3.0], &[4.0]]), lambda).unwrap();
        assert!(approx(out[(0, 0)], 3.0 * t, 1e-6));
        assert!(approx(out[(1, 0)], 4.0 * t, 1e-6));
    }

    #[test]
    fn hard_threshold_examples() {
        let m = Matrix::from_rows(&[&[1.0, -3.0], &[2.0, 0.5]]);
        let k2 = hard_threshold_top(&m, 2).unwrap();
        assert_eq!(k2, Matrix::from_rows(&[&[0.0, -3.0], &[2.0, 0.0]]));
        assert_eq!(hard_threshold_top(&m, 0).unwrap(), Matrix::zeros(2, 2));
        assert_eq!(hard_threshold_top(&m, 4).unwrap(), m);
        assert!(hard_threshold_top(&m, 5).is_err());
    }

    #[test]
    fn hard_threshold_ties_prefer_low_index() {
        let m = Matrix::from_rows(&[&[1.0, 1.0, -1.0, 1.0]]);
        let k = hard_threshold_top(&m, 2).unwrap();
        assert_eq!(k.as_slice(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn sparsity_rule_validation() {
        assert!(SparsityRule::SoftEntry { lambda: -1.0 }.validate(4).is_err());
        assert!(SparsityRule::ColumnBlock { lambda: f64::NAN }.validate(4).is_err());
        assert!(SparsityRule::Cardinality { kappa: 5 }.validate(4).is_err());
        assert!(SparsityRule::Cardinality { kappa: 4 }.validate(4).is_ok());
    }

    proptest! {
        #[test]
        fn shrink_reduces_norm_by_lambda(
            col in proptest::collection::vec(-2.0f64..2.0, 1..12),
            lambda in 0.0f64..3.0,
        ) {
            let m = Matrix::from_column_major(col.len(), 1, col.clone()).unwrap();
            let before = norm2(&col);
            let after = frobenius_norm(&column_shrink(&m, lambda).unwrap());
            prop_assert!((after - (before - lambda).max(0.0)).abs() <= 1e-10);
        }

        #[test]
        fn hard_threshold_keeps_largest(
            vals in proptest::collection::vec(-5i32..5, 1..40),
            kfrac in 0.0f64..1.0,
        ) {
            let data: Vec<f64> = vals.iter().map(|&v| v as f64 * 0.5).collect();
            let kappa = ((data.len() as f64) * kfrac) as usize;
            let m = Matrix::from_column_major(data.len(), 1, data.clone()).unwrap();
            let out = hard_threshold_top(&m, kappa).unwrap();
            let nnz_in = data.iter().filter(|v| **v != 0.0).count();
            prop_assert_eq!(out.count_nonzero(), kappa.min(nnz_in));
            let kept_min = out.as_slice().iter().zip(&data)
                .filter(|(o, _)| **o != 0.0).map(|(_, d)| d.abs()).fold(f64::INFINITY, f64::min);
            let dropped_max = out.as_slice().iter().zip(&data)
                .filter(|(o, _)| **o == 0.0).map(|(_, d)| d.abs()).fold(0.0, f64::max);
            if out.count_nonzero() > 0 {
                prop_assert!(kept_min >= dropped_max);
            }
        }

        #[test]
        fn soft_threshold_is_scalar_prox(x in -3.0f64..3.0, lambda in 0.0f64..1.0) {
            // Dense grid search on ½(x − s)² + λ|s|.
            let obj = |s: f64| 0.5 * (x - s) * (x - s) + lambda * s.abs();
            let s = soft_threshold_scalar(x, lambda);
            for k in -400..=400 {
                let probe = s + k as f64 * 1e-3;
                prop_assert!(obj(s) <= obj(probe) + 1e-12);
            }
        }
    }
}
