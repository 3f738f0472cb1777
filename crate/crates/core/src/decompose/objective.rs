use crate::error::{Error, Result};
use crate::linalg::{Matrix, SparsityRule};

/// `‖W − L − S‖_F² + 2λ·penalty(S)`.
///
/// The penalty is `‖S‖₁` for entrywise sparsity and the sum of image-column
/// ℓ2 norms over all frames for block sparsity; the cardinality rule is a
/// constraint and adds nothing. With the factor 2 the soft-threshold and
/// column-shrink updates are exact minimisers of this function.
///
/// `width` is the frame width, needed to locate image columns.
pub fn objective_value(
    warped: &Matrix,
    low_rank: &Matrix,
    sparse: &Matrix,
    rule: &SparsityRule,
    width: usize,
) -> Result<f64> {
    warped.check_same_shape(low_rank)?;
    warped.check_same_shape(sparse)?;
    let residual: f64 = warped
        .as_slice()
        .iter()
        .zip(low_rank.as_slice())
        .zip(sparse.as_slice())
        .map(|((w, l), s)| {
            let r = w - l - s;
            r * r
        })
        .sum();
    Ok(residual + penalty(sparse, rule, width)?)
}

/// `2λ·penalty(S)` for the given rule.
pub(crate) fn penalty(sparse: &Matrix, rule: &SparsityRule, width: usize) -> Result<f64> {
    Ok(match *rule {
        SparsityRule::SoftEntry { lambda } => {
            2.0 * lambda * sparse.as_slice().iter().map(|v| v.abs()).sum::<f64>()
        }
        SparsityRule::ColumnBlock { lambda } => {
            if width == 0 || sparse.rows() % width != 0 {
                return Err(Error::shape(
                    format!("frame width dividing {} rows", sparse.rows()),
                    format!("width {width}"),
                ));
            }
            let mut norms = vec![0.0; width];
            let mut total = 0.0;
            for frame in sparse.columns() {
                image_column_norms(frame, width, &mut norms);
                total += norms.iter().sum::<f64>();
            }
            2.0 * lambda * total
        }
        SparsityRule::Cardinality { .. } => 0.0,
    })
}

/// ℓ2 norm of every image column of a row-major frame.
pub(crate) fn image_column_norms(frame: &[f64], width: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for row in frame.chunks_exact(width) {
        for (acc, v) in out.iter_mut().zip(row) {
            *acc += v * v;
        }
    }
    out.iter_mut().for_each(|v| *v = v.sqrt());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_zero_objective() {
        let w = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let z = Matrix::zeros(2, 2);
        let rule = SparsityRule::SoftEntry { lambda: 0.7 };
        assert_eq!(objective_value(&w, &w, &z, &rule, 1).unwrap(), 0.0);
    }

    #[test]
    fn constant_residual_example() {
        let w = Matrix::from_rows(&[&[0.1, 0.1], &[0.1, 0.1]]);
        let z = Matrix::zeros(2, 2);
        let rule = SparsityRule::SoftEntry { lambda: 0.0 };
        let f = objective_value(&w, &z, &z, &rule, 1).unwrap();
        assert!((f - 0.04).abs() < 1e-15);
    }

    #[test]
    fn matches_direct_formula() {
        // Two 3x2 frames stored as 6x2.
        let w = Matrix::from_fn(6, 2, |i, j| (i as f64 * 0.3 - j as f64).sin());
        let l = Matrix::from_fn(6, 2, |i, j| 0.1 * (i + j) as f64);
        let s = Matrix::from_fn(6, 2, |i, j| if (i + j) % 3 == 0 { 0.5 - i as f64 * 0.1 } else { 0.0 });
        let mut res = 0.0;
        for j in 0..2 {
            for i in 0..6 {
                res += (w[(i, j)] - l[(i, j)] - s[(i, j)]).powi(2);
            }
        }
        let l1: f64 = s.as_slice().iter().map(|v| v.abs()).sum();
        let mut l21 = 0.0;
        for j in 0..2 {
            for x in 0..3 {
                l21 += (s[(x, j)].powi(2) + s[(x + 3, j)].powi(2)).sqrt();
            }
        }
        let soft = objective_value(&w, &l, &s, &SparsityRule::SoftEntry { lambda: 0.2 }, 3).unwrap();
        let block = objective_value(&w, &l, &s, &SparsityRule::ColumnBlock { lambda: 0.2 }, 3).unwrap();
        let card = objective_value(&w, &l, &s, &SparsityRule::Cardinality { kappa: 3 }, 3).unwrap();
        assert!((soft - (res + 0.4 * l1)).abs() < 1e-13);
        assert!((block - (res + 0.4 * l21)).abs() < 1e-13);
        assert!((card - res).abs() < 1e-13);
        assert!(objective_value(&w, &l, &s, &SparsityRule::ColumnBlock { lambda: 0.2 }, 4).is_err());
        assert!(objective_value(&w, &Matrix::zeros(2, 2), &s, &SparsityRule::Cardinality { kappa: 1 }, 3).is_err());
    }
}
