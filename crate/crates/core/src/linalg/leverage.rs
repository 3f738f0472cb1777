use super::matrix::{axpy, dot, norm2, Matrix};
use super::svd::{narrow_is_cols, truncated_svd_with, SvdOptions};
use crate::error::{Error, Result};

/// Relative singular-value floor below which a direction counts as absent.
pub const RANK_TOL: f64 = 1e-10;

/// Normalised column leverage scores from the top `p` right singular vectors:
/// `π_i = (1/p) Σ_k (V_k^i)²`.
///
/// The result is a probability vector over the columns of `m`.
pub fn leverage_scores(m: &Matrix, p: usize) -> Result<Vec<f64>> {
    leverage_scores_with(m, p, &SvdOptions::default())
}

pub(crate) fn leverage_scores_with(m: &Matrix, p: usize, opts: &SvdOptions) -> Result<Vec<f64>> {
    scores(m, p, opts, false)
}

/// Leverage scores of the rows of `m`, i.e. of the columns of `mᵀ`.
///
/// The solve starts from the row energies, which a compact structure such as
/// a foreground object dominates. For `p = 1` a plain power loop is tried
/// first; it avoids the block machinery, which dominates on small matrices.
pub(crate) fn row_leverage_scores_with(m: &Matrix, p: usize, opts: &SvdOptions) -> Result<Vec<f64>> {
    let mut energy = vec![0.0; m.rows()];
    for c in m.columns() {
        for (e, v) in energy.iter_mut().zip(c) {
            *e += v * v;
        }
    }
    if p == 1 && m.rows() > 0 && m.cols() > 0 {
        if let Some(u) = top_left_vector(m, &energy, opts) {
            return Ok(u.iter().map(|v| v * v).collect());
        }
    }
    let start = if narrow_is_cols(m) {
        let z: Vec<f64> = m.columns().map(|c| dot(&energy, c)).collect();
        Matrix::from_fn(m.cols(), 1, |i, _| z[i])
    } else {
        Matrix::from_fn(m.rows(), 1, |i, _| energy[i])
    };
    let opts = SvdOptions {
        start: Some(start),
        ..opts.clone()
    };
    scores(m, p, &opts, true)
}

/// Unit top left singular vector of `m` by power iteration on `m mᵀ` from
/// `start`. `None` when the iteration stalls or `m` is numerically zero, so
/// the caller can fall back to the block solver.
fn top_left_vector(m: &Matrix, start: &[f64], opts: &SvdOptions) -> Option<Vec<f64>> {
    let mut u = start.to_vec();
    let n0 = norm2(&u);
    if !(n0 > 0.0) {
        return None;
    }
    u.iter_mut().for_each(|v| *v /= n0);
    let mut z = vec![0.0; m.cols()];
    let mut next = vec![0.0; m.rows()];
    let scale = m.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for _ in 0..opts.max_sweeps {
        for (zj, c) in z.iter_mut().zip(m.columns()) {
            *zj = dot(c, &u);
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        for (&zj, c) in z.iter().zip(m.columns()) {
            axpy(zj, c, &mut next);
        }
        let norm = norm2(&next);
        // ‖m mᵀ u‖ = σ₁² once converged; below the rank floor there is no direction.
        if !(norm > (RANK_TOL * scale).powi(2)) {
            return None;
        }
        let mut change = 0.0;
        for (a, b) in u.iter_mut().zip(&next) {
            let v = b / norm;
            change += (v - *a) * (v - *a);
            *a = v;
        }
        if change.sqrt() <= opts.tol {
            return Some(u);
        }
    }
    None
}

fn scores(m: &Matrix, p: usize, opts: &SvdOptions, rows: bool) -> Result<Vec<f64>> {
    let d = m.rows().min(m.cols());
    if p == 0 || p > d {
        return Err(Error::InvalidParameter(format!(
            "leverage rank p = {p} must lie in 1..={d}"
        )));
    }
    let svd = truncated_svd_with(m, p, opts)?;
    let rank = svd.numerical_rank(RANK_TOL);
    if rank < p {
        return Err(Error::RankDeficient { requested: p, rank });
    }
    let v = if rows { &svd.left_vectors } else { &svd.right_vectors };
    let scale = 1.0 / p as f64;
    Ok((0..v.rows())
        .map(|i| scale * (0..p).map(|k| v[(i, k)] * v[(i, k)]).sum::<f64>())
        .collect())
}

/// Row means `l_i = (1/n) Σ_j E_ij`, the minimiser of `‖E − l·𝟙ᵀ‖_F²`.
pub fn row_mean_vector(e: &Matrix) -> Result<Vec<f64>> {
    let n = e.cols();
    if n == 0 {
        return Err(Error::InvalidParameter("row mean of a matrix with no columns".into()));
    }
    let mut acc = vec![0.0; e.rows()];
    for c in e.columns() {
        for (a, v) in acc.iter_mut().zip(c) {
            *a += v;
        }
    }
    let inv = 1.0 / n as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_rank_one_splits_evenly() {
        let u = [1.0, 2.0, -0.5];
        let v = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let pi = leverage_scores(&Matrix::outer(&u, &v), 1).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_active_column_takes_all_mass() {
        let u = [0.3, -1.0, 2.0, 0.1];
        let mut e1 = vec![0.0; 5];
        e1[0] = 1.0;
        let pi = leverage_scores(&Matrix::outer(&u, &e1), 1).unwrap();
        assert!((pi[0] - 1.0).abs() < 1e-12);
        assert!(pi[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn rank_too_small_is_an_error() {
        let m = Matrix::outer(&[1.0, 2.0, 3.0], &[1.0, 1.0, 0.0]);
        assert!(matches!(
            leverage_scores(&m, 2),
            Err(Error::RankDeficient { requested: 2, rank: 1 })
        ));
        assert!(leverage_scores(&m, 0).is_err());
    }

    #[test]
    fn row_mean_examples() {
        let e = Matrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]);
        assert_eq!(row_mean_vector(&e).unwrap(), vec![2.0, 3.0]);
        let l0 = [0.25, -1.0, 4.0];
        let exact = Matrix::outer(&l0, &[1.0; 6]);
        let l = row_mean_vector(&exact).unwrap();
        for (a, b) in l.iter().zip(&l0) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(row_mean_vector(&Matrix::zeros(3, 0)).is_err());
    }
}
