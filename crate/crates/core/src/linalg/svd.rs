//! Truncated singular value decomposition.
//!
//! Small problems (or requests for most of the spectrum) are solved exactly
//! through a Jacobi eigen-decomposition of the Gram matrix on the narrow side.
//! Everything else goes through block power iteration with Rayleigh–Ritz
//! extraction, applied either to an explicitly formed Gram matrix or
//! implicitly as `Mᵀ(M·X)`, whichever is cheaper.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::eigen::symmetric_eigen;
use super::matrix::{axpy, dot, norm2, Matrix};
use crate::error::{Error, Result};

/// Largest narrow dimension for which the exact dense route may be taken.
pub const DENSE_LIMIT: usize = 64;
/// Gram eigenvalues below this fraction of the largest count as null.
const NULL_EIG_REL: f64 = 1e-14;

/// Top-k singular triplets of a matrix.
#[derive(Debug, Clone)]
pub struct SvdTruncation {
    pub k: usize,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// m×k, orthonormal columns.
    pub left_vectors: Matrix,
    /// n×k, orthonormal columns.
    pub right_vectors: Matrix,
}

impl SvdTruncation {
    /// `Σ σ_i u_i v_iᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut out = Matrix::zeros(self.left_vectors.rows(), self.right_vectors.rows());
        self.reconstruct_into(&mut out);
        out
    }

    /// As [`Self::reconstruct`], overwriting `out`, which must be `m × n`.
    pub fn reconstruct_into(&self, out: &mut Matrix) {
        assert_eq!(out.shape(), (self.left_vectors.rows(), self.right_vectors.rows()));
        out.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        for (i, &s) in self.singular_values.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let u = self.left_vectors.col(i);
            let v = self.right_vectors.col(i);
            for (j, col) in out.columns_mut().enumerate() {
                axpy(s * v[j], u, col);
            }
        }
    }

    /// Number of singular values above `rel_tol · σ₁`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * top)
            .count()
    }
}

/// How the Gram operator is applied during power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramOperator {
    #[default]
    Auto,
    Explicit,
    Implicit,
}

#[derive(Debug, Clone)]
pub struct SvdOptions {
    /// Convergence threshold on the change of the top-k subspace between sweeps.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Extra block columns carried to speed up convergence.
    pub oversample: usize,
    pub seed: u64,
    /// Starting block on the narrow side (columns are orthonormalised first).
    pub start: Option<Matrix>,
    pub operator: GramOperator,
    /// Allow the exact Jacobi route when the narrow side is at most [`DENSE_LIMIT`].
    pub allow_dense: bool,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 500,
            oversample: 4,
            seed: 0x5eed,
            start: None,
            operator: GramOperator::Auto,
            allow_dense: true,
        }
    }
}

pub fn truncated_svd(m: &Matrix, k: usize) -> Result<SvdTruncation> {
    truncated_svd_with(m, k, &SvdOptions::default())
}

pub fn truncated_svd_with(m: &Matrix, k: usize, opts: &SvdOptions) -> Result<SvdTruncation> {
    truncated_svd_impl(m, k, opts)
}

/// Best rank-k approximation in Frobenius norm.
pub fn rank_k_project(m: &Matrix, k: usize) -> Result<Matrix> {
    Ok(truncated_svd(m, k)?.reconstruct())
}

/// Whether the narrow side of `m` is its column dimension.
#[inline]
pub(crate) fn narrow_is_cols(m: &Matrix) -> bool {
    m.cols() <= m.rows()
}

pub(crate) fn narrow_gram(m: &Matrix) -> Matrix {
    if narrow_is_cols(m) {
        m.gram_cols()
    } else {
        m.gram_rows()
    }
}

fn truncated_svd_impl(
    m: &Matrix,
    k: usize,
    opts: &SvdOptions,
) -> Result<SvdTruncation> {
    let (rows, cols) = m.shape();
    let d = rows.min(cols);
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "rank k = {k} must lie in 1..={d} for a {rows}x{cols} matrix"
        )));
    }
    let by_cols = narrow_is_cols(m);
    let dense = opts.allow_dense && d <= DENSE_LIMIT && 4 * k >= d;
    let (eigvals, basis) = if dense {
        let (vals, vecs) = symmetric_eigen(&narrow_gram(m))?;
        let basis = Matrix::from_fn(d, k, |i, j| vecs[(i, j)]);
        (vals[..k].to_vec(), basis)
    } else {
        power_iteration(m, by_cols, k, opts)?
    };
    finish(m, by_cols, &eigvals, basis)
}

/// Block power iteration on the narrow-side Gram operator.
fn power_iteration(
    m: &Matrix,
    by_cols: bool,
    k: usize,
    opts: &SvdOptions,
) -> Result<(Vec<f64>, Matrix)> {
    let d = m.rows().min(m.cols());
    let b = (k + opts.oversample).min(d);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut q = Matrix::zeros(d, b);
    let mut filled = 0;
    if let Some(start) = &opts.start {
        if start.rows() == d {
            for j in 0..start.cols().min(b) {
                q.col_mut(j).copy_from_slice(start.col(j));
            }
            filled = start.cols().min(b);
        }
    }
    for j in filled..b {
        for v in q.col_mut(j) {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    orthonormalize(&mut q, &mut rng);

    let use_explicit = match opts.operator {
        GramOperator::Explicit => true,
        GramOperator::Implicit => false,
        GramOperator::Auto => {
            let sweeps = if opts.start.is_some() { 3.0 } else { 10.0 };
            (d as f64) / 2.0 <= 4.0 * b as f64 * sweeps
        }
    };
    let explicit = use_explicit.then(|| narrow_gram(m));
    let apply = |x: &Matrix| -> Matrix {
        match &explicit {
            Some(g) => g.matmul(x).expect("conforming Gram"),
            None if by_cols => m.tr_matmul(&m.matmul(x).expect("conforming")).expect("conforming"),
            None => m.matmul(&m.tr_matmul(x).expect("conforming")).expect("conforming"),
        }
    };

    let mut prev: Option<Matrix> = None;
    let mut change = f64::INFINITY;
    for _sweep in 0..opts.max_sweeps {
        let y = apply(&q);
        let mut t = q.tr_matmul(&y)?;
        symmetrize(&mut t);
        let (vals, z) = symmetric_eigen(&t)?;
        let q_ritz = q.matmul(&z)?;
        let y_ritz = y.matmul(&z)?;
        let top = Matrix::from_fn(d, k, |i, j| q_ritz[(i, j)]);

        if vals[0] <= 0.0 {
            // Zero operator: every subspace is invariant.
            return Ok((vec![0.0; k], top));
        }
        if let Some(p) = &prev {
            // Directions in the numerical null space are arbitrary and get
            // re-randomised each sweep, so only the significant ones must settle.
            let r = vals[..k].iter().filter(|&&v| v > NULL_EIG_REL * vals[0]).count();
            change = subspace_change(&p.leading(r), &top.leading(r));
            if change <= opts.tol {
                return Ok((vals[..k].to_vec(), top));
            }
        }
        prev = Some(top);
        q = y_ritz;
        orthonormalize(&mut q, &mut rng);
    }
    Err(Error::NoConvergence {
        sweeps: opts.max_sweeps,
        change,
    })
}

impl Matrix {
    /// The first `r` columns.
    fn leading(&self, r: usize) -> Matrix {
        Matrix::from_fn(self.rows(), r, |i, j| self[(i, j)])
    }
}

/// `‖Q_new − Q_old (Q_oldᵀ Q_new)‖_F`, the sine of the angle between the spans
/// measured in Frobenius norm.
fn subspace_change(old: &Matrix, new: &Matrix) -> f64 {
    let proj = old.tr_matmul(new).expect("same rows");
    let back = old.matmul(&proj).expect("conforming");
    new.as_slice()
        .iter()
        .zip(back.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn symmetrize(t: &mut Matrix) {
    let n = t.rows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (t[(i, j)] + t[(j, i)]);
            t[(i, j)] = avg;
            t[(j, i)] = avg;
        }
    }
}

/// Two-pass modified Gram–Schmidt. Collapsed columns are refilled with random
/// directions so the result always has orthonormal columns.
pub(crate) fn orthonormalize(q: &mut Matrix, rng: &mut ChaCha8Rng) {
    let cols = q.cols();
    let rows = q.rows();
    for j in 0..cols {
        let mut attempts = 0;
        loop {
            let original = norm2(q.col(j));
            for _pass in 0..2 {
                for i in 0..j {
                    let (done, cur) = split_two(q, i, j);
                    let r = dot(done, cur);
                    axpy(-r, done, cur);
                }
            }
            let norm = norm2(q.col(j));
            if norm > 1e-10 * original.max(f64::MIN_POSITIVE) && norm > 1e-300 {
                q.col_mut(j).iter_mut().for_each(|v| *v /= norm);
                break;
            }
            attempts += 1;
            assert!(attempts < 64, "cannot complete a {rows}x{cols} orthonormal basis");
            for v in q.col_mut(j) {
                *v = StandardNormal.sample(rng);
            }
        }
    }
}

/// Borrows column `i` immutably and column `j > i` mutably.
fn split_two(q: &mut Matrix, i: usize, j: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(i < j);
    let rows = q.rows();
    let (head, tail) = q.as_mut_slice().split_at_mut(j * rows);
    (&head[i * rows..(i + 1) * rows], &mut tail[..rows])
}

/// Recovers the other singular factor from the narrow-side basis.
fn finish(m: &Matrix, by_cols: bool, eigvals: &[f64], basis: Matrix) -> Result<SvdTruncation> {
    let k = basis.cols();
    let mut other = if by_cols {
        m.matmul(&basis)?
    } else {
        m.tr_matmul(&basis)?
    };
    let mut sigma: Vec<f64> = other.columns().map(norm2).collect();
    let top = sigma
        .iter()
        .copied()
        .fold(eigvals.first().copied().unwrap_or(0.0).max(0.0).sqrt(), f64::max);
    let floor = 1e-13 * top;
    for (j, s) in sigma.iter_mut().enumerate() {
        if *s > floor && *s > 0.0 {
            let inv = 1.0 / *s;
            other.col_mut(j).iter_mut().for_each(|v| *v *= inv);
        } else {
            *s = 0.0;
            other.col_mut(j).iter_mut().for_each(|v| *v = 0.0);
        }
    }

    // Sort jointly so the singular values are non-increasing.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let sigma: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let basis = Matrix::from_fn(basis.rows(), k, |i, j| basis[(i, order[j])]);
    let mut other = Matrix::from_fn(other.rows(), k, |i, j| other[(i, order[j])]);

    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0ffee);
    complete_basis(&mut other, &mut rng);
    let (left, right) = if by_cols { (other, basis) } else { (basis, other) };
    Ok(SvdTruncation {
        k,
        singular_values: sigma,
        left_vectors: left,
        right_vectors: right,
    })
}

/// Fills zero columns with canonical directions, then orthonormalises.
fn complete_basis(q: &mut Matrix, rng: &mut ChaCha8Rng) {
    let rows = q.rows();
    let mut next_axis = 0;
    for j in 0..q.cols() {
        if q.col(j).iter().all(|v| *v == 0.0) {
            q.col_mut(j)[next_axis % rows] = 1.0;
            next_axis += 1;
        }
    }
    orthonormalize(q, rng);
}
