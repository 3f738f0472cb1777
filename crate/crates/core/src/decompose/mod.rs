//! Alternating minimisation drivers for `A ∘ τ ≈ L + S`.
//!
//! Every iteration runs three block updates, each an exact minimiser of the
//! objective in its own variable (given exact SVDs):
//!
//! 1. motion: `τ_j` aligning frame `j` with `L_j + S_j` (skipped for
//!    [`MotionModel::Identity`]),
//! 2. background: best rank-`k` fit of `A∘τ − S`, or the row mean for the
//!    SVD-free driver,
//! 3. foreground: soft threshold, per-frame image-column shrinkage, or
//!    top-`κ` hard threshold of `A∘τ − L`.

mod config;
mod init;
mod objective;

use std::borrow::Cow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::DecompositionConfig;
pub use init::ghost_removal_init;
pub use objective::objective_value;

use crate::error::{Error, Result};
use crate::frames::{Frame, FrameStack};
use crate::linalg::{
    frobenius_norm_sq, hard_threshold_in_place, narrow_is_cols, norm2, shrink_column_in_place,
    soft_threshold_scalar, truncated_svd_with, GramOperator, Matrix,
    SparsityRule, SvdOptions,
};
use crate::motion::{estimate_motion, prealign_to_middle_with, warp_stack, MotionModel, MotionParams};

/// Which of the three drivers produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Rank-k background, entrywise ℓ1 foreground.
    Tau,
    /// Rank-k background, image-column block-sparse foreground.
    Block,
    /// Constant background, cardinality-constrained foreground.
    SvdFree,
}

impl Algorithm {
    pub fn for_rule(rule: &SparsityRule) -> Self {
        match rule {
            SparsityRule::SoftEntry { .. } => Algorithm::Tau,
            SparsityRule::ColumnBlock { .. } => Algorithm::Block,
            SparsityRule::Cardinality { .. } => Algorithm::SvdFree,
        }
    }
}

/// The background component.
#[derive(Debug, Clone, PartialEq)]
pub enum LowRank {
    Full(Matrix),
    /// `L = l·𝟙ᵀ` with `n` columns.
    RankOne { l: Vec<f64>, n: usize },
}

impl LowRank {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            LowRank::Full(m) => m.shape(),
            LowRank::RankOne { l, n } => (l.len(), *n),
        }
    }

    /// Column `j` of `L`.
    pub fn column(&self, j: usize) -> &[f64] {
        match self {
            LowRank::Full(m) => m.col(j),
            LowRank::RankOne { l, n } => {
                assert!(j < *n, "column {j} out of range");
                l
            }
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        match self {
            LowRank::Full(m) => m.clone(),
            LowRank::RankOne { l, n } => Matrix::outer(l, &vec![1.0; *n]),
        }
    }
}

/// Wall-clock per stage, in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub prealign_ms: f64,
    pub init_ms: f64,
    pub iterations: Vec<IterationTiming>,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTiming {
    pub motion_ms: f64,
    pub low_rank_ms: f64,
    pub sparse_ms: f64,
    pub total_ms: f64,
}

impl Timings {
    pub fn mean_iteration_ms(&self) -> f64 {
        if self.iterations.is_empty() {
            return 0.0;
        }
        self.iterations.iter().map(|t| t.total_ms).sum::<f64>() / self.iterations.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub algorithm: Algorithm,
    pub width: usize,
    pub height: usize,
    pub low_rank: LowRank,
    pub sparse: Matrix,
    pub tau: MotionParams,
    /// Objective after each iteration.
    pub objective_trace: Vec<f64>,
    /// `‖A∘τ − L − S‖_F² / ‖A‖_F²` after each iteration.
    pub residual_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Non-fatal issues: diverged motion estimates, leverage fallbacks.
    pub warnings: Vec<String>,
    pub timings: Timings,
}

impl DecompositionResult {
    /// `A ∘ τ` for the stack the result was computed from.
    pub fn warped(&self, a: &FrameStack) -> Result<Matrix> {
        warp_stack(a, &self.tau)
    }

    /// The residual `G = A∘τ − L − S`.
    pub fn residual(&self, a: &FrameStack) -> Result<Matrix> {
        let mut g = self.warped(a)?;
        self.sparse.check_same_shape(&g)?;
        for (j, col) in g.columns_mut().enumerate() {
            let l = self.low_rank.column(j);
            let s = self.sparse.col(j);
            for ((v, l), s) in col.iter_mut().zip(l).zip(s) {
                *v -= l + s;
            }
        }
        Ok(g)
    }

    pub fn background_frame(&self, j: usize) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.low_rank.column(j).to_vec(),
        }
    }

    pub fn foreground_frame(&self, j: usize) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.sparse.col(j).to_vec(),
        }
    }
}

/// Dispatches on `cfg.sparsity`.
pub fn decompose(a: &FrameStack, cfg: &DecompositionConfig) -> Result<DecompositionResult> {
    run(a, cfg, Algorithm::for_rule(&cfg.sparsity))
}

/// Rank-k background with an entrywise ℓ1 foreground. Requires
/// [`SparsityRule::SoftEntry`].
pub fn decompose_tau(a: &FrameStack, cfg: &DecompositionConfig) -> Result<DecompositionResult> {
    require(cfg, Algorithm::Tau)?;
    run(a, cfg, Algorithm::Tau)
}

/// Rank-k background with a foreground whose zero pattern follows image
/// columns of each frame. Requires [`SparsityRule::ColumnBlock`].
pub fn decompose_block(a: &FrameStack, cfg: &DecompositionConfig) -> Result<DecompositionResult> {
    require(cfg, Algorithm::Block)?;
    run(a, cfg, Algorithm::Block)
}

/// Constant background `l·𝟙ᵀ` with at most `κ` foreground entries. No SVD is
/// computed unless ghost removal is requested. Requires
/// [`SparsityRule::Cardinality`]; the rank is forced to 1.
pub fn decompose_svdfree(a: &FrameStack, cfg: &DecompositionConfig) -> Result<DecompositionResult> {
    require(cfg, Algorithm::SvdFree)?;
    run(a, cfg, Algorithm::SvdFree)
}

fn require(cfg: &DecompositionConfig, algo: Algorithm) -> Result<()> {
    if Algorithm::for_rule(&cfg.sparsity) != algo {
        return Err(Error::InvalidParameter(format!(
            "{algo:?} driver cannot use sparsity rule {:?}",
            cfg.sparsity
        )));
    }
    Ok(())
}

#[inline]
fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Current background estimate.
enum Background {
    /// `L = A∘τ` (naive initialisation).
    Warped,
    Full(Matrix),
    RankOne(Vec<f64>),
}

impl Background {
    fn column<'a>(&'a self, warped: &'a Matrix, j: usize) -> &'a [f64] {
        match self {
            Background::Warped => warped.col(j),
            Background::Full(m) => m.col(j),
            Background::RankOne(l) => l,
        }
    }
}

fn run(a: &FrameStack, cfg: &DecompositionConfig, algo: Algorithm) -> Result<DecompositionResult> {
    let started = Instant::now();
    let (m, n) = a.matrix().shape();
    let (width, height) = (a.width(), a.height());
    let mut warnings = Vec::new();
    let mut cfg = cfg.clone();
    if algo == Algorithm::SvdFree && cfg.rank != 1 {
        warnings.push(format!("SVD-free mode uses rank 1 (requested {})", cfg.rank));
        cfg.rank = 1;
    }
    cfg.validate(m, n)?;
    let mut timings = Timings::default();
    let norm_a_sq = frobenius_norm_sq(a.matrix());
    let denom = if norm_a_sq > 0.0 { norm_a_sq } else { 1.0 };
    let moving = cfg.motion != MotionModel::Identity;
    let levels = cfg.pyramid_levels;

    let mut tau = MotionParams::identity(cfg.motion, n);
    if moving && cfg.prealign && n >= 2 {
        let t0 = Instant::now();
        let pre = prealign_to_middle_with(a, cfg.motion, levels)?;
        let bad = pre.diverged_frames();
        if !bad.is_empty() {
            warnings.push(format!("prealignment diverged on frames {bad:?}; kept identity there"));
        }
        tau = pre.params;
        timings.prealign_ms = ms(t0);
    }
    let mut warped: Cow<Matrix> = if moving {
        Cow::Owned(warp_stack(a, &tau)?)
    } else {
        Cow::Borrowed(a.matrix())
    };

    let svd_opts = |start: Option<Matrix>| SvdOptions {
        seed: cfg.seed,
        start,
        ..SvdOptions::default()
    };
    let k = cfg.rank;
    let p = cfg.effective_leverage_p();

    // Initialisation.
    let t0 = Instant::now();
    let mut basis: Option<Matrix> = None;
    let mut diff_buf: Option<Matrix> = None;
    let (mut background, mut sparse) = match algo {
        Algorithm::Tau | Algorithm::Block if cfg.ghost_removal => {
            // L0 only steers the leverage selection and warm-starts the first
            // update, so a loose implicit solve is enough.
            let opts = SvdOptions {
                tol: init::LOOSE_TOL,
                oversample: 0,
                operator: GramOperator::Implicit,
                ..svd_opts(None)
            };
            let g = init::ghost_init(&warped, k, p, width, height, &opts)?;
            warnings.extend(g.warnings);
            basis = Some(narrow_basis(&warped, &g.svd));
            (Background::Full(g.low_rank), g.sparse)
        }
        Algorithm::Tau | Algorithm::Block => (Background::Warped, Matrix::zeros(m, n)),
        Algorithm::SvdFree => {
            let l = row_mean_of_difference(&warped, None);
            let s = if cfg.ghost_removal {
                let (s, w) = init::select_high_leverage(
                    &warped,
                    |_, out| out.copy_from_slice(&l),
                    p,
                    width,
                    height,
                    cfg.seed,
                )?;
                warnings.extend(w);
                s
            } else {
                Matrix::zeros(m, n)
            };
            (Background::RankOne(l), s)
        }
    };
    timings.init_ms = ms(t0);

    let mut objective_trace = Vec::with_capacity(cfg.max_iter);
    let mut residual_trace = Vec::with_capacity(cfg.max_iter);
    let mut converged = false;
    let mut iterations_run = 0;
    for t in 1..=cfg.max_iter {
        let it_start = Instant::now();
        let mut timing = IterationTiming::default();

        // (a) motion
        if moving && cfg.motion_freeze_after.is_none_or(|f| t <= f) {
            let t0 = Instant::now();
            let mut diverged = 0;
            for j in 0..n {
                let l = background.column(&warped, j);
                let target = Frame {
                    width,
                    height,
                    pixels: l.iter().zip(sparse.col(j)).map(|(l, s)| l + s).collect(),
                };
                // Warm started, so the fine level alone is enough and avoids
                // coarse levels undoing a good estimate.
                let est = estimate_motion(&a.frame(j), &target, &tau.per_frame[j], cfg.motion, 1)?;
                diverged += est.diverged as usize;
                tau.per_frame[j] = est.params;
            }
            if diverged > 0 {
                warnings.push(format!(
                    "iteration {t}: motion estimate diverged on {diverged} frame(s); kept previous parameters"
                ));
            }
            warped = Cow::Owned(warp_stack(a, &tau)?);
            timing.motion_ms = ms(t0);
        }

        // (b) background
        let t0 = Instant::now();
        background = match algo {
            Algorithm::Tau | Algorithm::Block => {
                // Large buffers are recycled across iterations; fresh
                // allocations of this size cost page faults every time.
                let diff = diff_buf.get_or_insert_with(|| Matrix::zeros(m, n));
                for ((d, w), s) in diff.as_mut_slice().iter_mut().zip(warped.as_slice()).zip(sparse.as_slice()) {
                    *d = w - s;
                }
                let svd = truncated_svd_with(diff, k, &svd_opts(basis.take()))?;
                basis = Some(narrow_basis(diff, &svd));
                let mut l = match std::mem::replace(&mut background, Background::Warped) {
                    Background::Full(l) => l,
                    _ => Matrix::zeros(m, n),
                };
                svd.reconstruct_into(&mut l);
                Background::Full(l)
            }
            Algorithm::SvdFree => Background::RankOne(row_mean_of_difference(&warped, Some(&sparse))),
        };
        timing.low_rank_ms = ms(t0);

        // (c) foreground
        let t0 = Instant::now();
        let recycled = std::mem::replace(&mut sparse, Matrix::zeros(0, 0));
        let (s, residual_sq, pen) = match (algo, &cfg.sparsity) {
            (Algorithm::Tau, SparsityRule::SoftEntry { lambda }) => {
                soft_step(&warped, &background, *lambda, recycled)
            }
            (Algorithm::Block, SparsityRule::ColumnBlock { lambda }) => {
                block_step(&warped, &background, *lambda, width, recycled)
            }
            (Algorithm::SvdFree, SparsityRule::Cardinality { kappa }) => {
                cardinality_step(&warped, &background, *kappa, recycled)
            }
            _ => unreachable!("rule checked against the driver"),
        };
        sparse = s;
        timing.sparse_ms = ms(t0);

        let ratio = residual_sq / denom;
        objective_trace.push(residual_sq + pen);
        residual_trace.push(ratio);
        iterations_run = t;
        timing.total_ms = ms(it_start);
        timings.iterations.push(timing);
        if ratio <= cfg.tol {
            converged = true;
            break;
        }
    }

    let low_rank = match background {
        Background::Full(l) => LowRank::Full(l),
        Background::RankOne(l) => LowRank::RankOne { l, n },
        Background::Warped => LowRank::Full(warped.into_owned()),
    };
    timings.total_ms = ms(started);
    Ok(DecompositionResult {
        algorithm: algo,
        width,
        height,
        low_rank,
        sparse,
        tau,
        objective_trace,
        residual_trace,
        iterations_run,
        converged,
        warnings,
        timings,
    })
}

/// Singular basis on the narrow side of `m`, the warm start for the next SVD.
fn narrow_basis(m: &Matrix, svd: &crate::linalg::SvdTruncation) -> Matrix {
    if narrow_is_cols(m) {
        svd.right_vectors.clone()
    } else {
        svd.left_vectors.clone()
    }
}

/// Row means of `W − S` (or of `W` when `S` is absent).
fn row_mean_of_difference(w: &Matrix, s: Option<&Matrix>) -> Vec<f64> {
    let mut acc = vec![0.0; w.rows()];
    for j in 0..w.cols() {
        let wj = w.col(j);
        match s {
            Some(s) => {
                for ((a, w), s) in acc.iter_mut().zip(wj).zip(s.col(j)) {
                    *a += w - s;
                }
            }
            None => {
                for (a, w) in acc.iter_mut().zip(wj) {
                    *a += w;
                }
            }
        }
    }
    let inv = 1.0 / w.cols() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Soft-threshold update. Returns `(S, ‖R − S‖², 2λ‖S‖₁)` with `R = W − L`.
/// `s` is reused as the output when it has the right shape.
fn soft_step(w: &Matrix, background: &Background, lambda: f64, s: Matrix) -> (Matrix, f64, f64) {
    let (m, n) = w.shape();
    let mut s = reuse(s, m, n);
    let mut res = 0.0;
    let mut l1 = 0.0;
    for j in 0..n {
        let l = background.column(w, j);
        for ((out, &wv), &lv) in s.col_mut(j).iter_mut().zip(w.col(j)).zip(l) {
            let r = wv - lv;
            let v = soft_threshold_scalar(r, lambda);
            *out = v;
            res += (r - v) * (r - v);
            l1 += v.abs();
        }
    }
    (s, res, 2.0 * lambda * l1)
}

/// Per-frame image-column shrinkage. Returns `(S, ‖R − S‖², 2λ Σ ‖col‖₂)`.
fn block_step(
    w: &Matrix,
    background: &Background,
    lambda: f64,
    width: usize,
    s: Matrix,
) -> (Matrix, f64, f64) {
    let (m, n) = w.shape();
    let height = m / width;
    let mut s = reuse(s, m, n);
    let mut res = 0.0;
    let mut l21 = 0.0;
    let mut r = vec![0.0; m];
    let mut buf = vec![0.0; height];
    for j in 0..n {
        let l = background.column(w, j);
        for ((r, &wv), &lv) in r.iter_mut().zip(w.col(j)).zip(l) {
            *r = wv - lv;
        }
        let out = s.col_mut(j);
        for x in 0..width {
            for (y, b) in buf.iter_mut().enumerate() {
                *b = r[y * width + x];
            }
            shrink_column_in_place(&mut buf, lambda);
            l21 += norm2(&buf);
            for (y, b) in buf.iter().enumerate() {
                let i = y * width + x;
                out[i] = *b;
                res += (r[i] - b) * (r[i] - b);
            }
        }
    }
    (s, res, 2.0 * lambda * l21)
}

/// `buf` if it is `m × n` (every entry gets overwritten), else a fresh matrix.
fn reuse(buf: Matrix, m: usize, n: usize) -> Matrix {
    if buf.shape() == (m, n) {
        buf
    } else {
        Matrix::zeros(m, n)
    }
}

/// Top-κ hard threshold. Returns `(S, ‖R − S‖², 0)`.
fn cardinality_step(w: &Matrix, background: &Background, kappa: usize, s: Matrix) -> (Matrix, f64, f64) {
    let (m, n) = w.shape();
    let mut r = reuse(s, m, n);
    for j in 0..n {
        let l = background.column(w, j);
        for ((out, &wv), &lv) in r.col_mut(j).iter_mut().zip(w.col(j)).zip(l) {
            *out = wv - lv;
        }
    }
    let res = hard_threshold_in_place(r.as_mut_slice(), kappa);
    (r, res, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{column_shrink, rank_k_project};

    fn rank_one_stack(w: usize, h: usize, n: usize) -> FrameStack {
        let data = Matrix::from_fn(w * h, n, |i, j| {
            (0.3 + 0.4 * ((i as f64) * 0.37).sin().abs()) * (1.0 + 0.05 * j as f64)
        });
        FrameStack::new(w, h, data).unwrap()
    }

    #[test]
    fn exact_rank_one_needs_one_iteration() {
        let a = rank_one_stack(6, 5, 8);
        let res = decompose_tau(&a, &DecompositionConfig::tau(1, 0.1)).unwrap();
        assert_eq!(res.sparse.count_nonzero(), 0);
        assert_eq!(res.iterations_run, 1);
        assert!(res.converged);
        assert!(res.residual_trace[0] <= 1e-8);
    }

    #[test]
    fn identical_frames_with_zero_kappa() {
        let frame: Vec<f64> = (0..20).map(|i| 0.05 * i as f64).collect();
        let a = FrameStack::new(5, 4, Matrix::from_columns(&vec![frame.clone(); 4]).unwrap()).unwrap();
        let res = decompose_svdfree(&a, &DecompositionConfig::svdfree(0)).unwrap();
        match &res.low_rank {
            LowRank::RankOne { l, n } => {
                assert_eq!(*n, 4);
                for (x, y) in l.iter().zip(&frame) {
                    assert!((x - y).abs() < 1e-15);
                }
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(res.sparse.count_nonzero(), 0);
        assert!(res.residual(&a).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn drivers_reject_mismatched_rules() {
        let a = rank_one_stack(4, 4, 3);
        assert!(decompose_tau(&a, &DecompositionConfig::block(1, 0.1)).is_err());
        assert!(decompose_block(&a, &DecompositionConfig::svdfree(3)).is_err());
        assert!(decompose_svdfree(&a, &DecompositionConfig::tau(1, 0.1)).is_err());
        let mut cfg = DecompositionConfig::svdfree(3);
        cfg.rank = 2;
        let res = decompose(&a, &cfg).unwrap();
        assert_eq!(res.warnings.len(), 1);
    }

    #[test]
    fn block_step_matches_column_shrink_on_reshaped_frames() {
        let (w, h, n) = (5, 4, 3);
        let data = Matrix::from_fn(w * h, n, |i, j| ((i * 7 + j * 3) as f64 * 0.61).sin());
        let background = Background::Full(Matrix::zeros(w * h, n));
        let (s, _, _) = block_step(&data, &background, 0.8, w, Matrix::zeros(0, 0));
        for j in 0..n {
            let frame = Frame { width: w, height: h, pixels: data.col(j).to_vec() };
            let expect = Frame::from_matrix(&column_shrink(&frame.to_matrix(), 0.8).unwrap());
            for (a, b) in s.col(j).iter().zip(&expect.pixels) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        // All columns below λ: nothing survives.
        let (s, _, _) = block_step(&data.scale(0.01), &background, 0.8, w, s);
        assert_eq!(s.count_nonzero(), 0);
    }

    #[test]
    fn ghost_init_first_step_matches_plain_svd() {
        // The loose, warm-started init must not change the first background.
        let (w, h, n) = (10, 8, 6);
        let data = Matrix::from_fn(w * h, n, |i, j| {
            let base = 0.5 + 0.2 * ((i as f64) * 0.3).sin();
            if (i % w) == j + 2 { base + 0.4 } else { base }
        });
        let a = FrameStack::new(w, h, data).unwrap();
        let cfg = DecompositionConfig::tau(1, 0.05).with_ghost_removal(true).with_max_iter(1);
        let res = decompose_tau(&a, &cfg).unwrap();
        let (_, s0) = ghost_removal_init(a.matrix(), 1, 1, w, h).unwrap();
        let l1 = rank_k_project(&a.matrix().sub(&s0).unwrap(), 1).unwrap();
        let LowRank::Full(l) = &res.low_rank else { panic!() };
        let diff = l.sub(&l1).unwrap().max_abs();
        assert!(diff < 1e-8, "{diff}");
    }
}
