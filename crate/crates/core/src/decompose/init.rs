use crate::error::{Error, Result};
use crate::linalg::{
    row_leverage_scores_with, truncated_svd_with, GramOperator, Matrix, SvdOptions,
    SvdTruncation,
};

/// Relative slack on the `π ≥ 1/w` test so exact ties survive rounding.
const TIE_SLACK: f64 = 1e-9;
/// A frame difference this small relative to the frame is treated as zero.
const DEGENERATE_REL: f64 = 1e-12;
/// Subspace tolerance for the initial low-rank solve, which only steers the
/// leverage selection and warm-starts the first update.
pub(crate) const LOOSE_TOL: f64 = 1e-6;
/// Tolerance on the singular vectors behind the scores. Score errors stay
/// around `2e-4 · |u_i|`, far below the `1/w` threshold they are tested against.
const LEVERAGE_TOL: f64 = 1e-4;

/// Ghost-removal initialisation.
///
/// `L0` is the best rank-`k` approximation of `A`. For every frame the
/// difference `A_j − L0_j` is viewed as a `height × width` image; image columns
/// whose leverage score (top `p` right singular vectors) reaches `1/width`
/// are copied into `S0_j`, the rest stay zero. Frames whose difference
/// vanishes get an all-zero `S0_j`.
pub fn ghost_removal_init(
    a: &Matrix,
    k: usize,
    p: usize,
    width: usize,
    height: usize,
) -> Result<(Matrix, Matrix)> {
    let init = ghost_init(a, k, p, width, height, &SvdOptions::default())?;
    Ok((init.low_rank, init.sparse))
}

pub(crate) struct GhostInit {
    pub low_rank: Matrix,
    pub sparse: Matrix,
    pub svd: SvdTruncation,
    pub warnings: Vec<String>,
}

pub(crate) fn ghost_init(
    a: &Matrix,
    k: usize,
    p: usize,
    width: usize,
    height: usize,
    opts: &SvdOptions,
) -> Result<GhostInit> {
    check_dims(a, width, height)?;
    let svd = truncated_svd_with(a, k, opts)?;
    let low_rank = svd.reconstruct();
    let (sparse, warnings) =
        select_high_leverage(a, |j, out| out.copy_from_slice(low_rank.col(j)), p, width, height, opts.seed)?;
    Ok(GhostInit {
        low_rank,
        sparse,
        svd,
        warnings,
    })
}

fn check_dims(a: &Matrix, width: usize, height: usize) -> Result<()> {
    if width * height != a.rows() || width == 0 {
        return Err(Error::shape(
            format!("{} rows for {width}x{height} frames", width * height),
            format!("{} rows", a.rows()),
        ));
    }
    Ok(())
}

/// Builds `S0` from the high-leverage image columns of `A_j − L0_j`, where
/// `low_rank_col(j, buf)` writes `L0_j` into `buf`.
pub(crate) fn select_high_leverage(
    a: &Matrix,
    low_rank_col: impl Fn(usize, &mut [f64]),
    p: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<(Matrix, Vec<String>)> {
    check_dims(a, width, height)?;
    if p == 0 {
        return Err(Error::InvalidParameter("leverage_p must be at least 1".into()));
    }
    let (m, n) = a.shape();
    let p_cap = p.min(width.min(height));
    // Scores only feed a threshold test, so a loose subspace tolerance is enough.
    let opts = SvdOptions {
        seed,
        tol: LEVERAGE_TOL,
        oversample: 0,
        operator: GramOperator::Implicit,
        allow_dense: false,
        ..SvdOptions::default()
    };
    let threshold = (1.0 - TIE_SLACK) / width as f64;
    let mut sparse = Matrix::zeros(m, n);
    let mut diff = vec![0.0; m];
    let mut warnings = Vec::new();
    let mut reduced = 0;
    for j in 0..n {
        low_rank_col(j, &mut diff);
        let aj = a.col(j);
        let mut norm_a = 0.0;
        let mut norm_d = 0.0;
        for (d, &x) in diff.iter_mut().zip(aj) {
            *d = x - *d;
            norm_a += x * x;
            norm_d += *d * *d;
        }
        if norm_d.sqrt() <= DEGENERATE_REL * norm_a.sqrt().max(1.0) {
            continue;
        }
        // A row-major frame read column-major is the transposed image, so the
        // image-column scores are row scores of this `width × height` matrix.
        let flipped = Matrix::from_column_major(width, height, std::mem::take(&mut diff))?;
        let scores = match row_leverage_scores_with(&flipped, p_cap, &opts) {
            Ok(s) => Some(s),
            Err(Error::RankDeficient { rank, .. }) if rank >= 1 => {
                reduced += 1;
                Some(row_leverage_scores_with(&flipped, rank, &opts)?)
            }
            Err(e) => {
                warnings.push(format!("frame {j}: leverage failed ({e}); S0 left at zero"));
                None
            }
        };
        diff = flipped.into_vec();
        let Some(scores) = scores else { continue };
        let out = sparse.col_mut(j);
        for (x, &pi) in scores.iter().enumerate() {
            if pi >= threshold {
                for y in 0..height {
                    out[y * width + x] = diff[y * width + x];
                }
            }
        }
    }
    if p_cap < p {
        warnings.push(format!(
            "leverage_p = {p} exceeds the frame size; using {p_cap}"
        ));
    }
    if reduced > 0 {
        warnings.push(format!(
            "{reduced} frame difference(s) had rank below leverage_p = {p_cap}; used their numerical rank"
        ));
    }
    Ok((sparse, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn background(w: usize, h: usize) -> Vec<f64> {
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                0.4 + 0.1 * (0.3 * x).sin() + 0.05 * (0.2 * y).cos()
            })
            .collect()
    }

    #[test]
    fn exact_low_rank_gives_zero_sparse_part() {
        let (w, h, n) = (8, 6, 5);
        let bg = background(w, h);
        let a = Matrix::from_fn(w * h, n, |i, j| bg[i] * (1.0 + 0.1 * j as f64));
        let (l0, s0) = ghost_removal_init(&a, 1, 1, w, h).unwrap();
        assert_eq!(s0.count_nonzero(), 0);
        let err: f64 = l0.sub(&a).unwrap().as_slice().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn moving_block_selects_its_columns() {
        let (w, h, n) = (24, 20, 12);
        let bg = background(w, h);
        let a = Matrix::from_fn(w * h, n, |i, j| {
            let (x, y) = (i % w, i / w);
            let top = j;
            if (10..=14).contains(&x) && (top..top + 6).contains(&y) {
                0.95
            } else {
                bg[i]
            }
        });
        let (_, s0) = ghost_removal_init(&a, 1, 1, w, h).unwrap();
        assert!(s0.count_nonzero() > 0);
        for j in 0..n {
            for (i, v) in s0.col(j).iter().enumerate() {
                if *v != 0.0 {
                    assert!((9..=15).contains(&(i % w)), "frame {j} column {}", i % w);
                }
            }
        }
    }

    #[test]
    fn uniform_energy_keeps_every_column() {
        let (w, h) = (5, 4);
        let a = Matrix::from_fn(w * h, 1, |i, _| if (i / w) % 2 == 0 { 1.0 } else { -1.0 });
        let zero = |_: usize, out: &mut [f64]| out.iter_mut().for_each(|v| *v = 0.0);
        let (s0, _) = select_high_leverage(&a, zero, 1, w, h, 0).unwrap();
        assert_eq!(s0.count_nonzero(), w * h);
    }

    #[test]
    fn rank_shortfall_falls_back_to_numerical_rank() {
        let (w, h) = (6, 6);
        // A rank-1 difference with p = 3 requested.
        let a = Matrix::from_fn(w * h, 1, |i, _| if i % w == 2 { 1.0 + (i / w) as f64 } else { 0.0 });
        let zero = |_: usize, out: &mut [f64]| out.iter_mut().for_each(|v| *v = 0.0);
        let (s0, warnings) = select_high_leverage(&a, zero, 3, w, h, 0).unwrap();
        assert_eq!(s0.count_nonzero(), h);
        assert_eq!(warnings.len(), 1);
    }
}
