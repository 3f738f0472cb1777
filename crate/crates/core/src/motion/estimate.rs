use serde::Serialize;

use super::model::{Affine2, MotionModel};
use super::pyramid::Pyramid;
use super::warp::{image_center, resample, sample_bilinear};
use crate::error::{Error, Result};
use crate::frames::Frame;

/// Default number of pyramid levels.
pub const DEFAULT_LEVELS: usize = 3;
/// Gauss–Newton iterations per level, accepted and rejected steps alike.
pub const MAX_ITERATIONS_PER_LEVEL: usize = 30;
/// Initial (and minimum) Levenberg damping factor.
pub const DAMPING: f64 = 1e-4;
/// A level stops once a step moves no image corner by more than this (level pixels).
const STEP_TOL: f64 = 1e-4;
/// Consecutive rejected steps before a level gives up.
const MAX_REJECTS: usize = 3;

/// Outcome of [`estimate_motion`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionEstimate {
    /// Parameters `τ` such that `warp_frame(source, τ) ≈ target`.
    pub params: Vec<f64>,
    /// Mean squared residual at `params`, full resolution.
    pub residual: f64,
    /// Mean squared residual at the initial parameters.
    pub initial_residual: f64,
    /// Total Gauss–Newton iterations over all levels.
    pub iterations: usize,
    /// Mean squared residual after every accepted step, tagged with its level.
    pub trace: Vec<(usize, f64)>,
    /// Set when refinement made the fit worse; `params` is then `τ_init`.
    pub diverged: bool,
}

/// Estimates `τ` so that `warp_frame(source, τ, model)` matches `target` in
/// the least-squares sense.
///
/// Coarse-to-fine damped Gauss–Newton: at every pyramid level the sampling
/// transform `τ⁻¹` is linearised and the step solves
/// `(JᵀJ + μ·diag JᵀJ) Δ = −Jᵀr`. Steps that increase the residual are
/// rejected and `μ` grows tenfold; accepted steps shrink it back toward
/// [`DAMPING`]. If the final residual exceeds the one at `τ_init`, `τ_init` is
/// returned with `diverged` set.
pub fn estimate_motion(
    source: &Frame,
    target: &Frame,
    tau_init: &[f64],
    model: MotionModel,
    levels: usize,
) -> Result<MotionEstimate> {
    if (source.width, source.height) != (target.width, target.height) {
        return Err(Error::shape(
            format!("{}x{}", target.width, target.height),
            format!("{}x{}", source.width, source.height),
        ));
    }
    if levels == 0 {
        return Err(Error::InvalidParameter("levels must be at least 1".into()));
    }
    let forward = model.to_affine(tau_init)?;
    let mut sampling = forward.inverse()?;
    let origin = image_center(source.width, source.height);
    let initial_residual = mean_sq_diff(&resample(source, &sampling, origin), target);
    if model == MotionModel::Identity {
        return Ok(MotionEstimate {
            params: vec![],
            residual: initial_residual,
            initial_residual,
            iterations: 0,
            trace: vec![],
            diverged: false,
        });
    }

    let src = Pyramid::build(source, levels)?;
    let tgt = Pyramid::build(target, levels)?;
    let mut iterations = 0;
    let mut trace = Vec::new();
    for l in (0..src.level_count()).rev() {
        let scale = (1u64 << l) as f64;
        let level_origin = (origin.0 / scale, origin.1 / scale);
        let mut phi = sampling;
        phi.t = [phi.t[0] / scale, phi.t[1] / scale];
        let mut level = Level::new(src.level(l), tgt.level(l), level_origin, model);
        iterations += level.refine(&mut phi, l, &mut trace);
        phi.t = [phi.t[0] * scale, phi.t[1] * scale];
        sampling = phi;
    }

    let residual = mean_sq_diff(&resample(source, &sampling, origin), target);
    let params = sampling
        .inverse()
        .map(|f| model.from_affine(&f))
        .ok()
        .filter(|p| p.iter().all(|v| v.is_finite()));
    match params {
        Some(params) if residual <= initial_residual => Ok(MotionEstimate {
            params,
            residual,
            initial_residual,
            iterations,
            trace,
            diverged: false,
        }),
        _ => Ok(MotionEstimate {
            params: tau_init.to_vec(),
            residual: initial_residual,
            initial_residual,
            iterations,
            trace,
            diverged: true,
        }),
    }
}

fn mean_sq_diff(a: &Frame, b: &Frame) -> f64 {
    let n = a.pixels.len().max(1) as f64;
    a.pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n
}

/// Central-difference gradient with clamped borders.
fn gradients(f: &Frame) -> (Frame, Frame) {
    let gx = Frame::from_fn(f.width, f.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        0.5 * (f.get_clamped(x + 1, y) - f.get_clamped(x - 1, y))
    });
    let gy = Frame::from_fn(f.width, f.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        0.5 * (f.get_clamped(x, y + 1) - f.get_clamped(x, y - 1))
    });
    (gx, gy)
}

struct Level<'a> {
    source: &'a Frame,
    target: &'a Frame,
    gx: Frame,
    gy: Frame,
    origin: (f64, f64),
    model: MotionModel,
    max_x: f64,
    max_y: f64,
}

impl<'a> Level<'a> {
    fn new(source: &'a Frame, target: &'a Frame, origin: (f64, f64), model: MotionModel) -> Self {
        let (gx, gy) = gradients(source);
        Self {
            source,
            target,
            gx,
            gy,
            origin,
            model,
            max_x: (source.width - 1) as f64,
            max_y: (source.height - 1) as f64,
        }
    }

    /// Sum of squared residuals and, if requested, the normal equations.
    fn evaluate(&self, phi: &Affine2, normal: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let (ox, oy) = self.origin;
        let d = self.model.dof();
        let mut sse = 0.0;
        let mut jac = [0.0f64; 6];
        let mut normal = normal;
        if let Some((h, g)) = normal.as_mut() {
            h.iter_mut().for_each(|v| *v = 0.0);
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for y in 0..self.source.height {
            let py = y as f64 - oy;
            for x in 0..self.source.width {
                let px = x as f64 - ox;
                let (qx, qy) = phi.apply(px, py);
                let (sx, sy) = (qx + ox, qy + oy);
                let r = sample_bilinear(self.source, sx, sy) - self.target.get(x, y);
                sse += r * r;
                let Some((h, g)) = normal.as_mut() else {
                    continue;
                };
                // Clamped samples do not move along the clamped axis.
                let ix = if sx < 0.0 || sx > self.max_x {
                    0.0
                } else {
                    sample_bilinear(&self.gx, sx, sy)
                };
                let iy = if sy < 0.0 || sy > self.max_y {
                    0.0
                } else {
                    sample_bilinear(&self.gy, sx, sy)
                };
                match self.model {
                    MotionModel::Identity => {}
                    MotionModel::Translation => {
                        jac[0] = ix;
                        jac[1] = iy;
                    }
                    MotionModel::Similarity => {
                        jac[0] = ix * px + iy * py;
                        jac[1] = -ix * py + iy * px;
                        jac[2] = ix;
                        jac[3] = iy;
                    }
                    MotionModel::Affine => {
                        jac[0] = ix * px;
                        jac[1] = ix * py;
                        jac[2] = iy * px;
                        jac[3] = iy * py;
                        jac[4] = ix;
                        jac[5] = iy;
                    }
                }
                for i in 0..d {
                    g[i] += jac[i] * r;
                    for j in 0..=i {
                        h[i * d + j] += jac[i] * jac[j];
                    }
                }
            }
        }
        if let Some((h, _)) = normal {
            for i in 0..d {
                for j in 0..i {
                    h[j * d + i] = h[i * d + j];
                }
            }
        }
        sse
    }

    /// Runs damped Gauss–Newton on `phi` in place; returns iterations used.
    fn refine(&mut self, phi: &mut Affine2, level: usize, trace: &mut Vec<(usize, f64)>) -> usize {
        let d = self.model.dof();
        let pixels = (self.source.width * self.source.height) as f64;
        let mut h = vec![0.0; d * d];
        let mut g = vec![0.0; d];
        let mut params = self.model.from_affine(phi);
        let mut sse = self.evaluate(phi, Some((&mut h, &mut g)));
        let mut mu = DAMPING;
        let mut rejects = 0;
        let mut iters = 0;
        while iters < MAX_ITERATIONS_PER_LEVEL {
            iters += 1;
            let Some(delta) = solve_damped(&h, &g, mu, d) else {
                break;
            };
            let candidate: Vec<f64> = params.iter().zip(&delta).map(|(p, s)| p + s).collect();
            let Ok(cand_phi) = self.model.to_affine(&candidate) else {
                break;
            };
            if cand_phi.inverse().is_err() {
                mu *= 10.0;
                rejects += 1;
                if rejects >= MAX_REJECTS {
                    break;
                }
                continue;
            }
            let cand_sse = self.evaluate(&cand_phi, None);
            if cand_sse <= sse {
                let moved = self.corner_displacement(&delta);
                params = candidate;
                *phi = cand_phi;
                sse = self.evaluate(phi, Some((&mut h, &mut g)));
                trace.push((level, sse / pixels));
                mu = (mu / 10.0).max(DAMPING);
                rejects = 0;
                if moved < STEP_TOL {
                    break;
                }
            } else {
                mu *= 10.0;
                rejects += 1;
                if rejects >= MAX_REJECTS {
                    break;
                }
            }
        }
        iters
    }

    /// Largest displacement a parameter step induces at the image corners.
    fn corner_displacement(&self, delta: &[f64]) -> f64 {
        let Ok(step) = self.model.to_affine(delta) else {
            return f64::INFINITY;
        };
        let (ox, oy) = self.origin;
        let mut worst: f64 = 0.0;
        for (cx, cy) in [(-ox, -oy), (ox, -oy), (-ox, oy), (ox, oy)] {
            let dx = (step.a[0][0] - 1.0) * cx + step.a[0][1] * cy + step.t[0];
            let dy = step.a[1][0] * cx + (step.a[1][1] - 1.0) * cy + step.t[1];
            worst = worst.max(dx.hypot(dy));
        }
        worst
    }
}

/// Solves `(H + μ·diag H) Δ = −g` by Gaussian elimination with partial pivoting.
fn solve_damped(h: &[f64], g: &[f64], mu: f64, d: usize) -> Option<Vec<f64>> {
    let mut a = h.to_vec();
    let trace: f64 = (0..d).map(|i| h[i * d + i]).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return None;
    }
    for i in 0..d {
        // Keeps the system solvable when a parameter has no gradient support.
        a[i * d + i] += mu * h[i * d + i] + 1e-12 * trace;
    }
    let mut b: Vec<f64> = g.iter().map(|v| -v).collect();
    for col in 0..d {
        let pivot = (col..d).max_by(|&i, &j| a[i * d + col].abs().total_cmp(&a[j * d + col].abs()))?;
        if a[pivot * d + col].abs() <= f64::MIN_POSITIVE {
            return None;
        }
        if pivot != col {
            for k in 0..d {
                a.swap(col * d + k, pivot * d + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..d {
            let f = a[row * d + col] / a[col * d + col];
            for k in col..d {
                a[row * d + k] -= f * a[col * d + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; d];
    for row in (0..d).rev() {
        let s: f64 = (row + 1..d).map(|k| a[row * d + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * d + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::warp_frame;

    pub(crate) fn textured(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.18 * (x * 0.23 + 0.4).sin() * (y * 0.19).cos()
                + 0.12 * ((x - 0.6 * y) * 0.11).sin()
                + 0.08 * ((0.7 * x + y) * 0.31).cos()
        })
    }

    #[test]
    fn identical_images_give_identity() {
        let f = textured(64, 48);
        for model in [MotionModel::Translation, MotionModel::Similarity, MotionModel::Affine] {
            let est = estimate_motion(&f, &f, &model.identity_params(), model, 3).unwrap();
            let norm: f64 = est.params.iter().map(|p| p * p).sum::<f64>().sqrt();
            assert!(norm <= 1e-6, "{model:?}: {:?}", est.params);
            assert!(!est.diverged);
        }
    }

    #[test]
    fn recovers_subpixel_translation() {
        let src = textured(96, 72);
        let truth = [2.5, -1.25];
        let tgt = warp_frame(&src, &truth, MotionModel::Translation).unwrap();
        let est = estimate_motion(&src, &tgt, &[0.0, 0.0], MotionModel::Translation, 3).unwrap();
        assert!(!est.diverged);
        assert!((est.params[0] - truth[0]).abs() <= 0.1, "{:?}", est.params);
        assert!((est.params[1] - truth[1]).abs() <= 0.1, "{:?}", est.params);
    }

    #[test]
    fn recovers_small_affine() {
        let src = textured(96, 72);
        let truth = [0.02, 0.01, -0.01, -0.02, 1.0, 1.0];
        let tgt = warp_frame(&src, &truth, MotionModel::Affine).unwrap();
        let est = estimate_motion(&src, &tgt, &[0.0; 6], MotionModel::Affine, 3).unwrap();
        for (p, t) in est.params.iter().zip(&truth) {
            assert!((p - t).abs() <= 1e-2, "{:?}", est.params);
        }
        assert!(est.residual <= est.initial_residual);
    }

    #[test]
    fn accepted_steps_never_increase_residual() {
        let src = textured(80, 64);
        let tgt = warp_frame(&src, &[0.01, 0.03, 1.7, -0.8], MotionModel::Similarity).unwrap();
        let est = estimate_motion(&src, &tgt, &[0.0; 4], MotionModel::Similarity, 3).unwrap();
        for w in est.trace.windows(2) {
            if w[0].0 == w[1].0 {
                assert!(w[1].1 <= w[0].1 + 1e-15, "{:?}", est.trace);
            }
        }
    }

    #[test]
    fn flat_images_keep_initial_parameters() {
        let f = Frame::filled(32, 32, 0.5);
        let init = [0.3, -0.2];
        let est = estimate_motion(&f, &f, &init, MotionModel::Translation, 2).unwrap();
        assert_eq!(est.params, init.to_vec());
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = Frame::filled(20, 20, 0.0);
        let b = Frame::filled(21, 20, 0.0);
        assert!(estimate_motion(&a, &b, &[0.0, 0.0], MotionModel::Translation, 1).is_err());
    }
}
