//! Parametric frame warping and per-frame motion estimation.

mod estimate;
mod model;
mod pyramid;
mod warp;

pub use estimate::{estimate_motion, MotionEstimate, DAMPING, DEFAULT_LEVELS, MAX_ITERATIONS_PER_LEVEL};
pub use model::{Affine2, MotionModel, MotionParams, MIN_DETERMINANT};
pub use pyramid::{Pyramid, MIN_LEVEL_SIZE};
pub use warp::warp_frame;

use crate::error::{Error, Result};
use crate::frames::FrameStack;
use crate::linalg::Matrix;

/// Index of the reference frame used by [`prealign_to_middle`] (0-based).
pub fn middle_index(n: usize) -> usize {
    n / 2
}

/// Result of aligning every frame to the middle one.
#[derive(Debug, Clone)]
pub struct Prealignment {
    pub params: MotionParams,
    pub middle: usize,
    /// Per-frame estimates; the middle frame's entry is the trivial identity fit.
    pub estimates: Vec<MotionEstimate>,
}

impl Prealignment {
    /// Frames whose estimate diverged and fell back to the identity.
    pub fn diverged_frames(&self) -> Vec<usize> {
        self.estimates
            .iter()
            .enumerate()
            .filter(|(_, e)| e.diverged)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Aligns each frame to the middle frame, starting every estimate from the
/// identity. Uses [`DEFAULT_LEVELS`] pyramid levels.
pub fn prealign_to_middle(stack: &FrameStack, model: MotionModel) -> Result<Prealignment> {
    prealign_to_middle_with(stack, model, DEFAULT_LEVELS)
}

pub fn prealign_to_middle_with(
    stack: &FrameStack,
    model: MotionModel,
    levels: usize,
) -> Result<Prealignment> {
    let n = stack.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "prealignment needs at least 2 frames, got {n}"
        )));
    }
    let middle = middle_index(n);
    let reference = stack.frame(middle);
    let identity = model.identity_params();
    let mut estimates = Vec::with_capacity(n);
    for j in 0..n {
        let est = if j == middle {
            MotionEstimate {
                params: identity.clone(),
                residual: 0.0,
                initial_residual: 0.0,
                iterations: 0,
                trace: vec![],
                diverged: false,
            }
        } else {
            estimate_motion(&stack.frame(j), &reference, &identity, model, levels)?
        };
        estimates.push(est);
    }
    let params = MotionParams {
        model,
        per_frame: estimates.iter().map(|e| e.params.clone()).collect(),
    };
    Ok(Prealignment {
        params,
        middle,
        estimates,
    })
}

/// Warps every frame of a stack by its own parameters (`A ∘ τ`).
pub fn warp_stack(stack: &FrameStack, tau: &MotionParams) -> Result<Matrix> {
    if tau.len() != stack.len() {
        return Err(Error::shape(
            format!("{} parameter vectors", stack.len()),
            format!("{}", tau.len()),
        ));
    }
    let mut out = stack.matrix().clone();
    for (j, p) in tau.per_frame.iter().enumerate() {
        if p.iter().all(|v| *v == 0.0) {
            tau.model.to_affine(p)?;
            continue;
        }
        let warped = warp_frame(&stack.frame(j), p, tau.model)?;
        out.col_mut(j).copy_from_slice(&warped.pixels);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Frame;

    fn textured(w: usize, h: usize, shift: f64) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64 - shift, y as f64);
            0.5 + 0.2 * (x * 0.23).sin() * (y * 0.19).cos() + 0.1 * ((x - 0.6 * y) * 0.13).sin()
        })
    }

    #[test]
    fn identical_frames_give_identity() {
        let f = textured(40, 32, 0.0);
        let stack = FrameStack::from_frames(&[f.clone(), f.clone(), f]).unwrap();
        let pre = prealign_to_middle(&stack, MotionModel::Affine).unwrap();
        for p in &pre.params.per_frame {
            assert!(p.iter().all(|v| v.abs() < 1e-9), "{p:?}");
        }
    }

    #[test]
    fn one_pixel_steps_align_to_middle() {
        // Content drifts right by one pixel per frame.
        let frames: Vec<_> = (0..3).map(|j| textured(64, 48, j as f64)).collect();
        let stack = FrameStack::from_frames(&frames).unwrap();
        let pre = prealign_to_middle(&stack, MotionModel::Translation).unwrap();
        assert_eq!(pre.middle, 1);
        let tx: Vec<f64> = pre.params.per_frame.iter().map(|p| p[0]).collect();
        assert!((tx[0] - 1.0).abs() <= 0.1, "{tx:?}");
        assert_eq!(pre.params.per_frame[1], vec![0.0, 0.0]);
        assert!((tx[2] + 1.0).abs() <= 0.1, "{tx:?}");
    }

    #[test]
    fn two_frames_use_the_second_as_reference() {
        assert_eq!(middle_index(2), 1);
        let frames: Vec<_> = (0..2).map(|j| textured(32, 32, j as f64)).collect();
        let stack = FrameStack::from_frames(&frames).unwrap();
        let pre = prealign_to_middle(&stack, MotionModel::Translation).unwrap();
        assert_eq!(pre.params.per_frame[1], vec![0.0, 0.0]);
        let single = FrameStack::from_frames(&frames[..1]).unwrap();
        assert!(prealign_to_middle(&single, MotionModel::Translation).is_err());
    }
}
