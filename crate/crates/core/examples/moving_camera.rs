//! A camera pans across a textured scene. Without motion compensation the
//! whole scene ends up in the foreground; with translation estimates it
//! separates cleanly.
//!
//!     cargo run --example moving_camera

use lrsd::motion::{estimate_motion, warp_frame};
use lrsd::synth::{scene_texture, shifting_scene, ShiftSpec};
use lrsd::{compute_metrics, decompose_tau, mask_from_sparse, DecompositionConfig, Frame, MaskMethod, MotionModel};

fn main() -> lrsd::Result<()> {
    // Pairwise registration first.
    let src = Frame::from_fn(96, 72, |x, y| scene_texture(x as f64, y as f64));
    let tgt = warp_frame(&src, &[2.5, -1.25], MotionModel::Translation)?;
    let est = estimate_motion(&src, &tgt, &[0.0, 0.0], MotionModel::Translation, 3)?;
    println!("translation estimate {:.4?} after {} steps", est.params, est.iterations);

    let spec = ShiftSpec::default();
    let seq = shifting_scene(&spec)?;
    for motion in [MotionModel::Identity, MotionModel::Translation] {
        let res = decompose_tau(&seq.frames, &DecompositionConfig::tau(1, 0.1).with_motion(motion))?;
        let mask = mask_from_sparse(&res.sparse, spec.width, spec.height, MaskMethod::Support)?;
        let m = compute_metrics(&seq.crop(&mask), &seq.scored_truth())?;
        println!("{motion:?}: f1 {:.4}", m.f1);
        if motion == MotionModel::Translation {
            let first = &res.tau.per_frame[0];
            println!("  frame 0 parameters {first:.3?}");
        }
    }
    Ok(())
}
