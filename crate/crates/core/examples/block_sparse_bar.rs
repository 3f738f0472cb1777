//! A bright bar sweeps across a noisy scene. The block driver shrinks whole
//! image columns, so noise that lands outside the bar is rejected together.
//!
//!     cargo run --example block_sparse_bar

use lrsd::synth::{moving_bar, BarSpec};
use lrsd::{compute_metrics, decompose_block, decompose_tau, mask_from_sparse, DecompositionConfig, MaskMethod, Matrix};

fn main() -> lrsd::Result<()> {
    let seq = moving_bar(&BarSpec::default())?;
    let (w, h) = (seq.frames.width(), seq.frames.height());
    let f1 = |sparse: &Matrix| -> lrsd::Result<f64> {
        let mask = mask_from_sparse(sparse, w, h, MaskMethod::Support)?;
        Ok(compute_metrics(&mask, &seq.truth)?.f1)
    };

    println!("{:>8} {:>8} {:>8}", "lambda", "tau", "block");
    for lambda in [0.05, 0.1, 0.25, 0.5, 1.0, 2.0] {
        let tau = decompose_tau(&seq.frames, &DecompositionConfig::tau(1, lambda))?;
        let block = decompose_block(&seq.frames, &DecompositionConfig::block(1, lambda))?;
        println!("{lambda:>8} {:>8.4} {:>8.4}", f1(&tau.sparse)?, f1(&block.sparse)?);
    }
    Ok(())
}
