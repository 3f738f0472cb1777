//! The SVD-free driver: a constant background from row means and a
//! foreground with a fixed number of nonzeros. Compares its per-iteration
//! cost with the ℓ1 driver on the same data.
//!
//!     cargo run --release --example svd_free_reconstruction

use lrsd::synth::{static_spikes, SpikeSpec};
use lrsd::{decompose_svdfree, decompose_tau, mask_from_sparse, DecompositionConfig, MaskMethod};

fn main() -> lrsd::Result<()> {
    let spec = SpikeSpec { width: 320, height: 240, frames: 60, noise: 0.02, ..SpikeSpec::default() };
    let seq = static_spikes(&spec)?;
    let kappa = seq.truth.count_foreground();

    // An unreachable tolerance keeps both drivers at the same iteration count.
    let cfg = DecompositionConfig { tol: 1e-30, ..DecompositionConfig::svdfree(kappa).with_max_iter(5) };
    let free = decompose_svdfree(&seq.frames, &cfg)?;
    let mask = mask_from_sparse(&free.sparse, spec.width, spec.height, MaskMethod::Support)?;
    println!("kappa {kappa}: support recovered exactly: {}", mask == seq.truth);

    let cfg = DecompositionConfig { tol: 1e-30, ..DecompositionConfig::tau(1, 0.1).with_max_iter(5) };
    let tau = decompose_tau(&seq.frames, &cfg)?;
    println!(
        "per iteration: svdfree {:.1} ms, tau {:.1} ms",
        free.timings.mean_iteration_ms(),
        tau.timings.mean_iteration_ms()
    );
    Ok(())
}
