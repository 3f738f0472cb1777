//! Writes masks to disk, reads them back and scores them, the same round
//! trip the `decompose` and `evaluate` subcommands perform. Also shows the
//! three-sigma rule as an alternative to plain support.
//!
//!     cargo run --example evaluate_masks

use lrsd::io::{load_masks, save_masks};
use lrsd::synth::{static_spikes, SpikeSpec};
use lrsd::{compute_metrics, decompose_tau, mask_from_sparse, DecompositionConfig, MaskMethod};

fn main() -> lrsd::Result<()> {
    let seq = static_spikes(&SpikeSpec { noise: 0.02, ..SpikeSpec::default() })?;
    let a = &seq.frames;
    let res = decompose_tau(a, &DecompositionConfig::tau(1, 0.15))?;

    let dir = std::env::temp_dir().join("lrsd-evaluate-masks");
    let support = mask_from_sparse(&res.sparse, a.width(), a.height(), MaskMethod::Support)?;
    save_masks(&support, &dir.join("pred"))?;
    save_masks(&seq.truth, &dir.join("truth"))?;

    let pred = load_masks(&dir.join("pred"), "*", None)?;
    let truth = load_masks(&dir.join("truth"), "*", None)?;
    let m = compute_metrics(&pred, &truth)?;
    println!("support:     tp={} fp={} fn={} f1={:.4}", m.tp, m.fp, m.fn_, m.f1);

    let background = res.low_rank.to_matrix();
    let method = MaskMethod::ThreeSigma { observed: a.matrix(), background: &background };
    let three_sigma = mask_from_sparse(&res.sparse, a.width(), a.height(), method)?;
    let m = compute_metrics(&three_sigma, &seq.truth)?;
    println!("three-sigma: tp={} fp={} fn={} f1={:.4}", m.tp, m.fp, m.fn_, m.f1);

    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
