//! Sweeps λ and prints one ROC point per value.
//!
//!     cargo run --example roc_sweep

use lrsd::synth::{static_spikes, SpikeSpec};
use lrsd::{roc_sweep, DecompositionConfig};

fn main() -> lrsd::Result<()> {
    let seq = static_spikes(&SpikeSpec { noise: 0.05, ..SpikeSpec::default() })?;
    let grid = [0.02, 0.05, 0.1, 0.15, 0.2, 0.3];
    let points = roc_sweep(&seq.frames, &seq.truth, &DecompositionConfig::tau(1, 0.1), &grid)?;
    println!("{:>7} {:>8} {:>8} {:>8}", "lambda", "fpr", "recall", "f1");
    for p in &points {
        match (&p.metrics, &p.error) {
            (Some(m), _) => println!("{:>7} {:>8.5} {:>8.4} {:>8.4}", p.lambda, m.fpr, m.recall, m.f1),
            (None, Some(e)) => println!("{:>7} failed: {e}", p.lambda),
            (None, None) => {}
        }
    }
    Ok(())
}
