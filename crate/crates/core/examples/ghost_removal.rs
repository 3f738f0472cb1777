//! An object parks for a while before driving off. Starting from a zero
//! foreground, the background keeps a ghost of it; seeding S from
//! high-leverage image columns removes most of that.
//!
//!     cargo run --example ghost_removal

use lrsd::synth::{slow_object, SlowObjectSpec};
use lrsd::{compute_metrics, decompose_tau, mask_from_sparse, DecompositionConfig, MaskMethod};

fn main() -> lrsd::Result<()> {
    let seq = slow_object(&SlowObjectSpec::default())?;
    let (w, h) = (seq.frames.width(), seq.frames.height());
    for ghost in [false, true] {
        let cfg = DecompositionConfig::tau(1, 0.1).with_ghost_removal(ghost);
        let res = decompose_tau(&seq.frames, &cfg)?;
        let mask = mask_from_sparse(&res.sparse, w, h, MaskMethod::Support)?;
        let m = compute_metrics(&mask, &seq.truth)?;
        println!(
            "ghost removal {ghost:<5}  f1 {:.4}  init {:.1} ms  total {:.1} ms",
            m.f1, res.timings.init_ms, res.timings.total_ms
        );
        for w in &res.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
