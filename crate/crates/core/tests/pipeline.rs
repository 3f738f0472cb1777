//! Library-level round trips: generate, write frames, load them back,
//! decompose, save outputs and rescore from disk.

use lrsd::io::{load_frames, load_masks, save_gray_frames, save_outputs, SequenceManifest};
use lrsd::synth::{moving_bar, static_spikes, BarSpec, SpikeSpec};
use lrsd::{compute_metrics, decompose, mask_from_sparse, DecompositionConfig, MaskMethod};

#[test]
fn disk_round_trip_preserves_scores() {
    let seq = moving_bar(&BarSpec { frames: 12, ..BarSpec::default() }).unwrap();
    let (w, h) = (seq.frames.width(), seq.frames.height());
    let dir = tempfile::tempdir().unwrap();
    let frames_dir = dir.path().join("frames");
    save_gray_frames(seq.frames.matrix(), w, h, &frames_dir).unwrap();
    let loaded = load_frames(&SequenceManifest::new(&frames_dir)).unwrap();
    let worst = loaded
        .matrix()
        .as_slice()
        .iter()
        .zip(seq.frames.matrix().as_slice())
        .map(|(a, b)| (a - b.clamp(0.0, 1.0)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.5 / 255.0 + 1e-12, "{worst}");

    for cfg in [
        DecompositionConfig::tau(1, 0.15),
        DecompositionConfig::block(1, 1.0),
        DecompositionConfig::svdfree(seq.truth.count_foreground()),
    ] {
        let res = decompose(&loaded, &cfg).unwrap();
        let masks = mask_from_sparse(&res.sparse, w, h, MaskMethod::Support).unwrap();
        let metrics = compute_metrics(&masks, &seq.truth).unwrap();
        let out = dir.path().join(format!("{:?}", res.algorithm));
        let report = save_outputs(&res, &masks, &out, &cfg, Some(metrics)).unwrap();
        let reread = load_masks(&report.outputs.masks_dir, "*", None).unwrap();
        assert_eq!(reread, masks);
        assert_eq!(compute_metrics(&reread, &seq.truth).unwrap(), metrics);
    }
}

#[test]
fn constant_background_frames_are_identical_files() {
    let seq = static_spikes(&SpikeSpec { width: 40, height: 30, frames: 6, ..SpikeSpec::default() }).unwrap();
    let cfg = DecompositionConfig::svdfree(seq.truth.count_foreground());
    let res = decompose(&seq.frames, &cfg).unwrap();
    let masks = mask_from_sparse(&res.sparse, 40, 30, MaskMethod::Support).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = save_outputs(&res, &masks, dir.path(), &cfg, None).unwrap();
    let bytes: Vec<Vec<u8>> = (0..6)
        .map(|j| std::fs::read(report.outputs.background_dir.join(format!("{j:04}.png"))).unwrap())
        .collect();
    assert!(bytes.windows(2).all(|w| w[0] == w[1]));
}
