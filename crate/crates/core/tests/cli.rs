use std::path::{Path, PathBuf};

use lrsd::cli::run_cli;
use lrsd::io::load_masks;

fn cli(args: &[&str]) -> i32 {
    run_cli(std::iter::once("lrsd").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A short shifting-camera sequence under `root/data`.
fn shift_data(root: &Path, frames: &str) -> PathBuf {
    let data = root.join("data");
    assert_eq!(cli(&["synth", "--kind", "shift", "--frames", frames, "--out", p(&data)]), 0);
    data
}

#[test]
fn svdfree_with_affine_motion_keeps_fifteen_percent() {
    let dir = tempfile::tempdir().unwrap();
    let data = shift_data(dir.path(), "8");
    let out = dir.path().join("out");
    let code = cli(&[
        "decompose", "--algorithm", "svdfree", "--cardinality-fraction", "0.15", "--motion", "affine",
        "--in", p(&data.join("frames")), "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    let masks = load_masks(&out.join("masks"), "*", None).unwrap();
    let total = masks.width() * masks.height() * masks.len();
    assert_eq!(masks.count_foreground(), (0.15 * total as f64).floor() as usize);
    let tau = std::fs::read_to_string(out.join("tau.csv")).unwrap();
    assert_eq!(tau.lines().next().unwrap(), "frame,a11m1,a12,a21,a22m1,tx,ty");
    assert_eq!(tau.lines().count(), 9);
}

#[test]
fn tau_with_default_experiment_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = shift_data(dir.path(), "6");
    let out = dir.path().join("out");
    let code = cli(&[
        "decompose", "--algorithm", "tau", "--rank", "1", "--lambda", "0.1", "--max-iter", "10", "--motion", "none",
        "--in", p(&data.join("frames")), "--gt", p(&data.join("truth")), "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    for sub in ["background", "foreground", "masks"] {
        assert_eq!(std::fs::read_dir(out.join(sub)).unwrap().count(), 6, "{sub}");
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iteration,objective,residual");
    assert!((2..=11).contains(&trace.lines().count()));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["metrics"]["f1"].is_number());
    assert!(report["timings"]["total_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn evaluate_identical_directories() {
    let dir = tempfile::tempdir().unwrap();
    let data = shift_data(dir.path(), "4");
    let truth = data.join("truth");
    assert_eq!(cli(&["evaluate", "--pred", p(&truth), "--gt", p(&truth)]), 0);
    assert_eq!(cli(&["evaluate", "--pred", p(&truth), "--gt", p(&truth), "--json"]), 0);
}

#[test]
fn roc_writes_one_row_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let data = shift_data(dir.path(), "4");
    let csv = dir.path().join("roc.csv");
    let code = cli(&[
        "roc", "--in", p(&data.join("frames")), "--gt", p(&data.join("truth")), "--lambda-grid", "0.05,0.1,0.2",
        "--max-iter", "3", "--out", p(&csv),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,tp,fp,fn,tn,precision,recall,f1,fpr,error");
    assert_eq!(lines.count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let out = dir.path().join("out");
    assert_eq!(cli(&["decompose", "--bogus-flag"]), 1);
    assert_eq!(cli(&["frobnicate"]), 1);
    assert_eq!(cli(&["roc", "--in", p(&missing), "--gt", p(&missing), "--lambda-grid", "0.2,0.1"]), 1);
    assert_eq!(cli(&["decompose", "--algorithm", "svdfree", "--in", p(&missing), "--out", p(&out)]), 1);
    assert_eq!(cli(&["decompose", "--in", p(&missing), "--out", p(&out)]), 2);
    assert_eq!(cli(&["--help"]), 0);
}
