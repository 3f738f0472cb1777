//! The `lrsd` command line.
//!
//! Every flag can also be set through an environment variable named after it
//! with an `LRSD_` prefix (`--max-iter` ↔ `LRSD_MAX_ITER`); an explicit flag
//! wins. Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::decompose::{decompose, DecompositionConfig};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, mask_from_sparse, roc_sweep, MaskMethod, Metrics};
use crate::io::{load_frames, load_masks, save_gray_frames, save_masks, save_outputs, write_json, SequenceManifest};
use crate::linalg::SparsityRule;
use crate::motion::MotionModel;
use crate::synth::{self, SyntheticSequence};

const AFTER_HELP: &str = "\
Outputs of `decompose --out DIR`:
  background/NNNN.png  columns of L, clamped to [0,1], 8-bit
  foreground/NNNN.png  |S|, clamped to [0,1], 8-bit
  masks/NNNN.png       foreground mask, 0 or 255
  tau.csv              frame,<motion parameters>  (affine: a11m1,a12,a21,a22m1,tx,ty)
  trace.csv            iteration,objective,residual
  report.json          config, traces, per-stage timings (ms), metrics

`roc` writes lambda,tp,fp,fn,tn,precision,recall,f1,fpr,error.
Frames are read in lexicographic file-name order; zero-pad frame numbers.";

#[derive(Debug, Parser)]
#[command(name = "lrsd", version, about = "Low-rank plus sparse background/foreground separation", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose a frame directory and write background, foreground and masks.
    Decompose(DecomposeCmd),
    /// Score a directory of predicted masks against ground truth.
    Evaluate(EvaluateCmd),
    /// Sweep λ and score each run against ground truth.
    Roc(RocCmd),
    /// Write a synthetic sequence and its ground truth.
    Synth(SynthCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Tau,
    Block,
    Svdfree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MotionArg {
    None,
    Translation,
    Similarity,
    Affine,
}

impl From<MotionArg> for MotionModel {
    fn from(m: MotionArg) -> Self {
        match m {
            MotionArg::None => MotionModel::Identity,
            MotionArg::Translation => MotionModel::Translation,
            MotionArg::Similarity => MotionModel::Similarity,
            MotionArg::Affine => MotionModel::Affine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MaskArg {
    /// Foreground wherever S is nonzero.
    Support,
    /// Nonzero S outside mean ± 3σ of the background residual.
    ThreeSigma,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Directory of input frames (PNG or binary PGM).
    #[arg(long = "in", env = "LRSD_IN")]
    input: PathBuf,
    /// Glob selecting frames inside the input directory.
    #[arg(long, env = "LRSD_GLOB", default_value = "*")]
    glob: String,
    /// Use only the first N frames.
    #[arg(long, env = "LRSD_MAX_FRAMES")]
    max_frames: Option<usize>,
}

impl InputArgs {
    fn manifest(&self, gt: Option<&Path>) -> SequenceManifest {
        SequenceManifest {
            frames_dir: self.input.clone(),
            ground_truth_dir: gt.map(Path::to_path_buf),
            frame_glob: self.glob.clone(),
            max_frames: self.max_frames,
            normalize: true,
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, env = "LRSD_ALGORITHM", default_value = "tau")]
    algorithm: AlgorithmArg,
    /// Background rank k (tau and block).
    #[arg(long, env = "LRSD_RANK", default_value_t = 1)]
    rank: usize,
    /// Sparsity weight λ (tau and block).
    #[arg(long, env = "LRSD_LAMBDA", default_value_t = 0.1)]
    lambda: f64,
    /// Foreground cardinality as a fraction of all pixels (svdfree); κ = ⌊fraction·m·n⌋.
    #[arg(long, env = "LRSD_CARDINALITY_FRACTION")]
    cardinality_fraction: Option<f64>,
    /// Relative residual at which iteration stops.
    #[arg(long, env = "LRSD_TOL", default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, env = "LRSD_MAX_ITER", default_value_t = 10)]
    max_iter: usize,
    #[arg(long, value_enum, env = "LRSD_MOTION", default_value = "none")]
    motion: MotionArg,
    #[arg(long, env = "LRSD_PYRAMID_LEVELS", default_value_t = 3)]
    pyramid_levels: usize,
    /// Initialise S from high-leverage image columns.
    #[arg(long, env = "LRSD_GHOST_REMOVAL")]
    ghost_removal: bool,
    /// Singular directions behind the leverage scores (default min(5, rank)).
    #[arg(long, env = "LRSD_LEVERAGE_P")]
    leverage_p: Option<usize>,
    #[arg(long, env = "LRSD_SEED", default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    /// Flag combinations that are wrong whatever the input; checked before any IO.
    fn check(&self) -> std::result::Result<(), String> {
        if self.algorithm == AlgorithmArg::Svdfree {
            let f = self
                .cardinality_fraction
                .ok_or("--algorithm svdfree needs --cardinality-fraction")?;
            if !(0.0..=1.0).contains(&f) {
                return Err(format!("--cardinality-fraction {f} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    fn config(&self, m: usize, n: usize) -> std::result::Result<DecompositionConfig, String> {
        self.check()?;
        let sparsity = match self.algorithm {
            AlgorithmArg::Tau => SparsityRule::SoftEntry { lambda: self.lambda },
            AlgorithmArg::Block => SparsityRule::ColumnBlock { lambda: self.lambda },
            AlgorithmArg::Svdfree => SparsityRule::Cardinality {
                kappa: (self.cardinality_fraction.unwrap_or(0.0) * (m * n) as f64).floor() as usize,
            },
        };
        Ok(DecompositionConfig {
            rank: if self.algorithm == AlgorithmArg::Svdfree { 1 } else { self.rank },
            sparsity,
            tol: self.tol,
            max_iter: self.max_iter,
            motion: self.motion.into(),
            pyramid_levels: self.pyramid_levels,
            ghost_removal: self.ghost_removal,
            leverage_p: self.leverage_p,
            seed: self.seed,
            ..DecompositionConfig::default()
        })
    }
}

#[derive(Debug, Args)]
struct DecomposeCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Ground-truth mask directory; adds metrics to report.json.
    #[arg(long, env = "LRSD_GT")]
    gt: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "LRSD_OUT")]
    out: PathBuf,
    #[arg(long, value_enum, env = "LRSD_MASK", default_value = "support")]
    mask: MaskArg,
}

#[derive(Debug, Args)]
struct EvaluateCmd {
    /// Directory of predicted masks.
    #[arg(long, env = "LRSD_PRED")]
    pred: PathBuf,
    /// Directory of ground-truth masks.
    #[arg(long, env = "LRSD_GT")]
    gt: PathBuf,
    #[arg(long, env = "LRSD_GLOB", default_value = "*")]
    glob: String,
    /// Print JSON instead of key=value text.
    #[arg(long, env = "LRSD_JSON")]
    json: bool,
}

#[derive(Debug, Args)]
struct RocCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, env = "LRSD_GT")]
    gt: PathBuf,
    /// Comma-separated, ascending λ values, e.g. "0.05,0.1,0.2".
    #[arg(long, env = "LRSD_LAMBDA_GRID")]
    lambda_grid: String,
    /// CSV destination; stdout when absent.
    #[arg(long, env = "LRSD_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    /// Rank-1 background with sparse bright spikes.
    Spikes,
    /// A vertical bar sweeping across a noisy background.
    Bar,
    /// An object that parks, then drifts away (ghosting test).
    SlowObject,
    /// A globally translating scene with a moving object.
    Shift,
}

#[derive(Debug, Args)]
struct SynthCmd {
    #[arg(long, value_enum, env = "LRSD_KIND", default_value = "spikes")]
    kind: SynthKind,
    /// Output directory; receives frames/, truth/ and synth.json.
    #[arg(long, env = "LRSD_OUT")]
    out: PathBuf,
    /// Overrides the generator's default seed.
    #[arg(long, env = "LRSD_SEED")]
    seed: Option<u64>,
    /// Overrides the generator's default frame count.
    #[arg(long, env = "LRSD_FRAMES")]
    frames: Option<usize>,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Decompose(c) => run_decompose(&c),
        Command::Evaluate(c) => run_evaluate(&c),
        Command::Roc(c) => run_roc(&c),
        Command::Synth(c) => run_synth(&c),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn run_decompose(c: &DecomposeCmd) -> Outcome {
    c.model.check().map_err(Failure::Usage)?;
    let a = load_frames(&c.input.manifest(c.gt.as_deref()))?;
    let (m, n) = a.matrix().shape();
    let cfg = c.model.config(m, n).map_err(Failure::Usage)?;
    let truth = c
        .gt
        .as_deref()
        .map(|gt| load_masks(gt, &c.input.glob, c.input.max_frames))
        .transpose()?;
    let res = decompose(&a, &cfg)?;
    let masks = match c.mask {
        MaskArg::Support => mask_from_sparse(&res.sparse, a.width(), a.height(), MaskMethod::Support)?,
        MaskArg::ThreeSigma => {
            let observed = res.warped(&a)?;
            let background = res.low_rank.to_matrix();
            mask_from_sparse(
                &res.sparse,
                a.width(),
                a.height(),
                MaskMethod::ThreeSigma {
                    observed: &observed,
                    background: &background,
                },
            )?
        }
    };
    let metrics = truth.as_ref().map(|t| compute_metrics(&masks, t)).transpose()?;
    let report = save_outputs(&res, &masks, &c.out, &cfg, metrics)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} frames {}x{}: {} iterations, {:.1} ms, {} foreground pixels",
        report.frames,
        report.width,
        report.height,
        report.iterations_run,
        report.timings.total_ms,
        report.foreground_pixels
    );
    if let Some(m) = &metrics {
        println!("{}", metrics_line(m));
    }
    Ok(())
}

fn metrics_line(m: &Metrics) -> String {
    format!(
        "tp={} fp={} fn={} tn={} precision={:.6} recall={:.6} f1={:.6} fpr={:.6}",
        m.tp, m.fp, m.fn_, m.tn, m.precision, m.recall, m.f1, m.fpr
    )
}

fn run_evaluate(c: &EvaluateCmd) -> Outcome {
    let pred = load_masks(&c.pred, &c.glob, None)?;
    let truth = load_masks(&c.gt, &c.glob, None)?;
    let m = compute_metrics(&pred, &truth)?;
    if c.json {
        println!("{}", serde_json::to_string_pretty(&m).expect("metrics serialise"));
    } else {
        println!("{}", metrics_line(&m));
    }
    Ok(())
}

fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad λ value {t:?} in --lambda-grid")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .and_then(|g| {
            if g.is_empty() || g.iter().any(|l| !l.is_finite() || *l < 0.0) || g.windows(2).any(|w| w[0] > w[1]) {
                Err(format!("--lambda-grid {s:?} must be non-empty, non-negative and ascending"))
            } else {
                Ok(g)
            }
        })
}

fn run_roc(c: &RocCmd) -> Outcome {
    let grid = parse_grid(&c.lambda_grid).map_err(Failure::Usage)?;
    c.model.check().map_err(Failure::Usage)?;
    if c.model.algorithm == AlgorithmArg::Svdfree {
        return Err(Failure::Usage("roc sweeps λ; use --algorithm tau or block".into()));
    }
    let a = load_frames(&c.input.manifest(Some(&c.gt)))?;
    let truth = load_masks(&c.gt, &c.input.glob, c.input.max_frames)?;
    let (m, n) = a.matrix().shape();
    let cfg = c.model.config(m, n).map_err(Failure::Usage)?;
    let points = roc_sweep(&a, &truth, &cfg, &grid)?;

    let sink: Box<dyn Write> = match &c.out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Error::io(p, e))?),
        None => Box::new(std::io::stdout()),
    };
    let label = c.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let csv_err = |source| Error::Csv {
        path: label.clone(),
        source,
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["lambda", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "fpr", "error"])
        .map_err(csv_err)?;
    for p in &points {
        let mut row = vec![p.lambda.to_string()];
        match &p.metrics {
            Some(m) => row.extend(
                [m.tp, m.fp, m.fn_, m.tn].map(|v| v.to_string()).into_iter().chain(
                    [m.precision, m.recall, m.f1, m.fpr].map(|v| v.to_string()),
                ),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 8)),
        }
        row.push(p.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&label, e))?;
    Ok(())
}

fn run_synth(c: &SynthCmd) -> Outcome {
    let seq = generate(c)?;
    let (w, h) = (seq.frames.width(), seq.frames.height());
    save_gray_frames(seq.frames.matrix(), w, h, &c.out.join("frames"))?;
    save_masks(&seq.truth, &c.out.join("truth"))?;
    let info = serde_json::json!({
        "kind": format!("{:?}", c.kind).to_lowercase(),
        "width": w,
        "height": h,
        "frames": seq.frames.len(),
        "foreground_pixels": seq.truth.count_foreground(),
        "scored_region": seq.region,
    });
    write_json(&c.out.join("synth.json"), &info)?;
    println!("wrote {} frames {}x{} to {}", seq.frames.len(), w, h, c.out.display());
    Ok(())
}

fn generate(c: &SynthCmd) -> Result<SyntheticSequence> {
    macro_rules! with_overrides {
        ($spec:expr) => {{
            let mut spec = $spec;
            if let Some(s) = c.seed {
                spec.seed = s;
            }
            if let Some(n) = c.frames {
                spec.frames = n;
            }
            spec
        }};
    }
    match c.kind {
        SynthKind::Spikes => synth::static_spikes(&with_overrides!(synth::SpikeSpec::default())),
        SynthKind::Bar => synth::moving_bar(&with_overrides!(synth::BarSpec::default())),
        SynthKind::SlowObject => synth::slow_object(&with_overrides!(synth::SlowObjectSpec::default())),
        SynthKind::Shift => synth::shifting_scene(&with_overrides!(synth::ShiftSpec::default())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1, 0.2,0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(parse_grid("0.1,x").is_err());
        assert!(parse_grid("0.2,0.1").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run_cli(["lrsd", "decompose", "--bogus"]), 1);
        assert_eq!(run_cli(["lrsd"]), 1);
        assert_eq!(run_cli(["lrsd", "--help"]), 0);
    }

    #[test]
    fn cardinality_fraction_rounds_down() {
        let cli = Cli::try_parse_from([
            "lrsd", "decompose", "--in", "x", "--out", "y", "--algorithm", "svdfree",
            "--cardinality-fraction", "0.15",
        ])
        .unwrap();
        let Command::Decompose(c) = cli.command else { panic!() };
        let cfg = c.model.config(101, 7).unwrap();
        assert_eq!(cfg.sparsity, SparsityRule::Cardinality { kappa: 106 });
        assert_eq!(cfg.tol, 1e-7);
        assert_eq!(cfg.max_iter, 10);
        assert_eq!(cfg.pyramid_levels, 3);
    }
}
