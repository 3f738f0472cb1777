//! Image-sequence loading and artifact writing.
//!
//! Frames and masks are read from directories of 8-bit PNG or binary PGM
//! files in lexicographic file-name order. Zero-pad frame numbers
//! (`f0002.png`, not `f2.png`), otherwise `f10` sorts before `f2`.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageReader};
use serde::{Deserialize, Serialize};

use crate::decompose::{DecompositionConfig, DecompositionResult, Timings};
use crate::error::{Error, Result};
use crate::eval::{MaskStack, Metrics};
use crate::frames::FrameStack;
use crate::linalg::Matrix;
use crate::motion::MotionParams;

/// Extensions picked up by a frame or mask glob (compared case-insensitively).
pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "pgm", "pnm"];

/// Gray level at or above which a mask pixel is foreground.
pub const MASK_THRESHOLD: u8 = 128;

/// Where a sequence lives and how to read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub frames_dir: PathBuf,
    pub ground_truth_dir: Option<PathBuf>,
    /// Glob relative to each directory. Matches without an image extension are skipped.
    pub frame_glob: String,
    /// Keep only the first frames after sorting.
    pub max_frames: Option<usize>,
    /// Scale gray levels to `[0, 1]`; otherwise keep `0..=255`.
    pub normalize: bool,
}

impl SequenceManifest {
    pub fn new(frames_dir: impl Into<PathBuf>) -> Self {
        Self {
            frames_dir: frames_dir.into(),
            ground_truth_dir: None,
            frame_glob: "*".into(),
            max_frames: None,
            normalize: true,
        }
    }

    pub fn with_ground_truth(mut self, dir: impl Into<PathBuf>) -> Self {
        self.ground_truth_dir = Some(dir.into());
        self
    }

    /// Sorted frame paths.
    pub fn frame_paths(&self) -> Result<Vec<PathBuf>> {
        list_images(&self.frames_dir, &self.frame_glob, self.max_frames)
    }
}

/// Image files in `dir` matching `pattern`, sorted by file name.
pub fn list_images(dir: &Path, pattern: &str, max: Option<usize>) -> Result<Vec<PathBuf>> {
    let full = dir.join(pattern);
    let full = full.to_string_lossy();
    let entries = glob::glob(&full).map_err(|e| Error::Format {
        path: dir.to_path_buf(),
        message: format!("bad glob {pattern:?}: {e}"),
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(e.path().to_path_buf(), e.into()))?;
        if path.is_file() && has_image_extension(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if let Some(max) = max {
        paths.truncate(max);
    }
    if paths.is_empty() {
        return Err(Error::EmptySequence(full.into_owned()));
    }
    Ok(paths)
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Gray levels of an 8-bit image in row-major order. RGB is reduced to
/// `0.299 R + 0.587 G + 0.114 B`; alpha is ignored.
pub fn read_gray(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as f64).collect(),
        DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| p.0[0] as f64).collect(),
        DynamicImage::ImageRgb8(c) => c.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(c) => c.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("unsupported pixel format {:?}; expected 8-bit gray or RGB", other.color()),
            })
        }
    };
    Ok((w, h, values))
}

fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Reads every frame of the manifest into a stack, one column per frame.
pub fn load_frames(manifest: &SequenceManifest) -> Result<FrameStack> {
    let paths = manifest.frame_paths()?;
    let scale = if manifest.normalize { 1.0 / 255.0 } else { 1.0 };
    let (w, h, first) = read_gray(&paths[0])?;
    let mut data = Matrix::zeros(w * h, paths.len());
    for (j, path) in paths.iter().enumerate() {
        let values = if j == 0 {
            first.clone()
        } else {
            let (fw, fh, v) = read_gray(path)?;
            check_dims(path, (w, h), (fw, fh))?;
            v
        };
        for (out, v) in data.col_mut(j).iter_mut().zip(values) {
            *out = v * scale;
        }
    }
    FrameStack::new(w, h, data)
}

/// Reads binary masks (gray ≥ [`MASK_THRESHOLD`] is foreground).
pub fn load_masks(dir: &Path, pattern: &str, max_frames: Option<usize>) -> Result<MaskStack> {
    let paths = list_images(dir, pattern, max_frames)?;
    let mut dims = None;
    let mut bits = Vec::new();
    for path in &paths {
        let (w, h, values) = read_gray(path)?;
        match dims {
            None => dims = Some((w, h)),
            Some(d) => check_dims(path, d, (w, h))?,
        }
        bits.extend(values.iter().map(|&v| v >= MASK_THRESHOLD as f64));
    }
    let (w, h) = dims.expect("at least one mask");
    MaskStack::new(w, h, paths.len(), bits)
}

fn check_dims(path: &Path, expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "frame is {}x{}, earlier frames are {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
        });
    }
    Ok(())
}

/// 8-bit quantisation of a value in `[0, 1]` (clamped, rounded to nearest).
pub fn to_gray8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_png(path: &Path, width: usize, height: usize, pixels: Vec<u8>) -> Result<()> {
    let img = GrayImage::from_raw(width as u32, height as u32, pixels).expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// File name of frame `j` in every output directory.
pub fn frame_file_name(j: usize) -> String {
    format!("{j:04}.png")
}

/// Writes each column of `data` as a `width × height` PNG (values clamped
/// to `[0, 1]`) into `dir`.
pub fn save_gray_frames(data: &Matrix, width: usize, height: usize, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    for j in 0..data.cols() {
        let px = data.col(j).iter().map(|&v| to_gray8(v)).collect();
        write_png(&dir.join(frame_file_name(j)), width, height, px)?;
    }
    Ok(())
}

/// Writes masks as 0/255 PNGs into `dir`.
pub fn save_masks(masks: &MaskStack, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    for j in 0..masks.len() {
        let px = masks.frame(j).iter().map(|&b| if b { 255 } else { 0 }).collect();
        write_png(&dir.join(frame_file_name(j)), masks.width(), masks.height(), px)?;
    }
    Ok(())
}

/// Paths written by [`save_outputs`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputPaths {
    pub background_dir: PathBuf,
    pub foreground_dir: PathBuf,
    pub masks_dir: PathBuf,
    pub tau_csv: PathBuf,
    pub trace_csv: PathBuf,
    pub report_json: PathBuf,
}

impl OutputPaths {
    pub fn under(out_dir: &Path) -> Self {
        Self {
            background_dir: out_dir.join("background"),
            foreground_dir: out_dir.join("foreground"),
            masks_dir: out_dir.join("masks"),
            tau_csv: out_dir.join("tau.csv"),
            trace_csv: out_dir.join("trace.csv"),
            report_json: out_dir.join("report.json"),
        }
    }
}

/// Summary written to `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: DecompositionConfig,
    pub algorithm: crate::decompose::Algorithm,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub iterations_run: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub timings: Timings,
    pub metrics: Option<Metrics>,
    pub foreground_pixels: usize,
    pub warnings: Vec<String>,
    pub outputs: OutputPaths,
}

/// Writes background, foreground and mask PNGs, `tau.csv`, `trace.csv` and
/// `report.json` under `out_dir`.
///
/// Background frames are the columns of `L`, foreground frames `|S|`, both
/// clamped to `[0, 1]` before 8-bit quantisation.
pub fn save_outputs(
    result: &DecompositionResult,
    masks: &MaskStack,
    out_dir: &Path,
    config: &DecompositionConfig,
    metrics: Option<Metrics>,
) -> Result<RunReport> {
    let (w, h) = (result.width, result.height);
    let n = result.sparse.cols();
    if (masks.width(), masks.height(), masks.len()) != (w, h, n) {
        return Err(Error::shape(
            format!("{w}x{h}x{n} masks"),
            format!("{}x{}x{}", masks.width(), masks.height(), masks.len()),
        ));
    }
    let paths = OutputPaths::under(out_dir);
    create_dir(out_dir)?;

    create_dir(&paths.background_dir)?;
    create_dir(&paths.foreground_dir)?;
    for j in 0..n {
        let name = frame_file_name(j);
        let bg = result.low_rank.column(j).iter().map(|&v| to_gray8(v)).collect();
        write_png(&paths.background_dir.join(&name), w, h, bg)?;
        let fg = result.sparse.col(j).iter().map(|&v| to_gray8(v.abs())).collect();
        write_png(&paths.foreground_dir.join(&name), w, h, fg)?;
    }
    save_masks(masks, &paths.masks_dir)?;
    write_tau_csv(&paths.tau_csv, &result.tau)?;
    write_trace_csv(&paths.trace_csv, &result.objective_trace, &result.residual_trace)?;

    let report = RunReport {
        config: config.clone(),
        algorithm: result.algorithm,
        width: w,
        height: h,
        frames: n,
        iterations_run: result.iterations_run,
        converged: result.converged,
        objective_trace: result.objective_trace.clone(),
        residual_trace: result.residual_trace.clone(),
        timings: result.timings.clone(),
        metrics,
        foreground_pixels: masks.count_foreground(),
        warnings: result.warnings.clone(),
        outputs: paths.clone(),
    };
    write_json(&paths.report_json, &report)?;
    Ok(report)
}

/// `frame,<parameter names>`: one row per frame.
pub fn write_tau_csv(path: &Path, tau: &MotionParams) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["frame".to_string()];
    header.extend(tau.model.parameter_names().iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (j, p) in tau.per_frame.iter().enumerate() {
        let mut row = vec![j.to_string()];
        row.extend(p.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `iteration,objective,residual`, iterations counted from 1.
pub fn write_trace_csv(path: &Path, objective: &[f64], residual: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iteration", "objective", "residual"])
        .map_err(|e| csv_err(path, e))?;
    for (i, (o, r)) in objective.iter().zip(residual).enumerate() {
        w.write_record([(i + 1).to_string(), o.to_string(), r.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
