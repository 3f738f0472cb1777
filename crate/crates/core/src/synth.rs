//! Synthetic sequences with known foreground, for tests, examples and the
//! `synth` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::MaskStack;
use crate::frames::FrameStack;
use crate::linalg::Matrix;

/// A generated sequence and its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: FrameStack,
    pub truth: MaskStack,
    /// The clean background, one column per frame, in the coordinates the
    /// truth is expressed in.
    pub background: Matrix,
    /// Pixels ignored by evaluation: `(x0, y0, width, height)` of the region
    /// that should be scored. `None` means the whole frame.
    pub region: Option<(usize, usize, usize, usize)>,
}

impl SyntheticSequence {
    /// The truth restricted to [`SyntheticSequence::region`].
    pub fn scored_truth(&self) -> MaskStack {
        self.crop(&self.truth)
    }

    /// Restricts any mask stack of the same size to the scored region.
    pub fn crop(&self, mask: &MaskStack) -> MaskStack {
        match self.region {
            Some((x0, y0, w, h)) => mask.crop(x0, y0, w, h).expect("region lies inside the frame"),
            None => mask.clone(),
        }
    }
}

/// Smooth texture with values in roughly `[0.2, 0.8]`, defined on the whole plane.
pub fn texture(x: f64, y: f64) -> f64 {
    0.5 + 0.15 * (0.21 * x + 0.4).sin() * (0.17 * y).cos()
        + 0.1 * ((x - 0.6 * y) * 0.13).sin()
        + 0.05 * ((0.7 * x + y) * 0.29).cos()
}

/// Higher-contrast texture for the moving-camera scene, so that background
/// gradients dominate the alignment cost.
pub fn scene_texture(x: f64, y: f64) -> f64 {
    0.5 + 0.2 * (0.3 * x + 0.4).sin() * (0.25 * y).cos()
        + 0.1 * ((x - 0.6 * y) * 0.2).sin()
        + 0.08 * ((0.7 * x + y) * 0.37).cos()
}

fn check_size(width: usize, height: usize, frames: usize) -> Result<()> {
    if width == 0 || height == 0 || frames == 0 {
        return Err(Error::InvalidParameter(format!(
            "synthetic sequence needs positive dimensions, got {width}x{height}x{frames}"
        )));
    }
    Ok(())
}

fn noise(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("noise sigma {sigma}: {e}")))
}

/// Static background plus random sparse spikes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Fraction of all pixels carrying a spike.
    pub fraction: f64,
    pub magnitude: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SpikeSpec {
    fn default() -> Self {
        Self {
            width: 160,
            height: 120,
            frames: 50,
            fraction: 0.05,
            magnitude: 0.5,
            noise: 0.0,
            seed: 1,
        }
    }
}

/// `A = l·𝟙ᵀ + S* + noise`. Exactly `⌊fraction·m·n⌋` spikes of size
/// `magnitude`, signed so the pixel stays inside `[0, 1]` before noise.
pub fn static_spikes(spec: &SpikeSpec) -> Result<SyntheticSequence> {
    let (w, h, n) = (spec.width, spec.height, spec.frames);
    check_size(w, h, n)?;
    if !(0.0..=1.0).contains(&spec.fraction) {
        return Err(Error::InvalidParameter(format!("spike fraction {}", spec.fraction)));
    }
    let m = w * h;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauss = noise(spec.noise)?;
    let l: Vec<f64> = (0..m).map(|i| texture((i % w) as f64, (i / w) as f64)).collect();
    let count = (spec.fraction * (m * n) as f64).floor() as usize;
    let chosen = rand::seq::index::sample(&mut rng, m * n, count);
    let mut truth = vec![false; m * n];
    for k in chosen.iter() {
        truth[k] = true;
    }
    let mut data = Matrix::from_fn(m, n, |i, _| l[i]);
    for (k, v) in data.as_mut_slice().iter_mut().enumerate() {
        if truth[k] {
            *v += if *v < 0.5 { spec.magnitude } else { -spec.magnitude };
        }
        if spec.noise > 0.0 {
            *v += gauss.sample(&mut rng);
        }
    }
    Ok(SyntheticSequence {
        frames: FrameStack::new(w, h, data)?,
        truth: MaskStack::new(w, h, n, truth)?,
        background: Matrix::from_fn(m, n, |i, _| l[i]),
        region: None,
    })
}

/// A full-height bright bar sweeping horizontally across a static scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub bar_width: usize,
    /// Added to the background inside the bar.
    pub amplitude: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for BarSpec {
    fn default() -> Self {
        Self {
            width: 80,
            height: 60,
            frames: 40,
            bar_width: 4,
            amplitude: 0.3,
            noise: 0.05,
            seed: 2,
        }
    }
}

pub fn moving_bar(spec: &BarSpec) -> Result<SyntheticSequence> {
    let (w, h, n) = (spec.width, spec.height, spec.frames);
    check_size(w, h, n)?;
    if spec.bar_width == 0 || spec.bar_width > w {
        return Err(Error::InvalidParameter(format!("bar width {} for width {w}", spec.bar_width)));
    }
    let travel = w - spec.bar_width;
    let left = |j: usize| if n > 1 { j * travel / (n - 1) } else { 0 };
    let inside = |x: usize, j: usize| (left(j)..left(j) + spec.bar_width).contains(&x);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauss = noise(spec.noise)?;
    let bg = Matrix::from_fn(w * h, n, |i, _| texture((i % w) as f64, (i / w) as f64));
    let mut data = bg.clone();
    for j in 0..n {
        for (i, v) in data.col_mut(j).iter_mut().enumerate() {
            if inside(i % w, j) {
                *v += spec.amplitude;
            }
            if spec.noise > 0.0 {
                *v += gauss.sample(&mut rng);
            }
        }
    }
    Ok(SyntheticSequence {
        frames: FrameStack::new(w, h, data)?,
        truth: MaskStack::from_fn(w, h, n, |p, j| inside(p % w, j)),
        background: bg,
        region: None,
    })
}

/// An object that sits still for the first `park_frames` frames and then
/// drifts away at `velocity` pixels per frame. While parked it is part of the
/// low-rank structure, so a naive background estimate keeps a ghost of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowObjectSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub object_size: usize,
    /// Top-left corner while parked.
    pub start: (usize, usize),
    pub park_frames: usize,
    pub velocity: (f64, f64),
    /// Object intensity (replaces the background).
    pub intensity: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SlowObjectSpec {
    fn default() -> Self {
        Self {
            width: 80,
            height: 60,
            frames: 100,
            object_size: 12,
            start: (4, 4),
            park_frames: 45,
            velocity: (1.0, 0.6),
            intensity: 0.95,
            noise: 0.02,
            seed: 3,
        }
    }
}

pub fn slow_object(spec: &SlowObjectSpec) -> Result<SyntheticSequence> {
    let (w, h, n) = (spec.width, spec.height, spec.frames);
    check_size(w, h, n)?;
    let size = spec.object_size;
    let corner = |j: usize| {
        let t = j.saturating_sub(spec.park_frames) as f64;
        (
            (spec.start.0 as f64 + t * spec.velocity.0).round() as i64,
            (spec.start.1 as f64 + t * spec.velocity.1).round() as i64,
        )
    };
    let fits = |(x, y): (i64, i64)| x >= 0 && y >= 0 && x as usize + size <= w && y as usize + size <= h;
    if size == 0 || !fits(corner(0)) || !fits(corner(n - 1)) {
        return Err(Error::InvalidParameter("object path leaves the frame".into()));
    }
    let inside = |p: usize, j: usize| {
        let (x0, y0) = corner(j);
        let (x, y) = ((p % w) as i64, (p / w) as i64);
        (x0..x0 + size as i64).contains(&x) && (y0..y0 + size as i64).contains(&y)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauss = noise(spec.noise)?;
    let bg = Matrix::from_fn(w * h, n, |i, _| texture((i % w) as f64, (i / w) as f64));
    let mut data = bg.clone();
    for j in 0..n {
        for (i, v) in data.col_mut(j).iter_mut().enumerate() {
            if inside(i, j) {
                *v = spec.intensity;
            }
            if spec.noise > 0.0 {
                *v += gauss.sample(&mut rng);
            }
        }
    }
    Ok(SyntheticSequence {
        frames: FrameStack::new(w, h, data)?,
        truth: MaskStack::from_fn(w, h, n, inside),
        background: bg,
        region: None,
    })
}

/// A textured scene translating by `velocity` pixels per frame with a small
/// object moving on top. Frame `j` is displaced by `(j − ⌊n/2⌋)·velocity`, so
/// the middle frame is undisplaced; truth is given in middle-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub velocity: (f64, f64),
    pub object_size: usize,
    pub intensity: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for ShiftSpec {
    fn default() -> Self {
        Self {
            width: 96,
            height: 72,
            frames: 20,
            velocity: (0.5, 0.25),
            object_size: 10,
            intensity: 0.95,
            noise: 0.01,
            seed: 4,
        }
    }
}

pub fn shifting_scene(spec: &ShiftSpec) -> Result<SyntheticSequence> {
    let (w, h, n) = (spec.width, spec.height, spec.frames);
    check_size(w, h, n)?;
    let mid = n / 2;
    let offset = |j: usize| {
        let k = j as f64 - mid as f64;
        (k * spec.velocity.0, k * spec.velocity.1)
    };
    let max_shift = (0..n)
        .map(|j| {
            let (dx, dy) = offset(j);
            dx.abs().max(dy.abs())
        })
        .fold(0.0, f64::max);
    let margin = max_shift.ceil() as usize + 2;
    if 2 * margin + spec.object_size >= w.min(h) {
        return Err(Error::InvalidParameter("frames too small for the requested motion".into()));
    }
    // The object crosses the scored interior diagonally.
    let span_x = w - 2 * margin - spec.object_size;
    let span_y = h - 2 * margin - spec.object_size;
    let corner = |j: usize| {
        let t = if n > 1 { j as f64 / (n - 1) as f64 } else { 0.0 };
        (margin + (t * span_x as f64) as usize, margin + (t * span_y as f64) as usize)
    };
    let size = spec.object_size;
    let in_object = |x: f64, y: f64, j: usize| {
        let (cx, cy) = corner(j);
        x >= cx as f64 && x < (cx + size) as f64 && y >= cy as f64 && y < (cy + size) as f64
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauss = noise(spec.noise)?;
    let mut data = Matrix::zeros(w * h, n);
    for j in 0..n {
        let (dx, dy) = offset(j);
        for (i, v) in data.col_mut(j).iter_mut().enumerate() {
            // Scene point shown at pixel (x, y) of frame j.
            let (sx, sy) = ((i % w) as f64 - dx, (i / w) as f64 - dy);
            *v = if in_object(sx, sy, j) { spec.intensity } else { scene_texture(sx, sy) };
            if spec.noise > 0.0 {
                *v += gauss.sample(&mut rng);
            }
        }
    }
    let truth = MaskStack::from_fn(w, h, n, |p, j| in_object((p % w) as f64, (p / w) as f64, j));
    let bg = Matrix::from_fn(w * h, n, |i, _| scene_texture((i % w) as f64, (i / w) as f64));
    Ok(SyntheticSequence {
        frames: FrameStack::new(w, h, data)?,
        truth,
        background: bg,
        region: Some((margin, margin, w - 2 * margin, h - 2 * margin)),
    })
}

/// An `m × n` matrix `σ₁·u vᵀ + σ₂·(orthogonal rank-one term)` with positive
/// `u, v`, so the top singular vector is close to the all-ones direction when
/// `v` is near-constant.
pub fn gapped_rank_one(m: usize, n: usize, ratio: f64, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.9..1.1)).collect();
    let mut u2: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut v2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    orthogonalise(&mut u2, &u);
    orthogonalise(&mut v2, &v);
    let unit = |x: &[f64]| {
        let s = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        x.iter().map(|a| a / s).collect::<Vec<_>>()
    };
    let (u, v, u2, v2) = (unit(&u), unit(&v), unit(&u2), unit(&v2));
    Matrix::from_fn(m, n, |i, j| u[i] * v[j] + ratio * u2[i] * v2[j])
}

fn orthogonalise(x: &mut [f64], against: &[f64]) {
    let dot: f64 = x.iter().zip(against).map(|(a, b)| a * b).sum();
    let nn: f64 = against.iter().map(|a| a * a).sum();
    for (a, b) in x.iter_mut().zip(against) {
        *a -= dot / nn * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spikes_have_exact_count_and_stay_deterministic() {
        let spec = SpikeSpec {
            width: 20,
            height: 10,
            frames: 5,
            ..SpikeSpec::default()
        };
        let a = static_spikes(&spec).unwrap();
        assert_eq!(a.truth.count_foreground(), 50);
        let b = static_spikes(&spec).unwrap();
        assert_eq!(a.frames, b.frames);
        for (k, v) in a.frames.matrix().as_slice().iter().enumerate() {
            assert!((0.0..=1.0).contains(v), "pixel {k} = {v}");
        }
    }

    #[test]
    fn bar_spans_whole_columns() {
        let s = moving_bar(&BarSpec::default()).unwrap();
        let w = s.truth.width();
        for j in 0..s.truth.len() {
            let f = s.truth.frame(j);
            for x in 0..w {
                let col: Vec<bool> = (0..s.truth.height()).map(|y| f[y * w + x]).collect();
                assert!(col.iter().all(|b| *b == col[0]));
            }
        }
    }

    #[test]
    fn middle_frame_of_shifting_scene_is_undisplaced() {
        let spec = ShiftSpec {
            noise: 0.0,
            ..ShiftSpec::default()
        };
        let s = shifting_scene(&spec).unwrap();
        let mid = s.frames.frame(spec.frames / 2);
        let truth = s.truth.frame(spec.frames / 2);
        for (p, v) in mid.pixels.iter().enumerate() {
            if !truth[p] {
                assert_eq!(*v, s.background[(p, 0)]);
            }
        }
        assert!(s.region.is_some());
    }

    #[test]
    fn gapped_matrix_has_requested_ratio() {
        let a = gapped_rank_one(30, 12, 0.01, 9);
        let svd = crate::linalg::truncated_svd(&a, 2).unwrap();
        let r = svd.singular_values[1] / svd.singular_values[0];
        assert!((r - 0.01).abs() < 1e-10, "{r}");
    }
}
