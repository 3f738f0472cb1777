use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Binary foreground masks, one per frame, row-major within each frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskStack {
    width: usize,
    height: usize,
    frames: usize,
    bits: Vec<bool>,
}

impl MaskStack {
    pub fn new(width: usize, height: usize, frames: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height * frames {
            return Err(Error::shape(
                format!("{} mask bits for {frames} frames of {width}x{height}", width * height * frames),
                format!("{}", bits.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            frames,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize, frames: usize) -> Self {
        Self {
            width,
            height,
            frames,
            bits: vec![false; width * height * frames],
        }
    }

    /// Foreground wherever `f(pixel, frame)` holds.
    pub fn from_fn(width: usize, height: usize, frames: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let m = width * height;
        let bits = (0..m * frames).map(|k| f(k % m, k / m)).collect();
        Self {
            width,
            height,
            frames,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of frames.
    pub fn len(&self) -> usize {
        self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.frames == 0
    }

    pub fn frame(&self, j: usize) -> &[bool] {
        let m = self.width * self.height;
        &self.bits[j * m..(j + 1) * m]
    }

    pub fn frame_mut(&mut self, j: usize) -> &mut [bool] {
        let m = self.width * self.height;
        &mut self.bits[j * m..(j + 1) * m]
    }

    #[inline]
    pub fn get(&self, pixel: usize, frame: usize) -> bool {
        self.bits[frame * self.width * self.height + pixel]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
            ..self.clone()
        }
    }

    /// Output frame `i` is input frame `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut bits = Vec::with_capacity(order.len() * self.width * self.height);
        for &j in order {
            bits.extend_from_slice(self.frame(j));
        }
        Self {
            frames: order.len(),
            bits,
            ..self.clone()
        }
    }

    /// The `w × h` window starting at `(x0, y0)` of every frame.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut bits = Vec::with_capacity(w * h * self.frames);
        for j in 0..self.frames {
            let f = self.frame(j);
            for y in y0..y0 + h {
                bits.extend_from_slice(&f[y * self.width + x0..y * self.width + x0 + w]);
            }
        }
        Self::new(w, h, self.frames, bits)
    }
}

/// How foreground pixels are read off the sparse component.
#[derive(Debug, Clone, Copy)]
pub enum MaskMethod<'a> {
    /// Foreground wherever `S ≠ 0`.
    Support,
    /// Foreground where `S ≠ 0` and `S` lies more than three standard
    /// deviations from the mean background residual; see [`three_sigma_stats`].
    ThreeSigma {
        observed: &'a Matrix,
        background: &'a Matrix,
    },
}

/// Background residual statistics used by the three-sigma rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeSigmaStats {
    pub mean: f64,
    pub std: f64,
    /// Number of background (`S = 0`) pixels the statistics were taken over.
    pub samples: usize,
}

impl ThreeSigmaStats {
    /// Upper decision threshold `μ + 3σ`.
    pub fn upper(&self) -> f64 {
        self.mean + 3.0 * self.std
    }

    /// Lower decision threshold `μ − 3σ`.
    pub fn lower(&self) -> f64 {
        self.mean - 3.0 * self.std
    }

    #[inline]
    pub fn is_outlier(&self, v: f64) -> bool {
        (v - self.mean).abs() > 3.0 * self.std
    }
}

/// Mean and population standard deviation of the signed residual `A − L`
/// over pixels where `S = 0`.
pub fn three_sigma_stats(observed: &Matrix, background: &Matrix, sparse: &Matrix) -> Result<ThreeSigmaStats> {
    observed.check_same_shape(background)?;
    observed.check_same_shape(sparse)?;
    let mut count = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    // Welford's update keeps the variance accurate for large samples.
    for ((a, l), s) in observed.as_slice().iter().zip(background.as_slice()).zip(sparse.as_slice()) {
        if *s != 0.0 {
            continue;
        }
        count += 1;
        let x = a - l;
        let delta = x - mean;
        mean += delta / count as f64;
        m2 += delta * (x - mean);
    }
    if count == 0 {
        return Err(Error::NoBackgroundSample);
    }
    Ok(ThreeSigmaStats {
        mean,
        std: (m2 / count as f64).sqrt(),
        samples: count,
    })
}

/// Binary foreground masks from a sparse component laid out as frames of
/// `width × height`.
pub fn mask_from_sparse(sparse: &Matrix, width: usize, height: usize, method: MaskMethod<'_>) -> Result<MaskStack> {
    if sparse.rows() != width * height {
        return Err(Error::shape(
            format!("{} rows for {width}x{height} frames", width * height),
            format!("{} rows", sparse.rows()),
        ));
    }
    let bits = match method {
        MaskMethod::Support => sparse.as_slice().iter().map(|v| *v != 0.0).collect(),
        MaskMethod::ThreeSigma { observed, background } => {
            let stats = three_sigma_stats(observed, background, sparse)?;
            sparse
                .as_slice()
                .iter()
                .map(|v| *v != 0.0 && stats.is_outlier(*v))
                .collect()
        }
    };
    MaskStack::new(width, height, sparse.cols(), bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_examples() {
        let s = Matrix::zeros(6, 2);
        assert_eq!(mask_from_sparse(&s, 3, 2, MaskMethod::Support).unwrap().count_foreground(), 0);
        let mut s = s;
        s[(4, 1)] = -0.2;
        let mask = mask_from_sparse(&s, 3, 2, MaskMethod::Support).unwrap();
        assert_eq!(mask.count_foreground(), 1);
        assert!(mask.get(4, 1));
    }

    #[test]
    fn three_sigma_needs_background() {
        let s = Matrix::from_fn(4, 1, |_, _| 1.0);
        let a = Matrix::zeros(4, 1);
        let err = mask_from_sparse(&s, 2, 2, MaskMethod::ThreeSigma { observed: &a, background: &a });
        assert!(matches!(err, Err(Error::NoBackgroundSample)));
    }

    #[test]
    fn three_sigma_is_shift_invariant() {
        let a = Matrix::from_fn(50, 2, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        let l = Matrix::from_fn(50, 2, |i, _| 0.1 * i as f64 / 50.0);
        let s = Matrix::from_fn(50, 2, |i, j| if (i + j) % 9 == 0 { 2.5 * a[(i, j)] } else { 0.0 });
        let base = three_sigma_stats(&a, &l, &s).unwrap();
        let shifted = three_sigma_stats(&a.map(|v| v + 3.0), &l.map(|v| v + 3.0), &s).unwrap();
        assert!((base.mean - shifted.mean).abs() < 1e-12);
        assert!((base.std - shifted.std).abs() < 1e-12);
    }

    #[test]
    fn crop_and_permute() {
        let m = MaskStack::from_fn(4, 3, 2, |p, j| p % 4 == j + 1);
        let c = m.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.frame(0), &[true, false, true, false]);
        assert_eq!(c.frame(1), &[false, true, false, true]);
        assert_eq!(m.permuted(&[1, 0]).frame(0), m.frame(1));
        assert!(m.crop(3, 0, 2, 1).is_err());
        assert_eq!(m.complement().count_foreground(), 24 - m.count_foreground());
    }
}
