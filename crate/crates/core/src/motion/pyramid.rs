use crate::error::{Error, Result};
use crate::frames::Frame;

/// Coarsest level must be at least this many pixels in both dimensions.
pub const MIN_LEVEL_SIZE: usize = 16;

// Normalised 5-tap Gaussian with σ = 1.
const KERNEL: [f64; 5] = [
    0.054_488_684_549_642_98,
    0.244_201_342_003_233_6,
    0.402_619_946_894_247,
    0.244_201_342_003_233_6,
    0.054_488_684_549_642_98,
];

/// Coarse-to-fine image pyramid. Level 0 is the original frame; each further
/// level is blurred with a 5×5 Gaussian (σ = 1) and subsampled at even pixels.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<Frame>,
}

impl Pyramid {
    /// Builds up to `levels` levels, stopping early once the next level would
    /// fall under [`MIN_LEVEL_SIZE`] in either dimension.
    pub fn build(frame: &Frame, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidParameter("pyramid needs at least one level".into()));
        }
        if frame.width == 0 || frame.height == 0 {
            return Err(Error::InvalidParameter("empty frame".into()));
        }
        let mut out = vec![frame.clone()];
        while out.len() < levels {
            let last = out.last().unwrap();
            let (w, h) = ((last.width + 1) / 2, (last.height + 1) / 2);
            if w < MIN_LEVEL_SIZE || h < MIN_LEVEL_SIZE {
                break;
            }
            let blurred = blur(last);
            out.push(Frame::from_fn(w, h, |x, y| blurred.get(2 * x, 2 * y)));
        }
        Ok(Self { levels: out })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &Frame {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Frame] {
        &self.levels
    }
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub(crate) fn blur(frame: &Frame) -> Frame {
    let horizontal = Frame::from_fn(frame.width, frame.height, |x, y| {
        KERNEL
            .iter()
            .enumerate()
            .map(|(k, c)| c * frame.get_clamped(x as isize + k as isize - 2, y as isize))
            .sum()
    });
    Frame::from_fn(frame.width, frame.height, |x, y| {
        KERNEL
            .iter()
            .enumerate()
            .map(|(k, c)| c * horizontal.get_clamped(x as isize, y as isize + k as isize - 2))
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_matches_gaussian() {
        let raw: Vec<f64> = (-2..=2).map(|i: i32| (-(i * i) as f64 / 2.0).exp()).collect();
        let total: f64 = raw.iter().sum();
        for (k, r) in KERNEL.iter().zip(&raw) {
            assert!((k - r / total).abs() < 1e-15);
        }
    }

    #[test]
    fn level_sizes_halve_and_respect_minimum() {
        let f = Frame::filled(70, 40, 0.3);
        let p = Pyramid::build(&f, 5).unwrap();
        let sizes: Vec<_> = p.levels().iter().map(|l| (l.width, l.height)).collect();
        assert_eq!(sizes, vec![(70, 40), (35, 20)]);
        // A constant image stays constant at every level.
        assert!(p.level(1).pixels.iter().all(|v| (v - 0.3).abs() < 1e-14));
        assert_eq!(Pyramid::build(&f, 1).unwrap().level_count(), 1);
        assert!(Pyramid::build(&f, 0).is_err());
    }
}
