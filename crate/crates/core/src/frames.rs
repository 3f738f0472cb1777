use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A single grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::shape(
                format!("{} pixels for {width}x{height}", width * height),
                format!("{} pixels", pixels.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    /// Pixel lookup with clamp-to-edge for out-of-range integer coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[yc * self.width + xc]
    }

    /// The frame as a `height × width` matrix whose columns are image columns.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_row_major(self.height, self.width, &self.pixels)
            .expect("frame dimensions are consistent")
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            width: m.cols(),
            height: m.rows(),
            pixels: m.to_row_major(),
        }
    }
}

/// `n` frames of identical size flattened into an `m × n` matrix, one
/// row-major frame per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    width: usize,
    height: usize,
    data: Matrix,
}

impl FrameStack {
    pub fn new(width: usize, height: usize, data: Matrix) -> Result<Self> {
        if data.rows() != width * height {
            return Err(Error::shape(
                format!("{} rows for {width}x{height} frames", width * height),
                format!("{} rows", data.rows()),
            ));
        }
        if data.cols() == 0 {
            return Err(Error::InvalidParameter("a frame stack needs at least one frame".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_frames(frames: &[Frame]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidParameter("a frame stack needs at least one frame".into()))?;
        let (w, h) = (first.width, first.height);
        let mut columns = Vec::with_capacity(frames.len());
        for (j, f) in frames.iter().enumerate() {
            if (f.width, f.height) != (w, h) {
                return Err(Error::shape(
                    format!("{w}x{h}"),
                    format!("frame {j} is {}x{}", f.width, f.height),
                ));
            }
            columns.push(f.pixels.clone());
        }
        Self::new(w, h, Matrix::from_columns(&columns)?)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixels per frame.
    #[inline]
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.cols()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.cols() == 0
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    pub fn frame(&self, j: usize) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.data.col(j).to_vec(),
        }
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.len()).map(|j| self.frame(j))
    }

    /// Reorders frames: output frame `i` is input frame `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let columns: Vec<Vec<f64>> = order.iter().map(|&j| self.data.col(j).to_vec()).collect();
        Self::new(self.width, self.height, Matrix::from_columns(&columns)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_flatten_row_major_into_columns() {
        let f0 = Frame::from_fn(3, 2, |x, y| (10 * y + x) as f64);
        let f1 = Frame::filled(3, 2, 7.0);
        let stack = FrameStack::from_frames(&[f0.clone(), f1]).unwrap();
        assert_eq!(stack.matrix().shape(), (6, 2));
        assert_eq!(stack.matrix().col(0), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(stack.frame(0), f0);
    }

    #[test]
    fn image_columns_become_matrix_columns() {
        let f = Frame::from_fn(3, 2, |x, y| (10 * y + x) as f64);
        let m = f.to_matrix();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.col(1), &[1.0, 11.0]);
        assert_eq!(Frame::from_matrix(&m), f);
    }

    #[test]
    fn mixed_sizes_are_rejected() {
        let a = Frame::filled(3, 2, 0.0);
        let b = Frame::filled(2, 3, 0.0);
        assert!(FrameStack::from_frames(&[a, b]).is_err());
        assert!(FrameStack::from_frames(&[]).is_err());
    }
}
