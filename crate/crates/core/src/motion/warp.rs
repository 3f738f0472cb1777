use super::model::{Affine2, MotionModel};
use crate::error::Result;
use crate::frames::Frame;

/// Centre of the image grid, the origin of every motion parameterisation.
#[inline]
pub(crate) fn image_center(width: usize, height: usize) -> (f64, f64) {
    ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

/// Bilinear interpolation with clamp-to-edge outside the grid.
#[inline]
pub(crate) fn sample_bilinear(frame: &Frame, x: f64, y: f64) -> f64 {
    let w = frame.width;
    let h = frame.height;
    let xc = x.clamp(0.0, (w - 1) as f64);
    let yc = y.clamp(0.0, (h - 1) as f64);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let p = &frame.pixels;
    let top = (1.0 - fx) * p[y0 * w + x0] + fx * p[y0 * w + x1];
    let bottom = (1.0 - fx) * p[y1 * w + x0] + fx * p[y1 * w + x1];
    (1.0 - fy) * top + fy * bottom
}

/// Resamples `frame` at `sampling(p − origin) + origin` for every output pixel `p`.
pub(crate) fn resample(frame: &Frame, sampling: &Affine2, origin: (f64, f64)) -> Frame {
    let (ox, oy) = origin;
    Frame::from_fn(frame.width, frame.height, |x, y| {
        let (qx, qy) = sampling.apply(x as f64 - ox, y as f64 - oy);
        sample_bilinear(frame, qx + ox, qy + oy)
    })
}

/// Applies the motion `τ` to a frame: content at `p` moves to `A(p − c) + c + t`
/// where `c` is the image centre.
///
/// Implemented as an inverse warp with bilinear interpolation; samples that
/// fall outside the frame take the nearest edge pixel. The identity parameter
/// vector returns the input unchanged.
pub fn warp_frame(frame: &Frame, tau: &[f64], model: MotionModel) -> Result<Frame> {
    let forward = model.to_affine(tau)?;
    let sampling = forward.inverse()?;
    if tau.iter().all(|p| *p == 0.0) {
        return Ok(frame.clone());
    }
    Ok(resample(frame, &sampling, image_center(frame.width, frame.height)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn smooth(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.2 * (x * 0.21).sin() * (y * 0.17).cos() + 0.1 * ((x + 2.0 * y) * 0.09).sin()
        })
    }

    #[test]
    fn identity_is_bit_exact() {
        let f = smooth(17, 11);
        for model in [MotionModel::Translation, MotionModel::Similarity, MotionModel::Affine] {
            assert_eq!(warp_frame(&f, &model.identity_params(), model).unwrap(), f);
        }
    }

    #[test]
    fn unit_translation_copies_left_neighbour() {
        let w = 12;
        let ramp = Frame::from_fn(w, 6, |x, _| x as f64 / w as f64);
        let out = warp_frame(&ramp, &[1.0, 0.0], MotionModel::Translation).unwrap();
        for y in 0..6 {
            for x in 1..w {
                assert_eq!(out.get(x, y), ramp.get(x - 1, y));
            }
        }
    }

    #[test]
    fn quarter_turn_preserves_symmetric_checkerboard() {
        // 20 px with 4 px cells: an odd number of cells per side keeps the
        // pattern invariant under a 90° turn about the centre.
        let n = 20;
        let board = Frame::from_fn(n, n, |x, y| ((x / 4 + y / 4) % 2) as f64);
        let rotated = warp_frame(&board, &[-1.0, 1.0, 0.0, 0.0], MotionModel::Similarity).unwrap();
        for y in 1..n - 1 {
            for x in 1..n - 1 {
                // Oracle: the index permutation of a quarter turn.
                let (sx, sy) = (y, n - 1 - x);
                assert_eq!(rotated.get(x, y), board.get(sx, sy));
                assert_eq!(rotated.get(x, y), board.get(x, y));
            }
        }
    }

    #[test]
    fn warp_then_inverse_recovers_interior() {
        let f = smooth(48, 40);
        let tau = [0.03, -0.02, 0.015, 0.01, 1.3, -0.7];
        let inv = MotionModel::Affine.invert_params(&tau).unwrap();
        let back = warp_frame(
            &warp_frame(&f, &tau, MotionModel::Affine).unwrap(),
            &inv,
            MotionModel::Affine,
        )
        .unwrap();
        let margin = 4;
        let mut err = 0.0;
        let mut count = 0;
        for y in margin..40 - margin {
            for x in margin..48 - margin {
                err += (back.get(x, y) - f.get(x, y)).abs();
                count += 1;
            }
        }
        assert!(err / (count as f64) <= 2e-2, "mean abs error {}", err / count as f64);
    }

    #[test]
    fn singular_parameters_fail() {
        let f = smooth(8, 8);
        assert!(matches!(
            warp_frame(&f, &[-1.0, 0.0, 0.0, 0.0], MotionModel::Similarity),
            Err(Error::NonInvertibleWarp(_))
        ));
    }
}
