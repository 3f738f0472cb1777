use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible determinant of the linear part of a warp.
pub const MIN_DETERMINANT: f64 = 1e-6;

/// Parametric motion family. Every parameterisation maps the zero vector to
/// the identity transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    #[default]
    Identity,
    /// `(tx, ty)`.
    Translation,
    /// `(a, b, tx, ty)` with linear part `[[1+a, −b], [b, 1+a]]`.
    Similarity,
    /// `(a11 − 1, a12, a21, a22 − 1, tx, ty)`.
    Affine,
}

impl MotionModel {
    /// Number of parameters per frame.
    pub fn dof(self) -> usize {
        match self {
            MotionModel::Identity => 0,
            MotionModel::Translation => 2,
            MotionModel::Similarity => 4,
            MotionModel::Affine => 6,
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            MotionModel::Identity => &[],
            MotionModel::Translation => &["tx", "ty"],
            MotionModel::Similarity => &["a", "b", "tx", "ty"],
            MotionModel::Affine => &["a11m1", "a12", "a21", "a22m1", "tx", "ty"],
        }
    }

    pub fn identity_params(self) -> Vec<f64> {
        vec![0.0; self.dof()]
    }

    pub(crate) fn check_len(self, params: &[f64]) -> Result<()> {
        if params.len() != self.dof() {
            return Err(Error::shape(
                format!("{} parameters for {self:?}", self.dof()),
                format!("{}", params.len()),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite motion parameters {params:?}"
            )));
        }
        Ok(())
    }

    /// Linear part and translation of the transform, in coordinates centred on
    /// the warp origin.
    pub fn to_affine(self, params: &[f64]) -> Result<Affine2> {
        self.check_len(params)?;
        let p = params;
        Ok(match self {
            MotionModel::Identity => Affine2::IDENTITY,
            MotionModel::Translation => Affine2 {
                a: [[1.0, 0.0], [0.0, 1.0]],
                t: [p[0], p[1]],
            },
            MotionModel::Similarity => Affine2 {
                a: [[1.0 + p[0], -p[1]], [p[1], 1.0 + p[0]]],
                t: [p[2], p[3]],
            },
            MotionModel::Affine => Affine2 {
                a: [[1.0 + p[0], p[1]], [p[2], 1.0 + p[3]]],
                t: [p[4], p[5]],
            },
        })
    }

    /// Inverse of [`MotionModel::to_affine`]. The transform must belong to the
    /// family; components outside it are dropped.
    pub fn from_affine(self, m: &Affine2) -> Vec<f64> {
        match self {
            MotionModel::Identity => vec![],
            MotionModel::Translation => vec![m.t[0], m.t[1]],
            MotionModel::Similarity => vec![
                0.5 * (m.a[0][0] + m.a[1][1]) - 1.0,
                0.5 * (m.a[1][0] - m.a[0][1]),
                m.t[0],
                m.t[1],
            ],
            MotionModel::Affine => vec![
                m.a[0][0] - 1.0,
                m.a[0][1],
                m.a[1][0],
                m.a[1][1] - 1.0,
                m.t[0],
                m.t[1],
            ],
        }
    }

    /// Parameters of the inverse transform.
    pub fn invert_params(self, params: &[f64]) -> Result<Vec<f64>> {
        Ok(self.from_affine(&self.to_affine(params)?.inverse()?))
    }
}

/// `p ↦ A·p + t` on centred coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine2 {
    pub a: [[f64; 2]; 2],
    pub t: [f64; 2],
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 {
        a: [[1.0, 0.0], [0.0, 1.0]],
        t: [0.0, 0.0],
    };

    pub fn determinant(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn inverse(&self) -> Result<Affine2> {
        let det = self.determinant();
        if !(det > MIN_DETERMINANT) {
            return Err(Error::NonInvertibleWarp(det));
        }
        let inv = [
            [self.a[1][1] / det, -self.a[0][1] / det],
            [-self.a[1][0] / det, self.a[0][0] / det],
        ];
        let t = [
            -(inv[0][0] * self.t[0] + inv[0][1] * self.t[1]),
            -(inv[1][0] * self.t[0] + inv[1][1] * self.t[1]),
        ];
        Ok(Affine2 { a: inv, t })
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a[0][0] * x + self.a[0][1] * y + self.t[0],
            self.a[1][0] * x + self.a[1][1] * y + self.t[1],
        )
    }
}

/// Per-frame motion parameters for a whole sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub model: MotionModel,
    pub per_frame: Vec<Vec<f64>>,
}

impl MotionParams {
    pub fn identity(model: MotionModel, frames: usize) -> Self {
        Self {
            model,
            per_frame: vec![model.identity_params(); frames],
        }
    }

    pub fn len(&self) -> usize {
        self.per_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_frame.is_empty()
    }

    /// Checks lengths, finiteness and invertibility of every frame's warp.
    pub fn validate(&self) -> Result<()> {
        for p in &self.per_frame {
            let det = self.model.to_affine(p)?.determinant();
            if !(det > MIN_DETERMINANT) {
                return Err(Error::NonInvertibleWarp(det));
            }
        }
        Ok(())
    }
}
