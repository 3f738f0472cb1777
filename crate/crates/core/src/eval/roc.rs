use serde::Serialize;

use super::mask::{mask_from_sparse, MaskMethod, MaskStack};
use super::metrics::{compute_metrics, Metrics};
use crate::decompose::{decompose, DecompositionConfig};
use crate::error::{Error, Result};
use crate::frames::FrameStack;
use crate::linalg::SparsityRule;

/// One operating point of a λ sweep. Exactly one of `metrics` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocPoint {
    pub lambda: f64,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Runs one decomposition per λ and scores the support mask of `S` against
/// `truth`.
///
/// The grid must be non-empty and sorted ascending, and `cfg` must use a
/// λ-weighted sparsity rule. A failed decomposition is recorded in its point
/// and the sweep continues.
pub fn roc_sweep(
    a: &FrameStack,
    truth: &MaskStack,
    cfg: &DecompositionConfig,
    lambda_grid: &[f64],
) -> Result<Vec<RocPoint>> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    if lambda_grid.windows(2).any(|w| !(w[0] <= w[1])) || lambda_grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidParameter("lambda grid must be finite and sorted ascending".into()));
    }
    if matches!(cfg.sparsity, SparsityRule::Cardinality { .. }) {
        return Err(Error::InvalidParameter(
            "a lambda sweep needs a soft-entry or column-block sparsity rule".into(),
        ));
    }
    if (truth.width(), truth.height(), truth.len()) != (a.width(), a.height(), a.len()) {
        return Err(Error::shape(
            format!("{}x{}x{} truth", a.width(), a.height(), a.len()),
            format!("{}x{}x{}", truth.width(), truth.height(), truth.len()),
        ));
    }
    Ok(lambda_grid
        .iter()
        .map(|&lambda| {
            let cfg = DecompositionConfig {
                sparsity: cfg.sparsity.with_lambda(lambda),
                ..cfg.clone()
            };
            let scored = decompose(a, &cfg).and_then(|res| {
                let mask = mask_from_sparse(&res.sparse, a.width(), a.height(), MaskMethod::Support)?;
                compute_metrics(&mask, truth)
            });
            match scored {
                Ok(m) => RocPoint {
                    lambda,
                    metrics: Some(m),
                    error: None,
                },
                Err(e) => RocPoint {
                    lambda,
                    metrics: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}
