//! Low-rank plus sparse decomposition of video frame stacks.
//!
//! A sequence of `n` grayscale frames is flattened into an `m × n` matrix `A`
//! (one frame per column, `m = width · height`) and split as
//! `A ∘ τ ≈ L + S`: a low-rank background `L`, a sparse foreground `S` and
//! per-frame motion parameters `τ` compensating camera movement.
//!
//! Three drivers are provided:
//!
//! - [`decompose::decompose_tau`]: rank-k background with an entrywise ℓ1 foreground.
//! - [`decompose::decompose_block`]: rank-k background with a per-frame ℓ2,1
//!   foreground whose zero pattern follows image columns.
//! - [`decompose::decompose_svdfree`]: constant background `l·𝟙ᵀ` and a foreground
//!   with fixed cardinality, with no SVD on the iteration path.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod decompose;
pub mod error;
pub mod eval;
pub mod frames;
pub mod io;
pub mod linalg;
pub mod motion;
pub mod synth;

pub mod cli;

pub use decompose::{
    decompose, decompose_block, decompose_svdfree, decompose_tau, DecompositionConfig,
    DecompositionResult, LowRank,
};
pub use error::{Error, Result};
pub use eval::{compute_metrics, mask_from_sparse, roc_sweep, MaskMethod, MaskStack, Metrics};
pub use frames::{Frame, FrameStack};
pub use linalg::{Matrix, SparsityRule};
pub use motion::{MotionModel, MotionParams};
