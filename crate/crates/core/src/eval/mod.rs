//! Foreground masks, classification metrics and λ sweeps.

mod mask;
mod metrics;
mod roc;

pub use mask::{mask_from_sparse, three_sigma_stats, MaskMethod, MaskStack, ThreeSigmaStats};
pub use metrics::{compute_metrics, Metrics};
pub use roc::{roc_sweep, RocPoint};
