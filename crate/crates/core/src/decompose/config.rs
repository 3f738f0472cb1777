use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparsityRule;
use crate::motion::{MotionModel, DEFAULT_LEVELS};

/// Settings shared by the three drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    /// Target rank `k` of the background. The SVD-free driver always uses 1.
    pub rank: usize,
    pub sparsity: SparsityRule,
    /// Stop once `‖A∘τ − L − S‖_F² / ‖A‖_F²` falls to this value.
    pub tol: f64,
    pub max_iter: usize,
    pub motion: MotionModel,
    pub pyramid_levels: usize,
    /// Initialise `S` from high-leverage image columns instead of zero.
    pub ghost_removal: bool,
    /// Singular directions used for leverage scores; `None` means `min(5, rank)`.
    pub leverage_p: Option<usize>,
    /// Align every frame to the middle frame before the first iteration.
    pub prealign: bool,
    /// Stop re-estimating motion after this many iterations.
    pub motion_freeze_after: Option<usize>,
    /// Seed for the randomised SVD start blocks.
    pub seed: u64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            rank: 1,
            sparsity: SparsityRule::SoftEntry { lambda: 0.1 },
            tol: 1e-7,
            max_iter: 10,
            motion: MotionModel::Identity,
            pyramid_levels: DEFAULT_LEVELS,
            ghost_removal: false,
            leverage_p: None,
            prealign: true,
            motion_freeze_after: None,
            seed: 0,
        }
    }
}

impl DecompositionConfig {
    /// Entrywise ℓ1 foreground with a rank-`rank` background.
    pub fn tau(rank: usize, lambda: f64) -> Self {
        Self {
            rank,
            sparsity: SparsityRule::SoftEntry { lambda },
            ..Self::default()
        }
    }

    /// Image-column block-sparse foreground with a rank-`rank` background.
    pub fn block(rank: usize, lambda: f64) -> Self {
        Self {
            rank,
            sparsity: SparsityRule::ColumnBlock { lambda },
            ..Self::default()
        }
    }

    /// Constant background with a `kappa`-sparse foreground.
    pub fn svdfree(kappa: usize) -> Self {
        Self {
            rank: 1,
            sparsity: SparsityRule::Cardinality { kappa },
            ..Self::default()
        }
    }

    /// The classical principal component pursuit weight `1/√max(m, n)`.
    pub fn pcp_lambda(m: usize, n: usize) -> f64 {
        1.0 / (m.max(n).max(1) as f64).sqrt()
    }

    pub fn with_motion(mut self, motion: MotionModel) -> Self {
        self.motion = motion;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_ghost_removal(mut self, on: bool) -> Self {
        self.ghost_removal = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn effective_leverage_p(&self) -> usize {
        self.leverage_p.unwrap_or(self.rank.min(5))
    }

    /// Checks the configuration against an `m × n` data matrix.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if self.rank == 0 || self.rank > m.min(n) {
            return Err(Error::InvalidParameter(format!(
                "rank {} must lie in 1..={} for a {m}x{n} matrix",
                self.rank,
                m.min(n)
            )));
        }
        if self.pyramid_levels == 0 {
            return Err(Error::InvalidParameter("pyramid_levels must be at least 1".into()));
        }
        if self.leverage_p == Some(0) {
            return Err(Error::InvalidParameter("leverage_p must be at least 1".into()));
        }
        self.sparsity.validate(m * n)
    }
}
