//! Dense linear algebra: the matrix type, norms, proximal operators,
//! truncated SVD and leverage scores.

mod eigen;
mod leverage;
mod matrix;
mod prox;
mod svd;

pub use leverage::{leverage_scores, row_mean_vector, RANK_TOL};
pub use matrix::Matrix;
pub use prox::{
    column_shrink, frobenius_norm, frobenius_norm_sq, hard_threshold_top, l1_norm,
    soft_threshold, soft_threshold_scalar, SparsityRule,
};
pub use svd::{
    rank_k_project, truncated_svd, truncated_svd_with, GramOperator, SvdOptions, SvdTruncation,
    DENSE_LIMIT,
};

pub(crate) use leverage::row_leverage_scores_with;
pub(crate) use matrix::norm2;
pub(crate) use prox::{hard_threshold_in_place, shrink_column_in_place};
pub(crate) use svd::narrow_is_cols;
