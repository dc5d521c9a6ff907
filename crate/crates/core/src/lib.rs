//! Adaptive sparse recovery over a metered linear-measurement oracle.
//!
//! A scheme gets a [`MeasurementOracle`] wrapping a hidden [`Signal`], asks for
//! batches of linear measurements in rounds, and returns a [`SparseEstimate`].
//! The oracle's ledger records how many measurements and rounds were spent.
//!
//! Schemes:
//! - [`lp_lp_recover`]: `||x - xhat||_p <= (1 + eps) ||x_{-k}||_p` for `0 < p < 2`.
//! - [`linf_l2_recover`]: `||x - xhat||_inf^2 <= ||x_{-k}||_2^2 / k`.
//! - [`round_optimal_l2l2`] and [`eps_improved_l2l2`]: `||x - xhat||_2 <= (1 + eps) ||x_{-k}||_2`.
//! - [`count_sketch_recover`]: the one-round baseline.

mod error;
mod hashing;
pub mod l2l2;
pub mod linf_l2;
pub mod lp_lp;
pub mod one_sparse;
pub mod oracle;
mod parallel;
pub mod seed;
pub mod signal;
pub mod sketch;
mod stats;

pub use error::{Error, Result};
pub use l2l2::{
    adaptive_l2l2_oracle, eps_improved_l2l2, loop_schedule, round_optimal_l2l2, EpsImprovedParams,
    LoopRound, RoundOptimalParams,
};
pub use linf_l2::{linf_l2_recover, LinfL2Params};
pub use lp_lp::{derive_lp_params, lp_lp_recover, LpParams, LpRecovery};
pub use one_sparse::{improved_one_sparse_recover, one_sparse_recover, OneSparseResult};
pub use oracle::{merge_parallel, LinearFunctional, MeasurementLedger, MeasurementOracle, RoundToken};
pub use seed::Seed;
pub use signal::{
    error_ratio, heavy_set, linf_error_ratio, subsample_indices, tail_norm, top_k_support, Signal,
    SparseEstimate, SupportSet,
};
pub use sketch::{
    count_sketch_recover, estimate_tail_v, partition_count_sketch, PartitionNormEstimates, PartitionSpec,
    TailEstimate,
};
