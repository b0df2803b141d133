//! Weighted norms, corner singular functions and the discrete Hardy constant.

pub mod hardy;
pub mod norm;
pub mod singular;

pub use hardy::{hardy_min_eigenvalue, hardy_verdict, HardyOptions, HardyVerdict};
pub use norm::{depth_sweep, weighted_norm, WeightedNorm, WeightedNormSpec};
pub use singular::{
    edge_manufactured_problem, manufactured_problem, Axial, CornerSingularFunction, Cutoff, EdgeSingularSolution,
};
