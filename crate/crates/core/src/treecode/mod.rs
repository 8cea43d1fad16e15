//! Particle–cluster treecode with Taylor expansions of arbitrary order.

pub mod coeffs;
mod gaussian;
pub mod multiindex;
pub mod moments;
mod sum;
pub mod tree;

pub use coeffs::{taylor_coeffs_a, taylor_coeffs_gaussian, taylor_coeffs_gaussian_grad};
pub use gaussian::{windowed_grid_density, windowed_score};
pub use moments::{compute_moments, ClusterMoments};
pub use multiindex::MultiIndexSet;
pub use sum::{
    direct_sum, gaussian_expansion_radius, treecode_sum, treecode_velocity_field, CollisionKernel, GaussianGradKernel,
    GaussianKernel, TaylorKernel, TreecodeParams, GAUSSIAN_PRUNE_EXPONENT,
};
pub use tree::{build_tree, ClusterNode, ClusterTree};
