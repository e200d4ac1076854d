//! Geometry, kernels, configurations and elementary functionals.

pub mod configuration;
pub mod functional;
pub mod geometry;
pub mod kernel;

pub use configuration::Configuration;
pub use functional::{
    e_product, jump_rate, k_transform, log_jump_rate, lp_integral_truncated, repulsion_sum,
    total_energy, FiniteSupportFunction, GridSpec, SupportBox,
};
pub use geometry::{ball_volume, min_image, norm, Position, TorusDomain};
pub use kernel::{KernelFamily, KernelSpec, RadialKernel};
