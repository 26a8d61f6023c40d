//! Matérn kernels, their separable linearisation, and covariance matrices on the field mesh.

pub mod assembly;
pub mod bessel;
pub mod clip;
pub mod kernel;
pub mod separable;
pub mod special;

pub use assembly::{
    assemble_cov, assemble_separable_components, separable_tables, separable_weights, CovMatrix,
    GridCovariance, Representation, DEFAULT_DENSE_LIMIT,
};
pub use bessel::bessel_k;
pub use clip::{psd_clip, ClipTol};
pub use kernel::{matern_eval, HyperParams, Kernel, MaternKernel};
pub use separable::{error_bound, linearized_eval, truncation_error_sup, SeparableKernel, Terms};
