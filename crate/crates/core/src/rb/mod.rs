//! Reduced basis for the parametric KL eigenproblem.
//!
//! Offline: eigenvectors at a few snapshot correlation lengths are compressed by POD into an
//! M-orthonormal basis `W`, and every separable component is projected once. Online: the
//! reduced covariance for any `τ` is a weighted sum of the projected components, solved densely.

pub mod online;
pub mod pod;
pub mod projection;
pub mod snapshots;
pub mod store;

pub use online::{rb_lift, reduced_eigs, reduced_eigs_direct, ReducedBasis, ReducedKL};
pub use pod::{build_pod, Pod};
pub use projection::{project_components, project_grid, project_tables};
pub use snapshots::{snapshot_grid, snapshot_matrix, SnapshotPlan};
pub use store::{load_basis, save_basis, Manifest};

use crate::covariance::{separable_tables, HyperParams, Kernel, SeparableKernel};
use crate::error::Result;
use crate::mesh::FieldMesh;

/// Offline settings beyond the snapshot plan.
#[derive(Debug, Clone)]
pub struct OfflineOptions {
    /// Kernel used for the snapshot eigenproblems (normally the exact kernel).
    pub snapshot_kernel: Kernel,
    /// Separable approximation used online.
    pub separable: SeparableKernel,
    pub lambda_min: f64,
    /// Optional cap on the basis size (leading POD modes).
    pub max_rb: Option<usize>,
}

/// Snapshot eigensolves, POD and component projection.
pub fn build_reduced_basis(mesh: &FieldMesh, plan: &SnapshotPlan, opts: &OfflineOptions) -> Result<ReducedBasis> {
    let snaps = snapshot_matrix(mesh, plan, &opts.snapshot_kernel)?;
    let pod = build_pod(&snaps, mesh.h, opts.lambda_min, opts.max_rb)?;
    log::info!("POD retained {} of {} snapshot columns", pod.w.ncols(), snaps.ncols());
    let tables = separable_tables(mesh, &opts.separable);
    let components = project_tables(&pod.w, &tables)?;
    Ok(ReducedBasis::new(
        pod,
        components,
        opts.separable,
        plan.ell_snaps.clone(),
        plan.n_sto,
        mesh.n_side,
        opts.snapshot_kernel.describe(),
    ))
}

/// Unit-sigma parameter point at a snapshot length.
pub(crate) fn unit_tau(ell: f64) -> HyperParams {
    HyperParams::new(ell, 1.0)
}
