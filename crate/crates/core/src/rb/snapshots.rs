use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{GridCovariance, Kernel};
use crate::error::{Error, Result};
use crate::kl::eigs_grid;
use crate::mesh::{FieldMesh, DIAM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPlan {
    /// Strictly decreasing correlation lengths.
    pub ell_snaps: Vec<f64>,
    /// Eigenpairs kept per snapshot.
    pub n_sto: usize,
}

impl SnapshotPlan {
    pub fn validate(&self, ell_min: f64) -> Result<()> {
        if self.ell_snaps.is_empty() || self.n_sto == 0 {
            return Err(Error::invalid("snapshot plan needs at least one length and n_sto >= 1"));
        }
        for w in self.ell_snaps.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::invalid("snapshot lengths must be strictly decreasing"));
            }
        }
        let tol = 1e-12;
        if self.ell_snaps.iter().any(|&l| l < ell_min * (1.0 - tol) || l > DIAM * (1.0 + tol)) {
            return Err(Error::invalid(format!("snapshot lengths must lie in [{ell_min}, {DIAM}]")));
        }
        Ok(())
    }
}

/// Inverses of `n_snap` equidistant points in `[1/ell_max, 1/ell_min]`, largest length first.
pub fn snapshot_grid(ell_min: f64, ell_max: f64, n_snap: usize) -> Result<Vec<f64>> {
    if !(ell_min > 0.0) || !(ell_min < ell_max) {
        return Err(Error::invalid(format!("need 0 < ell_min < ell_max, got {ell_min}, {ell_max}")));
    }
    if n_snap == 0 {
        return Err(Error::invalid("n_snap must be at least 1"));
    }
    let a = 1.0 / ell_max;
    let delta = if n_snap == 1 { 0.0 } else { (1.0 / ell_min - a) / (n_snap - 1) as f64 };
    Ok((0..n_snap).map(|s| 1.0 / (a + s as f64 * delta)).collect())
}

/// Snapshot eigenvectors side by side, `N × (n_snap · n_sto)`, at unit sigma.
pub fn snapshot_matrix(mesh: &FieldMesh, plan: &SnapshotPlan, kernel: &Kernel) -> Result<Mat<f64>> {
    plan.validate(*plan.ell_snaps.last().unwrap())?;
    let bases: Vec<_> = plan
        .ell_snaps
        .par_iter()
        .map(|&ell| {
            let g = GridCovariance::from_kernel(mesh, kernel, super::unit_tau(ell));
            eigs_grid(&g, mesh, plan.n_sto)
        })
        .collect::<Result<_>>()?;
    let n = mesh.n();
    let k = plan.n_sto;
    let mut out = Mat::zeros(n, k * bases.len());
    for (s, b) in bases.iter().enumerate() {
        if b.n_sto < k {
            return Err(Error::numerical(format!("snapshot {s} has only {} positive eigenvalues", b.n_sto)));
        }
        for c in 0..k {
            out.col_as_slice_mut(s * k + c).copy_from_slice(b.eigvecs.col_as_slice(c));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_spacing_rule() {
        let ell_min = 1.0 / (0.5f64.sqrt() + 9.0);
        let g = snapshot_grid(ell_min, DIAM, 10).unwrap();
        for (s, l) in g.iter().enumerate() {
            assert!((l - 1.0 / (0.5f64.sqrt() + s as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn four_point_rule() {
        // the reference values are printed to three decimals
        let want = [1.414, 0.664, 0.433, 0.322];
        let g = snapshot_grid(0.322, DIAM, 4).unwrap();
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn degenerate_grid() {
        assert_eq!(snapshot_grid(0.3, DIAM, 1).unwrap(), vec![DIAM]);
        assert!(snapshot_grid(1.5, DIAM, 3).is_err());
    }
}
