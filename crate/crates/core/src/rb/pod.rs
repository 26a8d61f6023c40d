use faer::Mat;

use crate::error::{Error, Result};

/// POD output: M-orthonormal basis and the retained singular values.
#[derive(Debug, Clone)]
pub struct Pod {
    pub w: Mat<f64>,
    pub sv: Vec<f64>,
    pub lambda_min: f64,
}

/// SVD of `h · W_snap` (the `M^{1/2}`-weighted snapshots); keeps left singular vectors with
/// squared singular value above `lambda_min`, at most `max_rb` of them, and returns
/// `W = U / h`.
pub fn build_pod(snapshots: &Mat<f64>, h: f64, lambda_min: f64, max_rb: Option<usize>) -> Result<Pod> {
    if !(lambda_min >= 0.0) {
        return Err(Error::invalid("lambda_min must be nonnegative"));
    }
    if snapshots.ncols() == 0 || snapshots.nrows() == 0 {
        return Err(Error::invalid("empty snapshot matrix"));
    }
    let n = snapshots.nrows();
    let a = Mat::from_fn(n, snapshots.ncols(), |i, j| h * snapshots[(i, j)]);
    if a.col_iter().any(|c| c.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("snapshot matrix has non-finite entries"));
    }
    let svd = a.thin_svd().map_err(|e| Error::numerical(format!("POD svd failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let u = svd.U();
    // Rank cutoff on top of the threshold so exactly dependent columns never enter the basis.
    let rank_tol = s[0] * (n.max(snapshots.ncols()) as f64) * f64::EPSILON;
    let mut keep = (0..s.nrows()).take_while(|&i| s[i] * s[i] > lambda_min && s[i] > rank_tol).count();
    if let Some(cap) = max_rb {
        keep = keep.min(cap);
    }
    if keep == 0 {
        return Err(Error::invalid(format!("no POD mode exceeds lambda_min = {lambda_min:e}")));
    }
    let mut w = Mat::from_fn(n, keep, |i, j| u[(i, j)] / h);
    crate::linalg::fix_signs(&mut w);
    Ok(Pod { w, sv: (0..keep).map(|i| s[i]).collect(), lambda_min })
}
