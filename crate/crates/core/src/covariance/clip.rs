use faer::Mat;

use crate::linalg::EigPairs;

/// Clipping threshold: absolute, or relative to the largest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClipTol {
    Abs(f64),
    Rel(f64),
}

impl Default for ClipTol {
    fn default() -> Self {
        ClipTol::Abs(0.0)
    }
}

/// Drops every eigenpair whose eigenvalue does not exceed the threshold.
/// Returns the retained pairs (order preserved) and the number discarded.
pub fn psd_clip(pairs: EigPairs, tol: ClipTol) -> (EigPairs, usize) {
    let lmax = pairs.values.iter().cloned().fold(0.0f64, f64::max);
    let thr = match tol {
        ClipTol::Abs(t) => t,
        ClipTol::Rel(r) => r * lmax,
    };
    let keep: Vec<usize> = (0..pairs.len()).filter(|&i| pairs.values[i] > thr).collect();
    let clipped = pairs.len() - keep.len();
    if clipped == 0 {
        return (pairs, 0);
    }
    let n = pairs.vectors.nrows();
    let values = keep.iter().map(|&i| pairs.values[i]).collect();
    let vectors = Mat::from_fn(n, keep.len(), |r, c| pairs.vectors[(r, keep[c])]);
    (EigPairs { values, vectors }, clipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_pairs(v: &[f64]) -> EigPairs {
        let n = v.len();
        EigPairs { values: v.to_vec(), vectors: Mat::from_fn(n, n, |i, j| (i == j) as u8 as f64) }
    }

    #[test]
    fn clips_negative() {
        let (p, c) = psd_clip(diag_pairs(&[3.0, 1.0, -0.2]), ClipTol::default());
        assert_eq!(p.values, vec![3.0, 1.0]);
        assert_eq!(c, 1);
        assert_eq!(p.vectors.ncols(), 2);
        assert_eq!(p.vectors[(1, 1)], 1.0);
    }

    #[test]
    fn positive_unchanged() {
        let (p, c) = psd_clip(diag_pairs(&[3.0, 1.0, 0.5]), ClipTol::default());
        assert_eq!(p.values, vec![3.0, 1.0, 0.5]);
        assert_eq!(c, 0);
    }

    #[test]
    fn relative_threshold() {
        let (p, c) = psd_clip(diag_pairs(&[1.0, 1e-13, 1e-11]), ClipTol::Rel(1e-12));
        assert_eq!(p.values, vec![1.0, 1e-11]);
        assert_eq!(c, 1);
    }
}
