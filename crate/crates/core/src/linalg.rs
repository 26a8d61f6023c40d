//! Small dense helpers on top of faer.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

/// Eigenpairs sorted by descending eigenvalue; vectors stored column-wise.
#[derive(Debug, Clone)]
pub struct EigPairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl EigPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps the leading `k` pairs.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.values.len());
        self.values.truncate(k);
        let v = self.vectors.subcols(0, k).to_owned();
        self.vectors = v;
        self
    }

    /// `sum_i values[i] * v_i v_iᵀ`.
    pub fn reassemble(&self) -> Mat<f64> {
        let n = self.vectors.nrows();
        let k = self.values.len();
        let scaled = Mat::from_fn(n, k, |i, j| self.vectors[(i, j)] * self.values[j]);
        let mut out = Mat::zeros(n, n);
        matmul(out.as_mut(), Accum::Replace, scaled.as_ref(), self.vectors.transpose(), 1.0, Par::Seq);
        out
    }
}

/// Flips each column so its largest-magnitude entry (first one on ties) is positive.
pub fn fix_signs(v: &mut Mat<f64>) {
    for j in 0..v.ncols() {
        let col = v.col_as_slice_mut(j);
        let mut best = 0;
        let mut bmax = -1.0;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > bmax {
                bmax = x.abs();
                best = i;
            }
        }
        if col.get(best).is_some_and(|&x| x < 0.0) {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Full symmetric eigendecomposition, descending order, sign convention applied.
pub fn sym_eig_desc(a: MatRef<'_, f64>) -> Result<EigPairs> {
    let n = a.nrows();
    if n == 0 {
        return Ok(EigPairs { values: vec![], vectors: Mat::zeros(0, 0) });
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    let mut vectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    fix_signs(&mut vectors);
    Ok(EigPairs { values, vectors })
}

/// Eigenvalues only, descending.
pub fn sym_eigvals_desc(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let mut v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    v.reverse();
    Ok(v)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn frobenius(a: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

/// `a * b` with sequential faer kernels.
pub fn mul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// `aᵀ * b`.
pub fn mul_tn(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    mul(a.transpose(), b)
}

/// `y = a * x`.
pub fn matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            let c = a.col(j);
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += c[i] * xj;
            }
        }
    }
    y
}

/// `y = aᵀ * x`.
pub fn matvec_t(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| {
            let c = a.col(j);
            (0..a.nrows()).map(|i| c[i] * x[i]).sum()
        })
        .collect()
}

/// Largest singular value of a symmetric matrix (its spectral norm).
pub fn sym_spectral_norm(a: MatRef<'_, f64>) -> Result<f64> {
    let v = sym_eigvals_desc(a)?;
    Ok(v.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_sorted_and_signed() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, 3.0, 2.0][i] } else { 0.0 });
        let e = sym_eig_desc(a.as_ref()).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        for j in 0..3 {
            let c = e.vectors.col_as_slice(j);
            let m = c.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(m > 0.0);
        }
        let r = e.reassemble();
        assert!(frobenius((&r - &a).as_ref()) < 1e-14);
    }
}
