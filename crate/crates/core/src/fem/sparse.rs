//! Compressed sparse rows plus the two solvers used for the stiffness system.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Pattern from sorted, deduplicated column lists.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows {
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        Csr { n, row_ptr, cols, vals: vec![0.0; nnz] }
    }

    /// Position of `(i, j)` in `vals`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        r.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&j, v)| v * x[j]).sum();
        }
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.cols[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.position(i, i).map_or(0.0, |p| self.vals[p])).collect()
    }
}

/// Banded Cholesky of a symmetric positive definite CSR matrix, then two triangular solves.
pub fn band_cholesky_solve(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let bw = a.bandwidth();
    let w = bw + 1;
    // row i holds L[i, i - k] at l[i * w + k]
    let mut l = vec![0.0; n * w];
    for i in 0..n {
        for p in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.cols[p];
            if j <= i {
                l[i * w + (i - j)] = a.vals[p];
            }
        }
    }
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            let mut s = l[i * w + (i - j)];
            let m0 = lo.max(j.saturating_sub(bw));
            for m in m0..j {
                s -= l[i * w + (i - m)] * l[j * w + (j - m)];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::numerical(format!("stiffness matrix not positive definite at row {i}")));
                }
                l[i * w] = s.sqrt();
            } else {
                l[i * w + (i - j)] = s / l[j * w];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let mut s = y[i];
        for m in lo..i {
            s -= l[i * w + (i - m)] * y[m];
        }
        y[i] = s / l[i * w];
    }
    for i in (0..n).rev() {
        let hi = (i + bw).min(n - 1);
        let mut s = y[i];
        for m in i + 1..=hi {
            s -= l[m * w + (m - i)] * y[m];
        }
        y[i] = s / l[i * w];
    }
    Ok(y)
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`.
pub fn cg_solve(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let dinv: Vec<f64> = a.diag().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        a.apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::numerical("conjugate gradients met a nonpositive curvature"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::numerical(format!("conjugate gradients did not converge in {max_iter} iterations")))
}
