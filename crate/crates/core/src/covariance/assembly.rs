//! Midpoint-rule covariance matrices on the uniform field mesh.
//!
//! On the uniform grid an entry depends only on the cell offset `(|di|, |dj|)`, so every
//! covariance matrix is described by an `n_side × n_side` table of offset values. Dense
//! assembly, matrix-free products and row panels all read from that table.

use faer::Mat;
use rayon::prelude::*;

use super::kernel::{HyperParams, Kernel};
use super::separable::SeparableKernel;
use crate::error::{Error, Result};
use crate::mesh::FieldMesh;

pub const DEFAULT_DENSE_LIMIT: usize = 8192;

/// Offset table of a stationary covariance on the uniform grid, already scaled by `h⁴`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCovariance {
    pub n_side: usize,
    /// `table[dj * n_side + di] = h⁴ c(h * hypot(di, dj))`.
    pub table: Vec<f64>,
}

impl GridCovariance {
    /// Builds the table from a radial function `c(z)`.
    pub fn from_radial(mesh: &FieldMesh, c: impl Fn(f64) -> f64) -> Self {
        let n = mesh.n_side;
        let h = mesh.h;
        let h4 = h * h * h * h;
        let mut table = vec![0.0; n * n];
        for dj in 0..n {
            for di in 0..=dj {
                let v = h4 * c(h * (di as f64).hypot(dj as f64));
                table[dj * n + di] = v;
                table[di * n + dj] = v;
            }
        }
        GridCovariance { n_side: n, table }
    }

    pub fn from_kernel(mesh: &FieldMesh, kernel: &Kernel, tau: HyperParams) -> Self {
        match kernel {
            Kernel::Linearized(s) => {
                let t = s.terms();
                Self::from_radial(mesh, |z| t.eval(tau.ell, tau.sigma, z))
            }
            k => Self::from_radial(mesh, |z| k.eval(tau, z)),
        }
    }

    pub fn n(&self) -> usize {
        self.n_side * self.n_side
    }

    #[inline]
    pub fn offset(&self, a: usize, b: usize) -> usize {
        let n = self.n_side;
        let (ia, ja) = (a % n, a / n);
        let (ib, jb) = (b % n, b / n);
        ja.abs_diff(jb) * n + ia.abs_diff(ib)
    }

    #[inline]
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.table[self.offset(a, b)]
    }

    pub fn dense(&self) -> Mat<f64> {
        let n = self.n();
        Mat::from_fn(n, n, |a, b| self.entry(a, b))
    }

    /// `y = C x` without storing `C`; O(N²) work, parallel over rows.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n_side;
        assert_eq!(x.len(), n * n);
        assert_eq!(y.len(), n * n);
        y.par_iter_mut().enumerate().for_each(|(a, ya)| {
            let (ia, ja) = (a % n, a / n);
            let mut s = 0.0;
            for jb in 0..n {
                let row = &self.table[ja.abs_diff(jb) * n..][..n];
                let xs = &x[jb * n..][..n];
                for ib in 0..n {
                    s += row[ia.abs_diff(ib)] * xs[ib];
                }
            }
            *ya = s;
        });
    }

    /// Rows `r0..r0+nr` of the dense matrix, as an `nr × N` block.
    pub fn panel(&self, r0: usize, nr: usize) -> Mat<f64> {
        let n = self.n();
        Mat::from_fn(nr, n, |a, b| self.entry(r0 + a, b))
    }

    /// `sum_k w_k table_k` for tables of equal size.
    pub fn combine(tables: &[GridCovariance], weights: &[f64]) -> Self {
        assert_eq!(tables.len(), weights.len());
        let n_side = tables[0].n_side;
        let mut table = vec![0.0; n_side * n_side];
        for (t, &w) in tables.iter().zip(weights) {
            for (o, v) in table.iter_mut().zip(&t.table) {
                *o += w * v;
            }
        }
        GridCovariance { n_side, table }
    }

    pub fn scaled(&self, s: f64) -> Self {
        GridCovariance { n_side: self.n_side, table: self.table.iter().map(|v| v * s).collect() }
    }
}

/// Dense or matrix-free covariance matrix on a field mesh.
#[derive(Debug, Clone)]
pub enum CovMatrix {
    Dense(Mat<f64>),
    MatrixFree(GridCovariance),
}

impl CovMatrix {
    pub fn n(&self) -> usize {
        match self {
            CovMatrix::Dense(m) => m.nrows(),
            CovMatrix::MatrixFree(g) => g.n(),
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            CovMatrix::Dense(m) => {
                let r = crate::linalg::matvec(m.as_ref(), x);
                y.copy_from_slice(&r);
            }
            CovMatrix::MatrixFree(g) => g.apply(x, y),
        }
    }

    pub fn to_dense(&self, dense_limit: usize) -> Result<Mat<f64>> {
        match self {
            CovMatrix::Dense(m) => Ok(m.clone()),
            CovMatrix::MatrixFree(g) => {
                check_dense(g.n(), dense_limit)?;
                Ok(g.dense())
            }
        }
    }
}

fn check_dense(n: usize, dense_limit: usize) -> Result<()> {
    if n > dense_limit {
        return Err(Error::invalid(format!(
            "dense covariance with {n} unknowns exceeds dense_limit {dense_limit}; use the matrix-free path"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Dense,
    MatrixFree,
}

/// `C_ij = h⁴ c(|x_i - x_j|)`.
pub fn assemble_cov(
    mesh: &FieldMesh,
    kernel: &Kernel,
    tau: HyperParams,
    repr: Representation,
    dense_limit: usize,
) -> Result<CovMatrix> {
    kernel.validate()?;
    tau.validate()?;
    let g = GridCovariance::from_kernel(mesh, kernel, tau);
    match repr {
        Representation::Dense => {
            check_dense(mesh.n(), dense_limit)?;
            Ok(CovMatrix::Dense(g.dense()))
        }
        Representation::MatrixFree => Ok(CovMatrix::MatrixFree(g)),
    }
}

/// Offset tables of the `h⁴ C_k` components, k = 1..L.
pub fn separable_tables(mesh: &FieldMesh, s: &SeparableKernel) -> Vec<GridCovariance> {
    let t = s.terms();
    (1..=t.len()).map(|k| GridCovariance::from_radial(mesh, |z| t.c_k(k, z))).collect()
}

pub fn assemble_separable_components(
    mesh: &FieldMesh,
    s: &SeparableKernel,
    repr: Representation,
    dense_limit: usize,
) -> Result<Vec<CovMatrix>> {
    super::kernel::check_nu(s.nu)?;
    let tables = separable_tables(mesh, s);
    match repr {
        Representation::Dense => {
            check_dense(mesh.n(), dense_limit)?;
            Ok(tables.iter().map(|g| CovMatrix::Dense(g.dense())).collect())
        }
        Representation::MatrixFree => Ok(tables.into_iter().map(CovMatrix::MatrixFree).collect()),
    }
}

/// The weights `F_k(tau)` matching [`separable_tables`].
pub fn separable_weights(s: &SeparableKernel, tau: HyperParams) -> Vec<f64> {
    let t = s.terms();
    (1..=t.len()).map(|k| t.f_k(k, tau.ell, tau.sigma)).collect()
}
