//! Karhunen-Loève eigenproblems on the field mesh: eigensolvers, truncation and sampling.
//!
//! The Gramian is `M = h² I`, so `C ψ = λ M ψ` is solved as `(C / h²) φ = λ φ` with
//! Euclidean-orthonormal `φ` and `ψ = φ / h`.

pub mod lanczos;
pub mod symmetry;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::covariance::{CovMatrix, GridCovariance};
use crate::error::{Error, Result};
use crate::linalg::{sym_eig_desc, EigPairs};
use crate::mesh::FieldMesh;
pub use lanczos::{lanczos, LanczosOptions, LanczosResult};
pub use symmetry::{grid_eigs, grid_eigvals};

/// Leading eigenpairs of the covariance pencil `(C, M)`.
#[derive(Debug, Clone)]
pub struct KLBasis {
    /// Descending, strictly positive.
    pub eigvals: Vec<f64>,
    /// `N × n_sto`, M-orthonormal columns.
    pub eigvecs: Mat<f64>,
    pub n_sto: usize,
    /// `sum_{i <= N} λ_i`, exact via `trace(M⁻¹ C)`.
    pub trace_total: f64,
    pub n_side: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Solver {
    /// Dense below `dense_limit` unknowns, Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos(LanczosOptions),
    /// Symmetry-adapted exact solve; needs a matrix-free grid covariance.
    Symmetric,
}

fn trace_of(cov: &CovMatrix) -> f64 {
    match cov {
        CovMatrix::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)]).sum(),
        CovMatrix::MatrixFree(g) => g.table[0] * g.n() as f64,
    }
}

fn into_basis(mesh: &FieldMesh, mut pairs: EigPairs, trace_total: f64) -> Result<KLBasis> {
    let n_pos = pairs.values.iter().take_while(|&&v| v > 0.0).count();
    if n_pos < pairs.len() {
        log::warn!("discarding {} nonpositive eigenvalues", pairs.len() - n_pos);
        pairs = pairs.truncate(n_pos);
    }
    if pairs.is_empty() {
        return Err(Error::numerical("covariance has no positive eigenvalues"));
    }
    let inv_h = 1.0 / mesh.h;
    let mut eigvecs = pairs.vectors;
    for j in 0..eigvecs.ncols() {
        eigvecs.col_as_slice_mut(j).iter_mut().for_each(|x| *x *= inv_h);
    }
    Ok(KLBasis { n_sto: pairs.values.len(), eigvals: pairs.values, eigvecs, trace_total, n_side: mesh.n_side })
}

/// Leading `k` eigenpairs of `C ψ = λ M ψ`.
pub fn eigs(cov: &CovMatrix, mesh: &FieldMesh, k: usize, solver: Solver, dense_limit: usize) -> Result<KLBasis> {
    let n = cov.n();
    if n != mesh.n() {
        return Err(Error::invalid("covariance and mesh sizes differ"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("requested {k} eigenpairs with N = {n}")));
    }
    let s = 1.0 / (mesh.h * mesh.h);
    let trace_total = trace_of(cov) * s;
    let solver = match solver {
        Solver::Auto if n <= dense_limit => Solver::Dense,
        Solver::Auto => Solver::Lanczos(LanczosOptions::default()),
        x => x,
    };
    let pairs = match solver {
        Solver::Dense => {
            let d = cov.to_dense(dense_limit)?;
            let a = Mat::from_fn(n, n, |i, j| d[(i, j)] * s);
            sym_eig_desc(a.as_ref())?.truncate(k)
        }
        Solver::Lanczos(opts) => {
            let r = lanczos(
                |x, y| {
                    cov.apply(x, y);
                    y.iter_mut().for_each(|v| *v *= s);
                },
                n,
                k,
                opts,
            )?;
            log::debug!("lanczos: {} restarts, {} products", r.restarts, r.matvecs);
            r.pairs
        }
        Solver::Symmetric => match cov {
            CovMatrix::MatrixFree(g) => grid_eigs(g, s, k)?,
            CovMatrix::Dense(_) => {
                return Err(Error::invalid("symmetric solver needs the matrix-free grid covariance"))
            }
        },
        Solver::Auto => unreachable!(),
    };
    into_basis(mesh, pairs, trace_total)
}

/// Exact leading eigenpairs through the symmetry-adapted solver.
pub fn eigs_grid(g: &GridCovariance, mesh: &FieldMesh, k: usize) -> Result<KLBasis> {
    if k == 0 || k > mesh.n() {
        return Err(Error::invalid(format!("requested {k} eigenpairs with N = {}", mesh.n())));
    }
    let s = 1.0 / (mesh.h * mesh.h);
    into_basis(mesh, grid_eigs(g, s, k)?, g.table[0] * g.n() as f64 * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    #[default]
    All,
    PerTau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRule {
    pub a: f64,
    pub mode: TruncationMode,
}

impl Default for TruncationRule {
    fn default() -> Self {
        TruncationRule { a: 0.9, mode: TruncationMode::All }
    }
}

/// Leading eigenvalues at one parameter point together with the full trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub total: f64,
}

impl Spectrum {
    pub fn full(values: Vec<f64>) -> Self {
        let total = values.iter().sum();
        Spectrum { values, total }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NSto {
    All(usize),
    PerTau(Vec<usize>),
}

/// Smallest `N'` whose leading eigenvalues capture a fraction `A` of the total variance.
pub fn select_truncation(spectra: &[Spectrum], rule: TruncationRule) -> Result<NSto> {
    if !(rule.a > 0.0 && rule.a <= 1.0) {
        return Err(Error::invalid(format!("variance fraction must lie in (0, 1], got {}", rule.a)));
    }
    if spectra.is_empty() {
        return Err(Error::invalid("no spectra given"));
    }
    let mut per = Vec::with_capacity(spectra.len());
    for sp in spectra {
        let target = rule.a * sp.total;
        let mut acc = 0.0;
        let mut found = None;
        for (i, v) in sp.values.iter().enumerate() {
            acc += v;
            // relative slack so A = 1 terminates despite rounding in the running sum
            if acc >= target * (1.0 - 1e-12) {
                found = Some(i + 1);
                break;
            }
        }
        match found {
            Some(n) => per.push(n),
            None => {
                return Err(Error::invalid(format!(
                    "{} eigenvalues capture only {:.4} of the variance; need more",
                    sp.values.len(),
                    acc / sp.total
                )))
            }
        }
    }
    Ok(match rule.mode {
        TruncationMode::All => NSto::All(*per.iter().max().unwrap()),
        TruncationMode::PerTau => NSto::PerTau(per),
    })
}

/// `θ = mean + sum_i sqrt(λ_i) ξ_i ψ_i`.
pub fn kl_sample(basis: &KLBasis, mean: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let n = basis.eigvecs.nrows();
    if xi.len() != basis.n_sto || mean.len() != n {
        return Err(Error::invalid(format!(
            "kl_sample: expected xi of length {} and mean of length {n}, got {} and {}",
            basis.n_sto,
            xi.len(),
            mean.len()
        )));
    }
    let mut theta = mean.to_vec();
    for (i, (&l, &x)) in basis.eigvals.iter().zip(xi).enumerate() {
        let c = l.sqrt() * x;
        if c != 0.0 {
            for (t, v) in theta.iter_mut().zip(basis.eigvecs.col_as_slice(i)) {
                *t += c * v;
            }
        }
    }
    Ok(theta)
}

/// Expected squared truncation error, `full_trace - sum_{i <= n_sto} λ_i`.
pub fn truncation_mse(basis: &KLBasis, full_trace: f64) -> f64 {
    let kept: f64 = basis.eigvals.iter().sum();
    let r = full_trace - kept;
    if r < 0.0 {
        log::warn!("negative truncation error {r:e} clamped to zero");
        0.0
    } else {
        r
    }
}

/// `L ξ` with `L Lᵀ = C`; retries once with a diagonal jitter of `1e-12 trace(C) / N`.
pub fn cholesky_sample(c: &Mat<f64>, xi: &[f64]) -> Result<Vec<f64>> {
    let n = c.nrows();
    if xi.len() != n {
        return Err(Error::invalid("cholesky_sample: length mismatch"));
    }
    let l = match c.llt(Side::Lower) {
        Ok(f) => f.L().to_owned(),
        Err(_) => {
            let tr: f64 = (0..n).map(|i| c[(i, i)]).sum();
            let jitter = 1e-12 * tr / n as f64;
            let cj = Mat::from_fn(n, n, |i, j| c[(i, j)] + if i == j { jitter } else { 0.0 });
            cj.llt(Side::Lower)
                .map_err(|e| Error::numerical(format!("cholesky failed after jitter: {e:?}")))?
                .L()
                .to_owned()
        }
    };
    let mut out = vec![0.0; n];
    for j in 0..n {
        let x = xi[j];
        for i in j..n {
            out[i] += l[(i, j)] * x;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{assemble_cov, HyperParams, Kernel, Representation};
    use crate::mesh::build_field_mesh;

    #[test]
    fn one_cell() {
        let m = build_field_mesh(1).unwrap();
        let c = assemble_cov(&m, &Kernel::Exponential, HyperParams::new(0.5, 1.0), Representation::Dense, 10).unwrap();
        let b = eigs(&c, &m, 1, Solver::Dense, 10).unwrap();
        assert!((b.eigvals[0] - 1.0).abs() < 1e-15);
        assert!((b.eigvecs[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(eigs(&c, &m, 2, Solver::Dense, 10).is_err());
    }

    #[test]
    fn truncation_examples() {
        let r = TruncationRule { a: 0.69, mode: TruncationMode::All };
        assert_eq!(select_truncation(&[Spectrum::full(vec![4.0, 3.0, 2.0, 1.0])], r).unwrap(), NSto::All(2));
        let r = TruncationRule { a: 1.0, mode: TruncationMode::All };
        assert_eq!(select_truncation(&[Spectrum::full(vec![4.0, 3.0, 2.0, 1.0])], r).unwrap(), NSto::All(4));
        let r = TruncationRule { a: 0.0, mode: TruncationMode::All };
        assert!(select_truncation(&[Spectrum::full(vec![1.0])], r).is_err());
        let r = TruncationRule { a: 0.5, mode: TruncationMode::PerTau };
        let s = [Spectrum::full(vec![4.0, 3.0, 2.0, 1.0]), Spectrum::full(vec![1.0, 1.0, 1.0, 1.0])];
        assert_eq!(select_truncation(&s, r).unwrap(), NSto::PerTau(vec![2, 2]));
    }

    fn toy_basis(vals: &[f64]) -> KLBasis {
        let n = vals.len();
        KLBasis {
            eigvals: vals.to_vec(),
            eigvecs: Mat::from_fn(n, n, |i, j| (i == j) as u8 as f64),
            n_sto: n,
            trace_total: vals.iter().sum(),
            n_side: 0,
        }
    }

    #[test]
    fn mse_examples() {
        let b = toy_basis(&[4.0, 3.0]);
        assert_eq!(truncation_mse(&b, 10.0), 3.0);
        assert_eq!(truncation_mse(&b, 7.0), 0.0);
        assert_eq!(truncation_mse(&b, 6.9), 0.0);
    }

    #[test]
    fn sample_examples() {
        let b = toy_basis(&[4.0]);
        let t = kl_sample(&b, &[1.0], &[0.0]).unwrap();
        assert_eq!(t, vec![1.0]);
        let t = kl_sample(&b, &[1.0], &[1.0]).unwrap();
        assert_eq!(t, vec![3.0]);
        assert!(kl_sample(&b, &[1.0], &[1.0, 2.0]).is_err());
        let c = Mat::from_fn(1, 1, |_, _| 4.0);
        assert_eq!(cholesky_sample(&c, &[1.0]).unwrap(), vec![2.0]);
    }
}
