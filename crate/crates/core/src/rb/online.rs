use faer::Mat;

use super::pod::Pod;
use crate::covariance::{psd_clip, ClipTol, HyperParams, SeparableKernel, Terms};
use crate::error::{Error, Result};
use crate::linalg::{matvec, mul_tn, sym_eig_desc, EigPairs};

/// Offline product: basis `W`, reduced Gramian and projected separable components.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    /// `N × n_rb`, M-orthonormal.
    pub w: Mat<f64>,
    pub n_rb: usize,
    pub pod_sv: Vec<f64>,
    pub lambda_min: f64,
    /// `Wᵀ M W`, identity up to rounding.
    pub m_rb: Mat<f64>,
    /// `Wᵀ C_k W`, k = 1..L.
    pub components: Vec<Mat<f64>>,
    pub kernel: SeparableKernel,
    pub snapshot_ells: Vec<f64>,
    pub snapshot_n_sto: usize,
    pub n_side: usize,
    pub snapshot_kernel: String,
    terms: Terms,
}

impl ReducedBasis {
    pub fn new(
        pod: Pod,
        components: Vec<Mat<f64>>,
        kernel: SeparableKernel,
        snapshot_ells: Vec<f64>,
        snapshot_n_sto: usize,
        n_side: usize,
        snapshot_kernel: String,
    ) -> Self {
        let h = 1.0 / n_side as f64;
        let mut m_rb = mul_tn(pod.w.as_ref(), pod.w.as_ref());
        for j in 0..m_rb.ncols() {
            for i in 0..m_rb.nrows() {
                m_rb[(i, j)] *= h * h;
            }
        }
        ReducedBasis {
            n_rb: pod.w.ncols(),
            w: pod.w,
            pod_sv: pod.sv,
            lambda_min: pod.lambda_min,
            m_rb,
            components,
            terms: kernel.terms(),
            kernel,
            snapshot_ells,
            snapshot_n_sto,
            n_side,
            snapshot_kernel,
        }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// Leading `n` POD vectors only. The projected components are principal blocks of the
    /// full ones, so nothing is recomputed.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_rb {
            return Err(Error::invalid(format!("cannot truncate a basis of {} vectors to {n}", self.n_rb)));
        }
        let block = |m: &Mat<f64>| Mat::from_fn(n, n, |i, j| m[(i, j)]);
        Ok(ReducedBasis {
            w: Mat::from_fn(self.n(), n, |i, j| self.w[(i, j)]),
            n_rb: n,
            pod_sv: self.pod_sv[..n].to_vec(),
            m_rb: block(&self.m_rb),
            components: self.components.iter().map(block).collect(),
            ..self.clone()
        })
    }

    pub fn weights(&self, tau: HyperParams) -> Vec<f64> {
        (1..=self.terms.len()).map(|k| self.terms.f_k(k, tau.ell, tau.sigma)).collect()
    }

    /// `C^RB(τ) = sum_k F_k(τ) C_k^RB`.
    pub fn reduced_cov(&self, tau: HyperParams) -> Mat<f64> {
        let r = self.n_rb;
        let f = self.weights(tau);
        let mut c = Mat::zeros(r, r);
        for (fk, ck) in f.iter().zip(&self.components) {
            for j in 0..r {
                let dst = c.col_as_slice_mut(j);
                for (d, s) in dst.iter_mut().zip(ck.col_as_slice(j)) {
                    *d += fk * s;
                }
            }
        }
        c
    }
}

/// Leading reduced eigenpairs at one parameter point.
#[derive(Debug, Clone)]
pub struct ReducedKL {
    pub eigvals: Vec<f64>,
    /// `n_rb × n`, orthonormal reduced eigenvectors.
    pub vecs: Mat<f64>,
    /// `vecs · diag(sqrt(eigvals))`.
    pub psi: Mat<f64>,
    /// Fewer than the requested number of positive eigenvalues existed.
    pub deficient: bool,
    pub clipped: usize,
}

impl ReducedKL {
    fn from_pairs(pairs: EigPairs, n_sto: usize) -> Self {
        let (pairs, clipped) = psd_clip(pairs, ClipTol::default());
        let deficient = pairs.len() < n_sto;
        if deficient {
            log::warn!("reduced problem has only {} positive eigenvalues, {n_sto} requested", pairs.len());
        }
        let pairs = pairs.truncate(n_sto);
        let r = pairs.vectors.nrows();
        let psi = Mat::from_fn(r, pairs.len(), |i, j| pairs.vectors[(i, j)] * pairs.values[j].sqrt());
        ReducedKL { eigvals: pairs.values, vecs: pairs.vectors, psi, deficient, clipped }
    }

    pub fn n_sto(&self) -> usize {
        self.eigvals.len()
    }

    /// `θ_RB = Ψ^RB ξ`.
    pub fn sample(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.n_sto() {
            return Err(Error::invalid("reduced sample: length mismatch"));
        }
        Ok(matvec(self.psi.as_ref(), xi))
    }
}

pub fn reduced_eigs(basis: &ReducedBasis, tau: HyperParams, n_sto: usize) -> Result<ReducedKL> {
    if n_sto == 0 || n_sto > basis.n_rb {
        return Err(Error::invalid(format!("n_sto = {n_sto} must lie in 1..={}", basis.n_rb)));
    }
    tau.validate()?;
    let c = basis.reduced_cov(tau);
    Ok(ReducedKL::from_pairs(sym_eig_desc(c.as_ref())?, n_sto))
}

/// Same problem from an already projected `Wᵀ C(τ) W`, bypassing the components.
pub fn reduced_eigs_direct(projected: &Mat<f64>, n_sto: usize) -> Result<ReducedKL> {
    if n_sto == 0 || n_sto > projected.nrows() {
        return Err(Error::invalid("n_sto out of range"));
    }
    Ok(ReducedKL::from_pairs(sym_eig_desc(projected.as_ref())?, n_sto))
}

/// `θ = mean + W θ_RB`.
pub fn rb_lift(basis: &ReducedBasis, mean: &[f64], theta_rb: &[f64]) -> Result<Vec<f64>> {
    if theta_rb.len() != basis.n_rb || mean.len() != basis.n() {
        return Err(Error::invalid(format!(
            "rb_lift: expected lengths {} and {}, got {} and {}",
            basis.n_rb,
            basis.n(),
            theta_rb.len(),
            mean.len()
        )));
    }
    let mut t = matvec(basis.w.as_ref(), theta_rb);
    for (x, m) in t.iter_mut().zip(mean) {
        *x += m;
    }
    Ok(t)
}
