//! Field samplers for a given `τ`: full KL eigensolves or the reduced basis.
//!
//! Both implement [`PriorModel`], which exposes the Gaussian law of the sampler's own
//! coordinates (the full field, or reduced coordinates `θ_RB`) as Euclidean eigenpairs.

use faer::Mat;
use rand::Rng;
use std::sync::Arc;

use crate::covariance::{CovMatrix, GridCovariance, HyperParams, Kernel, DEFAULT_DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::kl::{eigs, kl_sample, KLBasis, Solver};
use crate::linalg::matvec;
use crate::mesh::FieldMesh;
use crate::rb::{rb_lift, reduced_eigs, ReducedBasis};
use crate::rng::normals;

/// Eigenpairs of a coordinate covariance: descending positive values, orthonormal columns.
#[derive(Debug, Clone)]
pub struct Decomp {
    pub values: Vec<f64>,
    pub vecs: Mat<f64>,
}

impl Decomp {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `sum_i sqrt(values_i) ξ_i vecs_i`.
    pub fn draw(&self, xi: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = self.values.iter().zip(xi).map(|(l, x)| l.sqrt() * x).collect();
        matvec(self.vecs.as_ref(), &c)
    }
}

/// A parameterised Gaussian prior on some coordinate vector, plus the map to the field.
pub trait PriorModel: Sync {
    /// Length of the coordinate vector.
    fn dim(&self) -> usize;
    fn decompose(&self, tau: HyperParams) -> Result<Decomp>;
    /// Field on the mesh for the given coordinates (mean added).
    fn to_field(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Coordinates and field of one draw at `tau`.
    fn sample_coords(&self, tau: HyperParams, rng: &mut dyn rand::RngCore) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.decompose(tau)?;
        let xi = normals(rng, d.rank());
        let x = d.draw(&xi);
        let f = self.to_field(&x)?;
        Ok((x, f))
    }
}

/// Full sampler: assemble `C(τ)` and solve for the leading `n_sto` eigenpairs.
#[derive(Debug, Clone)]
pub struct FullSampler {
    pub mesh: FieldMesh,
    pub kernel: Kernel,
    pub n_sto: usize,
    pub solver: Solver,
    pub dense_limit: usize,
    pub mean: Vec<f64>,
}

impl FullSampler {
    /// Zero mean, symmetry-adapted eigensolver.
    pub fn new(mesh: FieldMesh, kernel: Kernel, n_sto: usize) -> Result<Self> {
        kernel.validate()?;
        if n_sto == 0 || n_sto > mesh.n() {
            return Err(Error::invalid(format!("n_sto = {n_sto} must lie in 1..={}", mesh.n())));
        }
        let mean = vec![0.0; mesh.n()];
        Ok(FullSampler { mesh, kernel, n_sto, solver: Solver::Symmetric, dense_limit: DEFAULT_DENSE_LIMIT, mean })
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn basis(&self, tau: HyperParams) -> Result<KLBasis> {
        tau.validate()?;
        let cov = CovMatrix::MatrixFree(GridCovariance::from_kernel(&self.mesh, &self.kernel, tau));
        eigs(&cov, &self.mesh, self.n_sto, self.solver, self.dense_limit)
    }
}

/// One draw of the full sampler: `θ = m + Ψ ξ`.
pub fn full_sample<R: Rng + ?Sized>(s: &FullSampler, tau: HyperParams, rng: &mut R) -> Result<Vec<f64>> {
    let b = s.basis(tau)?;
    let xi = normals(rng, b.n_sto);
    kl_sample(&b, &s.mean, &xi)
}

impl PriorModel for FullSampler {
    fn dim(&self) -> usize {
        self.mesh.n()
    }

    /// Field covariance in Euclidean coordinates: values `λ/h²`, vectors `h ψ`.
    fn decompose(&self, tau: HyperParams) -> Result<Decomp> {
        let b = self.basis(tau)?;
        let h = self.mesh.h;
        let values = b.eigvals.iter().map(|l| l / (h * h)).collect();
        let mut vecs = b.eigvecs;
        for j in 0..vecs.ncols() {
            vecs.col_as_slice_mut(j).iter_mut().for_each(|v| *v *= h);
        }
        Ok(Decomp { values, vecs })
    }

    fn to_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::invalid("field length mismatch"));
        }
        Ok(x.iter().zip(&self.mean).map(|(a, b)| a + b).collect())
    }
}

/// Reduced-basis sampler.
#[derive(Debug, Clone)]
pub struct RbSampler {
    pub basis: Arc<ReducedBasis>,
    pub n_sto: usize,
    pub mean: Vec<f64>,
}

impl RbSampler {
    pub fn new(basis: Arc<ReducedBasis>, n_sto: usize) -> Result<Self> {
        if n_sto == 0 || n_sto > basis.n_rb {
            return Err(Error::invalid(format!("n_sto = {n_sto} must lie in 1..={}", basis.n_rb)));
        }
        let mean = vec![0.0; basis.n()];
        Ok(RbSampler { basis, n_sto, mean })
    }

    /// Same basis with every reduced eigenpair retained.
    pub fn full_rank(basis: Arc<ReducedBasis>) -> Result<Self> {
        let r = basis.n_rb;
        Self::new(basis, r)
    }
}

/// One reduced draw: `(θ_RB, θ = m + W θ_RB)`.
pub fn rb_sample<R: Rng + ?Sized>(s: &RbSampler, tau: HyperParams, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    let kl = reduced_eigs(&s.basis, tau, s.n_sto)?;
    let xi = normals(rng, kl.n_sto());
    let theta_rb = kl.sample(&xi)?;
    let theta = rb_lift(&s.basis, &s.mean, &theta_rb)?;
    Ok((theta_rb, theta))
}

impl PriorModel for RbSampler {
    fn dim(&self) -> usize {
        self.basis.n_rb
    }

    fn decompose(&self, tau: HyperParams) -> Result<Decomp> {
        let kl = reduced_eigs(&self.basis, tau, self.n_sto)?;
        Ok(Decomp { values: kl.eigvals, vecs: kl.vecs })
    }

    fn to_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        rb_lift(&self.basis, &self.mean, x)
    }
}

/// The same field for every `τ`; useful for checks and debugging.
#[derive(Debug, Clone)]
pub struct ConstantField(pub Vec<f64>);

impl PriorModel for ConstantField {
    fn dim(&self) -> usize {
        0
    }

    fn decompose(&self, _tau: HyperParams) -> Result<Decomp> {
        Ok(Decomp { values: Vec::new(), vecs: Mat::zeros(0, 0) })
    }

    fn to_field(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}
