use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prior::HyperPrior;
use super::samplers::PriorModel;
use crate::error::{Error, Result};
use crate::fem::{observe, FemProblem};
use crate::mesh::FieldMesh;
use crate::rng::stream;

/// Eigenvalues at or below this fraction of the largest are ignored by the reduced density.
pub const LOGPDF_REL_CLIP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum ForwardMap {
    /// `G(θ)` = `scale` times the field values in the given cells.
    FieldObserve { cells: Vec<usize>, scale: f64 },
    /// `G(θ)` = PDE solution at the given points.
    PdeObserve { fem: Box<FemProblem>, points: Vec<[f64; 2]> },
}

impl ForwardMap {
    /// Field cells containing `points`, by the `floor(x / h)` rule.
    pub fn field_at(mesh: &FieldMesh, points: &[[f64; 2]]) -> Result<Self> {
        let cells = points.iter().map(|&x| mesh.locate(x)).collect::<Result<_>>()?;
        Ok(ForwardMap::FieldObserve { cells, scale: 1.0 })
    }

    /// Multiplies field observations by `s`; `h` turns M-normalised KL modes into
    /// Euclidean-normalised ones. No effect on PDE observations.
    pub fn with_scale(self, s: f64) -> Self {
        match self {
            ForwardMap::FieldObserve { cells, .. } => ForwardMap::FieldObserve { cells, scale: s },
            other => other,
        }
    }

    pub fn n_obs(&self) -> usize {
        match self {
            ForwardMap::FieldObserve { cells, .. } => cells.len(),
            ForwardMap::PdeObserve { points, .. } => points.len(),
        }
    }

    pub fn apply(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match self {
            ForwardMap::FieldObserve { cells, scale } => cells
                .iter()
                .map(|&c| {
                    theta.get(c).map(|v| scale * v).ok_or_else(|| Error::invalid("observation cell outside the field"))
                })
                .collect(),
            ForwardMap::PdeObserve { fem, points } => {
                let p = fem.solve(theta)?;
                observe(&fem.mesh, &p, points)
            }
        }
    }
}

/// Data `y`, noise `Γ = γ² I`, forward map and hyperprior.
#[derive(Debug, Clone)]
pub struct BayesProblem {
    pub forward: ForwardMap,
    pub data: Vec<f64>,
    pub noise_var: f64,
    pub prior: HyperPrior,
}

impl BayesProblem {
    pub fn new(forward: ForwardMap, data: Vec<f64>, noise_var: f64, prior: HyperPrior) -> Result<Self> {
        if let ForwardMap::FieldObserve { scale, .. } = &forward {
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(Error::invalid("field observation scale must be positive"));
            }
        }
        if !(noise_var > 0.0) {
            return Err(Error::invalid("noise variance must be positive"));
        }
        if data.len() != forward.n_obs() {
            return Err(Error::invalid(format!("{} data values for {} observations", data.len(), forward.n_obs())));
        }
        prior.validate()?;
        Ok(BayesProblem { forward, data, noise_var, prior })
    }

    pub fn potential(&self, theta: &[f64]) -> Result<f64> {
        potential(self, theta)
    }
}

/// `Φ(θ) = ½ |G(θ) − y|² / γ²`.
pub fn potential(problem: &BayesProblem, theta: &[f64]) -> Result<f64> {
    let g = problem.forward.apply(theta)?;
    let r2: f64 = g.iter().zip(&problem.data).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(0.5 * r2 / problem.noise_var)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEstimate {
    pub n: usize,
    pub z: f64,
    pub log_z: f64,
    pub ell_mean: f64,
    pub ell_var: f64,
    pub sigma_mean: f64,
    pub sigma_var: f64,
    /// Kish effective sample size of the weights.
    pub ess: f64,
}

/// Importance sampling with the prior as proposal: weights `exp(−Φ)`, `Z` their mean,
/// posterior moments of `ℓ` and `σ` self-normalised.
pub fn importance_evidence(
    problem: &BayesProblem,
    model: &dyn PriorModel,
    n_samples: usize,
    seed: u64,
    chain: u64,
) -> Result<EvidenceEstimate> {
    importance_evidence_with(&problem.prior, model, |t| problem.potential(t), n_samples, seed, chain)
}

/// Same estimator for an arbitrary potential.
pub fn importance_evidence_with<P>(
    prior: &HyperPrior,
    model: &dyn PriorModel,
    phi: P,
    n_samples: usize,
    seed: u64,
    chain: u64,
) -> Result<EvidenceEstimate>
where
    P: Fn(&[f64]) -> Result<f64> + Sync,
{
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let draws: Vec<WeightedDraw> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, chain, i);
            let tau = prior.sample(&mut rng)?;
            let (_, theta) = model.sample_coords(tau, &mut rng)?;
            Ok(WeightedDraw { ell: tau.ell, sigma: tau.sigma, log_w: -phi(&theta)? })
        })
        .collect::<Result<_>>()?;
    evidence_from_draws(&draws)
}

/// One prior draw with its log importance weight `−Φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedDraw {
    pub ell: f64,
    pub sigma: f64,
    pub log_w: f64,
}

/// Evidence and self-normalised posterior moments from prior draws, in log-sum-exp form.
pub fn evidence_from_draws(draws: &[WeightedDraw]) -> Result<EvidenceEstimate> {
    if draws.is_empty() {
        return Err(Error::invalid("need at least one sample"));
    }
    let lmax = draws.iter().map(|d| d.log_w).fold(f64::NEG_INFINITY, f64::max);
    if !lmax.is_finite() {
        return Err(Error::numerical("all importance weights vanish"));
    }
    let w: Vec<f64> = draws.iter().map(|d| (d.log_w - lmax).exp()).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let log_z = lmax + sw.ln() - (draws.len() as f64).ln();
    let moments = |f: fn(&WeightedDraw) -> f64| {
        let m = draws.iter().zip(&w).map(|(d, wi)| wi * f(d)).sum::<f64>() / sw;
        let v = draws.iter().zip(&w).map(|(d, wi)| wi * (f(d) - m).powi(2)).sum::<f64>() / sw;
        (m, v)
    };
    let (ell_mean, ell_var) = moments(|d| d.ell);
    let (sigma_mean, sigma_var) = moments(|d| d.sigma);
    Ok(EvidenceEstimate {
        n: draws.len(),
        z: log_z.exp(),
        log_z,
        ell_mean,
        ell_var,
        sigma_mean,
        sigma_var,
        ess: sw * sw / sw2,
    })
}

/// Log pseudo-density of `x` under `N(mean, V diag(λ) Vᵀ)` restricted to the span of the
/// columns of `V` whose eigenvalue exceeds `rel_clip · λ_max`. The residual component outside
/// that span is ignored. Returns `-inf` if no eigenvalue survives.
pub fn gaussian_logpdf_reduced(x: &[f64], mean: &[f64], eigvals: &[f64], vecs: &Mat<f64>, rel_clip: f64) -> Result<f64> {
    let n = x.len();
    if mean.len() != n || vecs.nrows() != n || vecs.ncols() != eigvals.len() {
        return Err(Error::invalid("reduced log-density: dimension mismatch"));
    }
    let lmax = eigvals.iter().cloned().fold(0.0f64, f64::max);
    if !(lmax > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let thr = rel_clip * lmax;
    let r: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut acc = 0.0;
    for (i, &l) in eigvals.iter().enumerate() {
        if l > thr {
            let c: f64 = vecs.col_as_slice(i).iter().zip(&r).map(|(v, ri)| v * ri).sum();
            acc -= 0.5 * (c * c / l + ln2pi + l.ln());
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uq::samplers::ConstantField;

    fn scalar_problem(y: f64, gamma2: f64) -> BayesProblem {
        let prior = HyperPrior::fixed_sigma(0.3, 1.0).unwrap();
        BayesProblem::new(ForwardMap::FieldObserve { cells: vec![0], scale: 1.0 }, vec![y], gamma2, prior).unwrap()
    }

    #[test]
    fn potential_arithmetic() {
        let p = scalar_problem(0.0, 1.0);
        assert_eq!(p.potential(&[1.0]).unwrap(), 0.5);
        assert_eq!(scalar_problem(0.3, 0.1).potential(&[0.3]).unwrap(), 0.0);
        let mut q = scalar_problem(0.0, 1.0);
        q.forward = q.forward.with_scale(0.5);
        assert_eq!(q.potential(&[1.0]).unwrap(), 0.125);
    }

    #[test]
    fn flat_likelihood_gives_unit_evidence() {
        let prior = HyperPrior::fixed_sigma(0.3, 1.0).unwrap();
        let e = importance_evidence_with(&prior, &ConstantField(vec![0.0]), |_| Ok(0.0), 4000, 2, 0).unwrap();
        assert!((e.z - 1.0).abs() < 1e-12);
        assert!((e.ess - 4000.0).abs() < 1e-6);
        // prior mean of ell when 1/ell ~ U[a, b]: ln(b/a) / (b - a)
        let (a, b) = prior.inv_ell_range();
        let m = (b / a).ln() / (b - a);
        assert!((e.ell_mean - m).abs() < 0.02);
    }

    #[test]
    fn scalar_logpdf() {
        let v = Mat::from_fn(1, 1, |_, _| 1.0);
        let l = gaussian_logpdf_reduced(&[0.0], &[0.0], &[1.0], &v, LOGPDF_REL_CLIP).unwrap();
        assert!((l + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        let e = gaussian_logpdf_reduced(&[0.0], &[0.0], &[0.0], &v, LOGPDF_REL_CLIP).unwrap();
        assert_eq!(e, f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_mismatched_data() {
        let prior = HyperPrior::fixed_sigma(0.3, 1.0).unwrap();
        assert!(BayesProblem::new(ForwardMap::FieldObserve { cells: vec![0, 1], scale: 1.0 }, vec![0.0], 1.0, prior).is_err());
        assert!(BayesProblem::new(ForwardMap::FieldObserve { cells: vec![0], scale: 1.0 }, vec![0.0], 0.0, prior).is_err());
        assert!(BayesProblem::new(ForwardMap::FieldObserve { cells: vec![0], scale: 0.0 }, vec![0.0], 1.0, prior).is_err());
    }
}
