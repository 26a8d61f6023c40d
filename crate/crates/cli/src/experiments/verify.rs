//! Reduced against full sampling on the low-dimensional problem: pushforward moments of the
//! flow-cell outflow, evidence and posterior moments from nine field observations, and the
//! mean covariance error for several POD thresholds.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use faer::Mat;
use std::sync::Arc;

use rbgrf::covariance::{HyperParams, Kernel};
use rbgrf::fem::{observation_lattice, Bc, FemProblem, Source};
use rbgrf::io::write_csv;
use rbgrf::linalg::mul;
use rbgrf::mesh::FieldMesh;
use rbgrf::rb::{build_reduced_basis, reduced_eigs, ReducedBasis};
use rbgrf::rng::stream;
use rbgrf::uq::{
    evidence_from_draws, EvidenceEstimate, ForwardMap, BayesProblem, FullSampler, HyperPrior, PriorModel, RbSampler,
    Welford, WeightedDraw,
};

use super::{field_mesh, full_sampler, rel_err};
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{RunDir, Summary};

/// Chain id of the full-eigensolve reference, kept apart from the repetition ids.
pub const REFERENCE_CHAIN: u64 = 1 << 32;
/// Chain id of the parameter draws for the covariance error.
pub const COV_CHAIN: u64 = (1 << 32) + 1;

pub struct VerifySetup {
    pub fem: FemProblem,
    pub problem: BayesProblem,
}

impl VerifySetup {
    /// Flow cell on the FEM mesh; observations at the interior lattice of `[bayes]` with
    /// constant data (0.1 unless configured).
    pub fn new(cfg: &RunConfig, mesh: &FieldMesh) -> Result<Self> {
        let fem = FemProblem::new(cfg.mesh.fem_n_side, mesh, Bc::FlowCell, Source::Zero)?;
        let pts = observation_lattice(cfg.bayes.obs_lattice);
        let fwd = ForwardMap::field_at(mesh, &pts)?.with_scale(cfg.bayes.field_scale);
        let data = vec![cfg.bayes.data_value.unwrap_or(0.1); pts.len()];
        let problem = BayesProblem::new(fwd, data, cfg.bayes.noise_var, cfg.prior.resolve()?)?;
        Ok(VerifySetup { fem, problem })
    }
}

/// One hierarchical draw with its outflow and log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointDraw {
    pub ell: f64,
    pub sigma: f64,
    pub q: f64,
    pub log_w: f64,
}

/// Draw `i` uses the stream `(seed, chain, i)`: `τ` first, then the field.
pub fn joint_draws(setup: &VerifySetup, model: &dyn PriorModel, n: usize, seed: u64, chain: u64) -> Result<Vec<JointDraw>> {
    let prior = &setup.problem.prior;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, chain, i);
            let tau = prior.sample(&mut rng)?;
            let (_, theta) = model.sample_coords(tau, &mut rng)?;
            let p = setup.fem.solve(&theta)?;
            let q = setup.fem.outflow_qoi(&theta, &p)?;
            let log_w = -setup.problem.potential(&theta)?;
            Ok(JointDraw { ell: tau.ell, sigma: tau.sigma, q, log_w })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimates {
    pub mean_q: f64,
    pub var_q: f64,
    pub evidence: EvidenceEstimate,
}

pub fn estimates(draws: &[JointDraw]) -> Result<Estimates> {
    let mut w = Welford::default();
    draws.iter().for_each(|d| w.push(d.q));
    let wd: Vec<WeightedDraw> = draws.iter().map(|d| WeightedDraw { ell: d.ell, sigma: d.sigma, log_w: d.log_w }).collect();
    Ok(Estimates { mean_q: w.mean, var_q: w.variance(), evidence: evidence_from_draws(&wd)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelErrors {
    pub mean_q: f64,
    pub var_q: f64,
    pub evidence: f64,
    pub ell_mean: f64,
    pub ell_var: f64,
}

pub fn rel_errors(e: &Estimates, reference: &Estimates) -> RelErrors {
    RelErrors {
        mean_q: rel_err(e.mean_q, reference.mean_q),
        var_q: rel_err(e.var_q, reference.var_q),
        evidence: rel_err(e.evidence.z, reference.evidence.z),
        ell_mean: rel_err(e.evidence.ell_mean, reference.evidence.ell_mean),
        ell_var: rel_err(e.evidence.ell_var, reference.evidence.ell_var),
    }
}

/// `h² ‖C^{N_sto}(τ) − C^{RB,N_sto}(τ)‖_F` averaged over `n_draws` prior draws, one value per
/// basis. Both covariances are the truncated ones on cell values; the factor `h²` makes the
/// norm the Hilbert-Schmidt norm of the covariance operator.
pub fn mean_covariance_error(
    mesh: &FieldMesh,
    kernel: &Kernel,
    bases: &[Arc<ReducedBasis>],
    n_sto: usize,
    prior: &HyperPrior,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let full = FullSampler::new(mesh.clone(), kernel.clone(), n_sto)?;
    let h2 = mesh.h * mesh.h;
    let per_draw: Vec<Vec<f64>> = (0..n_draws as u64)
        .into_par_iter()
        .map(|i| {
            let tau = prior.sample(&mut stream(seed, COV_CHAIN, i))?;
            let c_full = full_cov(&full, tau)?;
            bases
                .iter()
                .map(|b| {
                    let kl = reduced_eigs(b, tau, n_sto.min(b.n_rb))?;
                    let f = mul(b.w.as_ref(), kl.psi.as_ref());
                    let c_rb = mul(f.as_ref(), f.as_ref().transpose());
                    let mut s = 0.0;
                    for j in 0..c_rb.ncols() {
                        for (a, r) in c_full.col_as_slice(j).iter().zip(c_rb.col_as_slice(j)) {
                            s += (a - r) * (a - r);
                        }
                    }
                    Ok(h2 * s.sqrt())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..bases.len()).map(|k| per_draw.iter().map(|v| v[k]).sum::<f64>() / n_draws as f64).collect())
}

fn full_cov(s: &FullSampler, tau: HyperParams) -> Result<Mat<f64>> {
    let d = s.decompose(tau)?;
    let mut a = d.vecs;
    for (j, l) in d.values.iter().enumerate() {
        a.col_as_slice_mut(j).iter_mut().for_each(|v| *v *= l.sqrt());
    }
    Ok(mul(a.as_ref(), a.as_ref().transpose()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResult {
    pub lambda_min: f64,
    pub n_rb: usize,
    pub reps: Vec<(Estimates, RelErrors)>,
    pub cov_error: Option<f64>,
}

pub fn run(cfg: &RunConfig, dir: &RunDir) -> Result<Summary> {
    let mesh = field_mesh(cfg)?;
    let setup = VerifySetup::new(cfg, &mesh)?;
    let n_sto = cfg.n_sto()?;
    let v = &cfg.verify;

    log::info!("reference: {} full samples", v.reference_samples);
    let full = full_sampler(cfg, &mesh, n_sto)?;
    let ref_draws = joint_draws(&setup, &full, v.reference_samples, cfg.seed, REFERENCE_CHAIN)?;
    let reference = estimates(&ref_draws)?;

    let plan = cfg.offline.plan()?;
    let mut results = Vec::new();
    let mut bases = Vec::new();
    for &lm in &v.lambda_mins {
        let opts = rbgrf::rb::OfflineOptions { lambda_min: lm, ..cfg.offline.options(&cfg.kernel)? };
        let basis = Arc::new(build_reduced_basis(&mesh, &plan, &opts)?);
        let model = RbSampler::new(basis.clone(), n_sto.min(basis.n_rb))?;
        let mut reps = Vec::new();
        for r in 0..cfg.mc.repetitions {
            let e = estimates(&joint_draws(&setup, &model, cfg.mc.n_samples, cfg.seed, r as u64)?)?;
            reps.push((e, rel_errors(&e, &reference)));
        }
        log::info!("lambda_min {lm:e}: n_rb {}, errors {:?}", basis.n_rb, reps[0].1);
        results.push(ThresholdResult { lambda_min: lm, n_rb: basis.n_rb, reps, cov_error: None });
        bases.push(basis);
    }
    if v.cov_draws > 0 {
        let errs = mean_covariance_error(&mesh, &cfg.kernel.exact(), &bases, n_sto, &setup.problem.prior, v.cov_draws, cfg.seed)?;
        results.iter_mut().zip(errs).for_each(|(r, e)| r.cov_error = Some(e));
    }

    let rows = results.iter().flat_map(|t| {
        t.reps.iter().enumerate().map(move |(r, (_, e))| {
            vec![t.lambda_min, r as f64, t.n_rb as f64, e.mean_q, e.var_q, e.evidence, e.ell_mean, e.ell_var, t.cov_error.unwrap_or(f64::NAN)]
        })
    });
    write_csv(
        &dir.path("verify.csv"),
        &["lambda_min", "rep", "n_rb", "rel_mean_q", "rel_var_q", "rel_evidence", "rel_ell_mean", "rel_ell_var", "cov_error"],
        rows,
    )?;
    write_csv(
        &dir.path("reference_draws.csv"),
        &["sample", "ell", "sigma", "q", "log_w"],
        ref_draws.iter().enumerate().map(|(i, d)| vec![i as f64, d.ell, d.sigma, d.q, d.log_w]),
    )?;
    let first = &results[0];
    let line = format!(
        "verify_52: reference Q mean {:.5}, Z {:.4e}; lambda_min {:e}: rel errors mean {:.2e}, var {:.2e}, Z {:.2e}, ell {:.2e}",
        reference.mean_q,
        reference.evidence.z,
        first.lambda_min,
        first.reps[0].1.mean_q,
        first.reps[0].1.var_q,
        first.reps[0].1.evidence,
        first.reps[0].1.ell_mean
    );
    Ok(Summary::new(cfg, line, json!({ "reference": reference, "thresholds": results })))
}
