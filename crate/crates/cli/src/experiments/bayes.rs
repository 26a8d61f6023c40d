//! Hierarchical inversion with the reduced-basis Gibbs sampler, from PDE observations
//! (Dirichlet problem with nine Gaussian sources) or from direct field observations.

use serde::Serialize;
use serde_json::json;

use rbgrf::covariance::HyperParams;
use rbgrf::fem::{observation_lattice, Bc, FemProblem, Source};
use rbgrf::io::write_csv;
use rbgrf::mesh::FieldMesh;
use rbgrf::rng::{normals, stream};
use rbgrf::uq::{
    chain_diagnostics, full_sample, run_chains, write_chain_csv, BayesProblem, Chain, ChainConfig, ChainDiagnostics,
    ChainSummary, ForwardMap, HyperPrior, PriorModel,
};

use super::{field_mesh, full_sampler, prior_model};
use crate::config::{Experiment, RunConfig};
use crate::error::Result;
use crate::output::{RunDir, Summary};

/// Chain id of the synthetic truth and its data noise.
pub const TRUTH_CHAIN: u64 = u64::MAX;

/// Synthetic data problem: a full KL draw at the configured truth, observed and perturbed.
pub struct Synthetic {
    pub problem: BayesProblem,
    pub truth: Vec<f64>,
    pub truth_tau: HyperParams,
}

pub fn truth_sigma(cfg: &RunConfig, prior: &HyperPrior) -> f64 {
    cfg.bayes.truth_sigma.unwrap_or(prior.m_sigma.clamp(prior.sigma_min, prior.sigma_max))
}

pub fn synthetic_problem(cfg: &RunConfig, mesh: &FieldMesh) -> Result<Synthetic> {
    let b = &cfg.bayes;
    let prior = cfg.prior.resolve()?;
    let truth_tau = HyperParams::new(b.truth_ell, truth_sigma(cfg, &prior));
    let mut rng = stream(b.truth_seed, TRUTH_CHAIN, 0);
    let truth = full_sample(&full_sampler(cfg, mesh, b.truth_n_sto)?, truth_tau, &mut rng)?;
    let pts = observation_lattice(b.obs_lattice);
    let forward = if cfg.experiment == Experiment::BayesPde {
        let fem = FemProblem::new(cfg.mesh.fem_n_side, mesh, Bc::HomogeneousDirichlet, Source::GaussianGrid)?;
        ForwardMap::PdeObserve { fem: Box::new(fem), points: pts }
    } else {
        ForwardMap::field_at(mesh, &pts)?.with_scale(b.field_scale)
    };
    let data = match b.data_value {
        Some(v) => vec![v; forward.n_obs()],
        None => {
            let clean = forward.apply(&truth)?;
            let sd = b.data_noise_var.sqrt();
            clean.iter().zip(normals(&mut rng, clean.len())).map(|(c, z)| c + sd * z).collect()
        }
    };
    Ok(Synthetic { problem: BayesProblem::new(forward, data, b.noise_var, prior)?, truth, truth_tau })
}

/// Initial states: the configured lengths, or points equidistant in `1/ℓ` over the prior.
pub fn initial_states(cfg: &RunConfig, prior: &HyperPrior) -> Vec<HyperParams> {
    let c = &cfg.mcmc;
    let sigma = c.init_sigma.unwrap_or(prior.m_sigma).clamp(prior.sigma_min, prior.sigma_max);
    if !c.init_ell.is_empty() {
        return c.init_ell.iter().map(|&l| HyperParams::new(l, sigma)).collect();
    }
    let (ua, ub) = prior.inv_ell_range();
    (0..c.chains)
        .map(|k| HyperParams::new(1.0 / (ua + (k as f64 + 0.5) / c.chains as f64 * (ub - ua)), sigma))
        .collect()
}

pub fn chain_config(cfg: &RunConfig, init: HyperParams) -> ChainConfig {
    let c = &cfg.mcmc;
    ChainConfig {
        beta: c.beta,
        step_ell: c.step_ell,
        step_sigma: c.step_sigma,
        burn_in: c.burn_in,
        monitor: c.monitor.clone(),
        ..ChainConfig::new(c.n_steps, init)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BayesResult {
    pub truth_ell: f64,
    pub truth_sigma: f64,
    pub chains: Vec<ChainSummary>,
    pub diagnostics: ChainDiagnostics,
}

pub fn sample(cfg: &RunConfig, problem: &BayesProblem, model: &dyn PriorModel) -> Result<Vec<Chain>> {
    let inits = initial_states(cfg, &problem.prior);
    Ok(run_chains(problem, model, &chain_config(cfg, inits[0]), &inits, cfg.seed)?)
}

pub fn run(cfg: &RunConfig, dir: &RunDir) -> Result<Summary> {
    let mesh = field_mesh(cfg)?;
    let syn = synthetic_problem(cfg, &mesh)?;
    let model = prior_model(cfg, &mesh)?;
    let chains = sample(cfg, &syn.problem, model.as_ref())?;
    for (k, c) in chains.iter().enumerate() {
        write_chain_csv(&dir.path(&format!("chain_{k}.csv")), c, &cfg.mcmc.monitor)?;
    }
    let cells = |f: &[f64]| mesh.centers.iter().zip(f).map(|(x, v)| vec![x[0], x[1], *v]).collect::<Vec<_>>();
    let n = chains.len() as f64;
    let mean: Vec<f64> = (0..mesh.n()).map(|i| chains.iter().map(|c| c.field_mean[i]).sum::<f64>() / n).collect();
    write_csv(&dir.path("posterior_mean.csv"), &["x", "y", "theta"], cells(&mean))?;
    write_csv(&dir.path("truth.csv"), &["x", "y", "theta"], cells(&syn.truth))?;
    dir.write_gnuplot(
        "chains.gp",
        "trace of ell",
        "set xlabel 'step'\nset ylabel 'ell'\nplot for [k=0:*] 'chain_'.k.'.csv' using 1:2 with lines title 'chain '.k",
    )?;
    let diagnostics = chain_diagnostics(&chains)?;
    let r = BayesResult {
        truth_ell: syn.truth_tau.ell,
        truth_sigma: syn.truth_tau.sigma,
        chains: chains.iter().map(|c| c.summary).collect(),
        diagnostics,
    };
    let d = &r.diagnostics;
    let line = format!(
        "{}: ell posterior mean {:.4} (CoV {:.4}), sigma {:.4} (CoV {:.4}), truth ({:.3}, {:.3})",
        cfg.experiment.name(),
        d.ell_mean.mean,
        d.ell_mean.cov,
        d.sigma_mean.mean,
        d.sigma_mean.cov,
        r.truth_ell,
        r.truth_sigma
    );
    Ok(Summary::new(cfg, line, json!(r)))
}
