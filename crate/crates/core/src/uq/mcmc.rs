//! Metropolis-within-Gibbs: a reflected random walk on `(1/ℓ, σ)` followed by a pCN move on
//! the field coordinates. With a [`FullSampler`](super::FullSampler) the coordinates are the
//! field itself; with an [`RbSampler`](super::RbSampler) they are the reduced coordinates `θ_RB`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::bayes::{gaussian_logpdf_reduced, BayesProblem, LOGPDF_REL_CLIP};
use super::forward::Welford;
use super::prior::HyperPrior;
use super::samplers::{Decomp, PriorModel};
use crate::covariance::HyperParams;
use crate::error::{Error, Result};
use crate::rng::{normals, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_steps: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Random-walk scale for `1/ℓ`; default a tenth of its prior range.
    #[serde(default)]
    pub step_ell: Option<f64>,
    /// Random-walk scale for `σ`; default a tenth of its prior range.
    #[serde(default)]
    pub step_sigma: Option<f64>,
    #[serde(default)]
    pub burn_in: usize,
    pub init: HyperParams,
    /// Initial coordinates; `None` draws them from the prior at `init`.
    #[serde(default)]
    pub init_coords: Option<Vec<f64>>,
    /// 1-based coordinate indices recorded at every step.
    #[serde(default = "default_monitor")]
    pub monitor: Vec<usize>,
}

fn default_beta() -> f64 {
    0.1
}

fn default_monitor() -> Vec<usize> {
    vec![1, 10, 100]
}

impl ChainConfig {
    pub fn new(n_steps: usize, init: HyperParams) -> Self {
        ChainConfig {
            n_steps,
            beta: default_beta(),
            step_ell: None,
            step_sigma: None,
            burn_in: 0,
            init,
            init_coords: None,
            monitor: default_monitor(),
        }
    }

    pub fn validate(&self, prior: &HyperPrior) -> Result<()> {
        let mut bad = Vec::new();
        if self.n_steps == 0 {
            bad.push("n_steps must be positive".to_string());
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            bad.push(format!("beta must lie in (0, 1], got {}", self.beta));
        }
        if self.burn_in >= self.n_steps {
            bad.push(format!("burn_in {} must be below n_steps {}", self.burn_in, self.n_steps));
        }
        for (name, s) in [("step_ell", self.step_ell), ("step_sigma", self.step_sigma)] {
            if let Some(v) = s {
                if !(v >= 0.0 && v.is_finite()) {
                    bad.push(format!("{name} must be nonnegative, got {v}"));
                }
            }
        }
        if !prior.contains(self.init) {
            bad.push(format!("initial state {:?} outside the prior support", self.init));
        }
        if self.monitor.contains(&0) {
            bad.push("monitor indices are 1-based".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub tau: HyperParams,
    pub theta_rb: Vec<f64>,
    pub beta: f64,
    pub step_ell: f64,
    pub step_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub step: usize,
    pub ell: f64,
    pub sigma: f64,
    pub monitored: Vec<f64>,
    pub accepted_tau: bool,
    pub accepted_theta: bool,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub ell_mean: f64,
    pub ell_var: f64,
    pub sigma_mean: f64,
    pub sigma_var: f64,
    pub accept_tau: f64,
    pub accept_theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chain {
    pub records: Vec<ChainRecord>,
    pub summary: ChainSummary,
    pub final_state: ChainState,
    /// Posterior mean of the field over the steps after burn-in.
    pub field_mean: Vec<f64>,
}

/// Reflects `x` into `[a, b]`.
pub fn reflect(x: f64, a: f64, b: f64) -> f64 {
    let w = b - a;
    if w <= 0.0 {
        return a;
    }
    let y = (x - a).rem_euclid(2.0 * w);
    if y > w {
        a + 2.0 * w - y
    } else {
        a + y
    }
}

fn logpdf(x: &[f64], d: &Decomp) -> Result<f64> {
    let zero = vec![0.0; x.len()];
    gaussian_logpdf_reduced(x, &zero, &d.values, &d.vecs, LOGPDF_REL_CLIP)
}

fn accept_prob(log_ratio: f64) -> f64 {
    let a = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
    assert!((0.0..=1.0).contains(&a), "acceptance probability {a} outside [0, 1]");
    a
}

/// One chain of `cfg.n_steps` steps for the posterior with potential `phi`. Step `n` draws
/// from the stream `(seed, chain, n)`; the initial coordinates (if drawn) use index 0.
pub fn mcmc_gibbs_with<P>(
    model: &dyn PriorModel,
    prior: &HyperPrior,
    phi: P,
    cfg: &ChainConfig,
    seed: u64,
    chain: u64,
) -> Result<Chain>
where
    P: Fn(&[f64]) -> Result<f64>,
{
    prior.validate()?;
    cfg.validate(prior)?;
    let (ua, ub) = prior.inv_ell_range();
    let step_ell = cfg.step_ell.unwrap_or(0.1 * (ub - ua));
    let step_sigma = if prior.sigma_fixed() { 0.0 } else { cfg.step_sigma.unwrap_or(0.1 * (prior.sigma_max - prior.sigma_min)) };
    let beta = cfg.beta;
    let shrink = (1.0 - beta * beta).sqrt();
    log::debug!("pCN proposal sqrt(1 - beta^2) theta + beta N(0, C), beta = {beta}");

    let mut tau = cfg.init;
    let mut dec = model.decompose(tau)?;
    let mut x = match &cfg.init_coords {
        Some(c) if c.len() == model.dim() => c.clone(),
        Some(c) => return Err(Error::invalid(format!("initial coordinates have length {}, expected {}", c.len(), model.dim()))),
        None => dec.draw(&normals(&mut stream(seed, chain, 0), dec.rank())),
    };
    let mut field = model.to_field(&x)?;
    let mut phi_x = phi(&field)?;
    let mut lp_x = logpdf(&x, &dec)?;

    let monitor: Vec<usize> = cfg.monitor.iter().copied().filter(|&i| i <= model.dim()).collect();
    let mut records = Vec::with_capacity(cfg.n_steps);
    let (mut w_ell, mut w_sig) = (Welford::default(), Welford::default());
    let (mut n_tau, mut n_theta) = (0usize, 0usize);
    let mut field_mean = vec![0.0; field.len()];
    let mut n_kept = 0usize;

    for step in 1..=cfg.n_steps {
        let mut rng = stream(seed, chain, step as u64);

        // hyperparameter block
        let z: [f64; 2] = [normals(&mut rng, 1)[0], normals(&mut rng, 1)[0]];
        let u = reflect(1.0 / tau.ell + step_ell * z[0], ua, ub);
        let s = if step_sigma > 0.0 { reflect(tau.sigma + step_sigma * z[1], prior.sigma_min, prior.sigma_max) } else { tau.sigma };
        let tau_new = HyperParams::new(1.0 / u, s);
        let dec_new = model.decompose(tau_new)?;
        let lp_new = logpdf(&x, &dec_new)?;
        let a_tau = accept_prob(lp_new - lp_x + prior.log_density(tau_new) - prior.log_density(tau));
        let acc_tau = rng.random::<f64>() < a_tau;
        if acc_tau {
            tau = tau_new;
            dec = dec_new;
            lp_x = lp_new;
            n_tau += 1;
        }

        // field block
        let draw = dec.draw(&normals(&mut rng, dec.rank()));
        let x_new: Vec<f64> = x.iter().zip(&draw).map(|(a, d)| shrink * a + beta * d).collect();
        let field_new = model.to_field(&x_new)?;
        let phi_new = phi(&field_new)?;
        let a_theta = accept_prob(phi_x - phi_new);
        let acc_theta = rng.random::<f64>() < a_theta;
        if acc_theta {
            x = x_new;
            field = field_new;
            phi_x = phi_new;
            lp_x = logpdf(&x, &dec)?;
            n_theta += 1;
        }

        if step > cfg.burn_in {
            w_ell.push(tau.ell);
            w_sig.push(tau.sigma);
            n_kept += 1;
            for (m, f) in field_mean.iter_mut().zip(&field) {
                *m += (f - *m) / n_kept as f64;
            }
        }
        records.push(ChainRecord {
            step,
            ell: tau.ell,
            sigma: tau.sigma,
            monitored: monitor.iter().map(|&i| x[i - 1]).collect(),
            accepted_tau: acc_tau,
            accepted_theta: acc_theta,
            phi: phi_x,
        });
    }
    let n = cfg.n_steps as f64;
    Ok(Chain {
        records,
        summary: ChainSummary {
            ell_mean: w_ell.mean,
            ell_var: w_ell.variance(),
            sigma_mean: w_sig.mean,
            sigma_var: w_sig.variance(),
            accept_tau: n_tau as f64 / n,
            accept_theta: n_theta as f64 / n,
        },
        final_state: ChainState { tau, theta_rb: x, beta, step_ell, step_sigma },
        field_mean,
    })
}

pub fn mcmc_gibbs(problem: &BayesProblem, model: &dyn PriorModel, cfg: &ChainConfig, seed: u64, chain: u64) -> Result<Chain> {
    mcmc_gibbs_with(model, &problem.prior, |t| problem.potential(t), cfg, seed, chain)
}

/// Independent chains `0..n_chains` in parallel; `inits[c]` overrides the initial `τ` of chain c.
pub fn run_chains(
    problem: &BayesProblem,
    model: &dyn PriorModel,
    cfg: &ChainConfig,
    inits: &[HyperParams],
    seed: u64,
) -> Result<Vec<Chain>> {
    inits
        .par_iter()
        .enumerate()
        .map(|(c, &init)| {
            let cfg = ChainConfig { init, ..cfg.clone() };
            mcmc_gibbs(problem, model, &cfg, seed, c as u64)
        })
        .collect()
}

/// CSV with columns step, ell, sigma, theta_rb_i..., accepted_tau, accepted_theta.
pub fn write_chain_csv(path: &Path, chain: &Chain, monitor: &[usize]) -> Result<()> {
    let k = chain.records.first().map_or(0, |r| r.monitored.len());
    let mut header: Vec<String> = vec!["step".into(), "ell".into(), "sigma".into()];
    header.extend(monitor.iter().take(k).map(|i| format!("theta_rb_{i}")));
    header.extend(["accepted_tau".into(), "accepted_theta".into()]);
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = chain.records.iter().map(|r| {
        let mut row = vec![r.step as f64, r.ell, r.sigma];
        row.extend(&r.monitored);
        row.push(r.accepted_tau as u8 as f64);
        row.push(r.accepted_theta as u8 as f64);
        row
    });
    crate::io::write_csv(path, &refs, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    /// Diagonal Gaussian independent of `τ`.
    struct Frozen(Vec<f64>);

    impl PriorModel for Frozen {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn decompose(&self, _tau: HyperParams) -> Result<Decomp> {
            let n = self.0.len();
            Ok(Decomp { values: self.0.clone(), vecs: Mat::from_fn(n, n, |i, j| (i == j) as u8 as f64) })
        }
        fn to_field(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(x.to_vec())
        }
    }

    #[test]
    fn reflection_stays_inside() {
        assert_eq!(reflect(0.5, 0.0, 1.0), 0.5);
        assert!((reflect(1.2, 0.0, 1.0) - 0.8).abs() < 1e-15);
        assert!((reflect(-0.3, 0.0, 1.0) - 0.3).abs() < 1e-15);
        assert!((reflect(2.3, 0.0, 1.0) - 0.3).abs() < 1e-12);
        assert_eq!(reflect(5.0, 2.0, 2.0), 2.0);
    }

    #[test]
    fn beta_one_always_accepts_without_data() {
        let prior = HyperPrior::fixed_sigma(0.3, 1.0).unwrap();
        let model = Frozen(vec![2.0, 1.0, 0.5]);
        let mut cfg = ChainConfig::new(200, HyperParams::new(0.5, 1.0));
        cfg.beta = 1.0;
        let c = mcmc_gibbs_with(&model, &prior, |_| Ok(0.0), &cfg, 1, 0).unwrap();
        assert_eq!(c.summary.accept_theta, 1.0);
        assert_eq!(c.summary.accept_tau, 1.0);
        assert!(c.records.iter().all(|r| r.ell >= 0.3 && r.ell <= crate::mesh::DIAM + 1e-12));
    }

    #[test]
    fn chains_are_reproducible() {
        let prior = HyperPrior::new(0.3, 0.1, 1.0, 0.5, 0.1).unwrap();
        let model = Frozen(vec![1.0, 0.3]);
        let cfg = ChainConfig::new(100, HyperParams::new(0.5, 0.5));
        let phi = |t: &[f64]| Ok(0.5 * (t[0] - 0.2).powi(2) / 0.1);
        let a = mcmc_gibbs_with(&model, &prior, phi, &cfg, 5, 2).unwrap();
        let b = mcmc_gibbs_with(&model, &prior, phi, &cfg, 5, 2).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn rejects_bad_config() {
        let prior = HyperPrior::fixed_sigma(0.3, 1.0).unwrap();
        let mut cfg = ChainConfig::new(10, HyperParams::new(0.5, 1.0));
        cfg.beta = 0.0;
        assert!(cfg.validate(&prior).is_err());
        let cfg = ChainConfig::new(10, HyperParams::new(0.1, 1.0));
        assert!(cfg.validate(&prior).is_err());
    }
}
