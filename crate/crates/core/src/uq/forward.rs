use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prior::HyperPrior;
use super::samplers::PriorModel;
use crate::error::{Error, Result};
use crate::rng::stream;

/// Single-pass mean and unbiased variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardSample {
    pub index: u64,
    pub ell: f64,
    pub sigma: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForwardSummary {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub samples: Vec<ForwardSample>,
}

impl ForwardSummary {
    /// Sorted values with their empirical CDF levels `k/n`.
    pub fn ecdf(&self) -> Vec<(f64, f64)> {
        let mut q: Vec<f64> = self.samples.iter().map(|s| s.q).collect();
        q.sort_by(f64::total_cmp);
        let n = q.len() as f64;
        q.into_iter().enumerate().map(|(k, v)| (v, (k + 1) as f64 / n)).collect()
    }
}

/// Result of a Monte Carlo run. On failure `summary` covers the samples before the first
/// failing index.
#[derive(Debug)]
pub struct ForwardOutcome {
    pub summary: ForwardSummary,
    pub error: Option<Error>,
}

impl ForwardOutcome {
    pub fn into_result(self) -> Result<ForwardSummary> {
        match self.error {
            None => Ok(self.summary),
            Some(e) => Err(e),
        }
    }
}

/// Pushforward of the hierarchical field through `qoi`. Sample `i` uses the stream
/// `(seed, chain, i)` for `τ` and then `ξ`, so the output does not depend on scheduling.
pub fn mc_forward<Q>(
    prior: &HyperPrior,
    model: &dyn PriorModel,
    qoi: Q,
    n_samples: usize,
    seed: u64,
    chain: u64,
) -> Result<ForwardOutcome>
where
    Q: Fn(&[f64]) -> Result<f64> + Sync,
{
    prior.validate()?;
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let results: Vec<Result<ForwardSample>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, chain, i);
            let tau = prior.sample(&mut rng)?;
            let (_, theta) = model.sample_coords(tau, &mut rng)?;
            let q = qoi(&theta)?;
            if !q.is_finite() {
                return Err(Error::numerical(format!("non-finite quantity of interest at sample {i}")));
            }
            Ok(ForwardSample { index: i, ell: tau.ell, sigma: tau.sigma, q })
        })
        .collect();
    let mut w = Welford::default();
    let mut samples = Vec::with_capacity(n_samples);
    let mut error = None;
    for r in results {
        match r {
            Ok(s) => {
                w.push(s.q);
                samples.push(s);
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    let summary = ForwardSummary { n: w.n, mean: w.mean, variance: w.variance(), samples };
    Ok(ForwardOutcome { summary, error })
}
