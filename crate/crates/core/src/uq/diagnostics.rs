use serde::{Deserialize, Serialize};

use super::mcmc::Chain;
use crate::error::{Error, Result};

/// Spread of one estimate across repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    /// `std / |mean|`.
    pub cov: f64,
}

pub fn spread(values: &[f64]) -> Result<Spread> {
    if values.is_empty() {
        return Err(Error::invalid("no values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let cov = if std == 0.0 { 0.0 } else { std / mean.abs() };
    Ok(Spread { mean, std, cov })
}

/// Coefficient of variation of repeated estimates.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64> {
    Ok(spread(values)?.cov)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub ell_mean: Spread,
    pub ell_var: Spread,
    pub sigma_mean: Spread,
    pub sigma_var: Spread,
    pub accept_tau: Vec<f64>,
    pub accept_theta: Vec<f64>,
}

pub fn chain_diagnostics(chains: &[Chain]) -> Result<ChainDiagnostics> {
    if chains.is_empty() || chains.iter().any(|c| c.records.is_empty()) {
        return Err(Error::invalid("diagnostics need at least one nonempty chain"));
    }
    let col = |f: fn(&Chain) -> f64| chains.iter().map(f).collect::<Vec<_>>();
    Ok(ChainDiagnostics {
        ell_mean: spread(&col(|c| c.summary.ell_mean))?,
        ell_var: spread(&col(|c| c.summary.ell_var))?,
        sigma_mean: spread(&col(|c| c.summary.sigma_mean))?,
        sigma_var: spread(&col(|c| c.summary.sigma_var))?,
        accept_tau: col(|c| c.summary.accept_tau),
        accept_theta: col(|c| c.summary.accept_theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_values() {
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn two_values() {
        let s = spread(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.cov - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        assert!(spread(&[]).is_err());
        assert!(chain_diagnostics(&[]).is_err());
    }
}
