use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::covariance::HyperParams;
use crate::error::{Error, Result};
use crate::mesh::DIAM;

const MAX_REJECTIONS: usize = 1_000_000;

/// `1/ℓ ~ U[1/ell_max, 1/ell_min]`, `σ ~ N(m_sigma, var_sigma)` truncated to
/// `[sigma_min, sigma_max]`; `var_sigma = 0` fixes `σ = m_sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    pub ell_min: f64,
    #[serde(default = "default_ell_max")]
    pub ell_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub m_sigma: f64,
    pub var_sigma: f64,
}

fn default_ell_max() -> f64 {
    DIAM
}

impl HyperPrior {
    pub fn new(ell_min: f64, sigma_min: f64, sigma_max: f64, m_sigma: f64, var_sigma: f64) -> Result<Self> {
        let p = HyperPrior { ell_min, ell_max: DIAM, sigma_min, sigma_max, m_sigma, var_sigma };
        p.validate()?;
        Ok(p)
    }

    /// Fixed `σ`, random `ℓ`.
    pub fn fixed_sigma(ell_min: f64, sigma: f64) -> Result<Self> {
        Self::new(ell_min, sigma, sigma, sigma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.ell_min > 0.0 && self.ell_min < self.ell_max && self.ell_max.is_finite()) {
            bad.push(format!("need 0 < ell_min < ell_max (got {}, {})", self.ell_min, self.ell_max));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.m_sigma && self.m_sigma <= self.sigma_max) {
            bad.push(format!(
                "need 0 < sigma_min <= m_sigma <= sigma_max (got {}, {}, {})",
                self.sigma_min, self.m_sigma, self.sigma_max
            ));
        }
        if !(self.var_sigma >= 0.0 && self.var_sigma.is_finite()) {
            bad.push(format!("var_sigma must be nonnegative, got {}", self.var_sigma));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(bad.join("; ")))
        }
    }

    /// Support of `1/ℓ`.
    pub fn inv_ell_range(&self) -> (f64, f64) {
        (1.0 / self.ell_max, 1.0 / self.ell_min)
    }

    pub fn sigma_fixed(&self) -> bool {
        self.var_sigma == 0.0 || self.sigma_min == self.sigma_max
    }

    pub fn contains(&self, tau: HyperParams) -> bool {
        let tol = 1e-12;
        let ell_ok = tau.ell >= self.ell_min * (1.0 - tol) && tau.ell <= self.ell_max * (1.0 + tol);
        let sig_ok = if self.sigma_fixed() {
            (tau.sigma - self.m_sigma).abs() <= tol * self.m_sigma
        } else {
            tau.sigma >= self.sigma_min && tau.sigma <= self.sigma_max
        };
        ell_ok && sig_ok
    }

    /// Unnormalised log-density in the coordinates `(1/ℓ, σ)`; `-inf` outside the support.
    pub fn log_density(&self, tau: HyperParams) -> f64 {
        if !self.contains(tau) {
            return f64::NEG_INFINITY;
        }
        if self.sigma_fixed() {
            0.0
        } else {
            -(tau.sigma - self.m_sigma).powi(2) / (2.0 * self.var_sigma)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<HyperParams> {
        let (a, b) = self.inv_ell_range();
        let u: f64 = rng.random_range(a..=b);
        let sigma = if self.sigma_fixed() {
            self.m_sigma
        } else {
            let nd = Normal::new(self.m_sigma, self.var_sigma.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
            let mut out = None;
            for _ in 0..MAX_REJECTIONS {
                let s = nd.sample(rng);
                if s >= self.sigma_min && s <= self.sigma_max {
                    out = Some(s);
                    break;
                }
            }
            out.ok_or_else(|| Error::numerical(format!("sigma rejection sampler gave up after {MAX_REJECTIONS} tries")))?
        };
        Ok(HyperParams::new(1.0 / u, sigma))
    }
}

/// The four hyperprior settings studied, with their KL truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Low-dimensional verification: forward flow cell and field observations at 9 points.
    Verification,
    /// Forward propagation through the flow cell.
    FlowCell,
    /// Inversion from PDE observations, fixed sigma.
    PdeInverse,
    /// Inversion from direct field observations, random sigma and short lengths.
    FieldInverse,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Verification, Preset::FlowCell, Preset::PdeInverse, Preset::FieldInverse];

    pub fn prior(self) -> HyperPrior {
        let (smin, smax, m, v, lmin) = match self {
            Preset::Verification => (1.0, 1.0, 1.0, 0.0, 0.3),
            Preset::FlowCell => (0.1, 1.0, 0.5, 0.1, 0.3),
            Preset::PdeInverse => (0.5, 0.5, 0.5, 0.0, 0.3),
            Preset::FieldInverse => (0.1, 1.0, 0.5, 0.1, 0.1),
        };
        HyperPrior { ell_min: lmin, ell_max: DIAM, sigma_min: smin, sigma_max: smax, m_sigma: m, var_sigma: v }
    }

    pub fn n_sto(self) -> usize {
        match self {
            Preset::Verification => 200,
            Preset::FlowCell | Preset::PdeInverse => 100,
            Preset::FieldInverse => 800,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Verification => "verification",
            Preset::FlowCell => "flow_cell",
            Preset::PdeInverse => "pde_inverse",
            Preset::FieldInverse => "field_inverse",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown preset '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn degenerate_sigma() {
        let p = Preset::Verification.prior();
        let mut rng = stream(3, 0, 0);
        for _ in 0..100 {
            let t = p.sample(&mut rng).unwrap();
            assert_eq!(t.sigma, 1.0);
            assert!(t.ell >= 0.3 - 1e-15 && t.ell <= DIAM + 1e-15);
        }
    }

    #[test]
    fn support_respected() {
        let p = Preset::FieldInverse.prior();
        let mut rng = stream(4, 0, 0);
        for _ in 0..2000 {
            let t = p.sample(&mut rng).unwrap();
            assert!(p.contains(t));
            assert!(p.log_density(t).is_finite());
        }
        assert_eq!(p.log_density(HyperParams::new(0.05, 0.5)), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_priors() {
        assert!(HyperPrior::new(2.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(HyperPrior::new(0.3, 1.0, 0.5, 0.7, 0.1).is_err());
        assert!(HyperPrior::new(0.3, 0.1, 1.0, 0.5, -1.0).is_err());
        assert_eq!(Preset::from_name("flow_cell").unwrap(), Preset::FlowCell);
        assert!(Preset::from_name("nope").is_err());
    }

    #[test]
    fn hopeless_truncation_is_reported() {
        let p = HyperPrior { ell_min: 0.3, ell_max: DIAM, sigma_min: 0.1, sigma_max: 0.1 + 1e-12, m_sigma: 0.1, var_sigma: 1e6 };
        assert!(p.sample(&mut stream(0, 0, 0)).is_err());
    }
}
