use serde::{Deserialize, Serialize};

use super::bessel::bessel_k;
use super::separable::SeparableKernel;
use super::special::is_integer;
use crate::error::{Error, Result};

/// A point `tau = (ell, sigma)` in hyperparameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub ell: f64,
    pub sigma: f64,
}

impl HyperParams {
    pub fn new(ell: f64, sigma: f64) -> Self {
        HyperParams { ell, sigma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(Error::invalid(format!("ell must be positive, got {}", self.ell)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternKernel {
    pub nu: f64,
    pub sigma: f64,
    pub ell: f64,
}

impl MaternKernel {
    pub fn new(nu: f64, sigma: f64, ell: f64) -> Result<Self> {
        check_nu(nu)?;
        HyperParams::new(ell, sigma).validate()?;
        Ok(MaternKernel { nu, sigma, ell })
    }
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) || is_integer(nu) {
        return Err(Error::invalid(format!("smoothness must be positive and non-integer, got {nu}")));
    }
    Ok(())
}

pub fn matern_eval(k: &MaternKernel, z: f64) -> Result<f64> {
    check_nu(k.nu)?;
    if !(z >= 0.0) {
        return Err(Error::invalid(format!("distance must be nonnegative, got {z}")));
    }
    Ok(matern_unchecked(k.nu, k.ell, k.sigma, z))
}

pub(crate) fn matern_unchecked(nu: f64, ell: f64, sigma: f64, z: f64) -> f64 {
    let s2 = sigma * sigma;
    if z == 0.0 {
        return s2;
    }
    let a = (2.0 * nu).sqrt() * z / ell;
    let kv = bessel_k(nu, a);
    if kv == 0.0 {
        return 0.0;
    }
    if !kv.is_finite() {
        return s2;
    }
    let ln_pref = (1.0 - nu) * std::f64::consts::LN_2 - statrs::function::gamma::ln_gamma(nu);
    let v = s2 * (ln_pref + nu * a.ln() + kv.ln()).exp();
    v.min(s2)
}

/// Covariance model used for assembly: the exact exponential or Matérn kernel, or a
/// linearised (separable) approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Exponential,
    Matern { nu: f64 },
    Linearized(SeparableKernel),
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Exponential => Ok(()),
            Kernel::Matern { nu } => check_nu(*nu),
            Kernel::Linearized(s) => check_nu(s.nu),
        }
    }

    pub fn eval(&self, tau: HyperParams, z: f64) -> f64 {
        match self {
            Kernel::Exponential => tau.sigma * tau.sigma * (-z / tau.ell).exp(),
            Kernel::Matern { nu } => matern_unchecked(*nu, tau.ell, tau.sigma, z),
            Kernel::Linearized(s) => s.eval_unchecked(tau.ell, tau.sigma, z),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Kernel::Exponential => "exponential".into(),
            Kernel::Matern { nu } => format!("matern(nu={nu})"),
            Kernel::Linearized(s) => format!("linearized(nu={}, terms={})", s.nu, s.n_terms),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_zero() {
        let k = MaternKernel::new(0.5, 1.0, 1.0).unwrap();
        assert_eq!(matern_eval(&k, 0.0).unwrap(), 1.0);
        let k = MaternKernel::new(2.5, 3.0, 0.2).unwrap();
        assert_eq!(matern_eval(&k, 0.0).unwrap(), 9.0);
    }

    #[test]
    fn exponential_identity() {
        let k = MaternKernel::new(0.5, 1.0, 0.5).unwrap();
        let v = matern_eval(&k, 0.5).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn oracle_three_halves() {
        // 50-digit evaluation of the defining formula.
        let k = MaternKernel::new(1.5, 2.0, 0.3).unwrap();
        let v = matern_eval(&k, 0.1).unwrap();
        assert!((v - 3.541_996_270_197_859_920_6).abs() < 1e-13);
        // closed form for nu = 3/2
        let a = 3f64.sqrt() * 0.1 / 0.3;
        assert!((v - 4.0 * (1.0 + a) * (-a).exp()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MaternKernel::new(1.0, 1.0, 1.0).is_err());
        assert!(MaternKernel::new(-0.5, 1.0, 1.0).is_err());
        let k = MaternKernel { nu: 0.5, sigma: 1.0, ell: 1.0 };
        assert!(matern_eval(&k, -0.1).is_err());
        let k = MaternKernel { nu: 2.0, sigma: 1.0, ell: 1.0 };
        assert!(matern_eval(&k, 0.1).is_err());
    }

    #[test]
    fn monotone_and_nonnegative() {
        for &nu in &[0.3, 0.5, 1.5, 2.7] {
            let k = MaternKernel::new(nu, 1.3, 0.4).unwrap();
            let mut prev = f64::INFINITY;
            for i in 0..=400 {
                let v = matern_eval(&k, i as f64 * 0.01).unwrap();
                assert!(v >= 0.0 && v.is_finite());
                assert!(v <= prev + 1e-15, "nu={nu} z={}", i as f64 * 0.01);
                prev = v;
            }
        }
    }
}
