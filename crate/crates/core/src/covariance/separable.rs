//! Linearly separable approximation of the Matérn kernel.
//!
//! The truncated series is flattened into terms `F_k(ell, sigma) * C_k(z)`, k = 1..L, where
//! odd k carry the `z^(2 nu + 2j - 2)` family and even k the `z^(2j - 2)` family (j = ceil(k/2)).
//! All `ell` dependence sits in `F_k`; `C_k` depends on the distance only.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use super::kernel::{check_nu, matern_unchecked};
use super::special::ln_gamma_signed;
use crate::error::{Error, Result};
use crate::mesh::DIAM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableKernel {
    pub nu: f64,
    /// Number of flattened terms L. Even L pairs the two families term by term.
    pub n_terms: usize,
}

/// Precomputed log-coefficients: term k equals
/// `sign * sigma² * exp(ln_coef + power * ln(sqrt(nu) z / ell))`.
#[derive(Debug, Clone)]
pub struct Terms {
    nu: f64,
    sign: Vec<f64>,
    ln_coef: Vec<f64>,
    power: Vec<f64>,
    ln_const: f64,
    const_sign: f64,
}

impl SeparableKernel {
    pub fn new(nu: f64, n_terms: usize) -> Result<Self> {
        check_nu(nu)?;
        if n_terms == 0 {
            return Err(Error::invalid("separable kernel needs at least one term"));
        }
        Ok(SeparableKernel { nu, n_terms })
    }

    /// Even-length series in which both families appear pairwise.
    pub fn paired(nu: f64, n_lin: usize) -> Result<Self> {
        if n_lin % 2 != 0 {
            return Err(Error::invalid(format!("paired series needs an even term count, got {n_lin}")));
        }
        Self::new(nu, n_lin)
    }

    pub fn terms(&self) -> Terms {
        let nu = self.nu;
        let s = (PI * nu).sin();
        let ln_const = PI.ln() - s.abs().ln() - statrs::function::gamma::ln_gamma(nu);
        let mut sign = Vec::with_capacity(self.n_terms);
        let mut ln_coef = Vec::with_capacity(self.n_terms);
        let mut power = Vec::with_capacity(self.n_terms);
        for k in 1..=self.n_terms {
            let j = k.div_ceil(2) as f64;
            let ln_fact = statrs::function::gamma::ln_gamma(j);
            if k % 2 == 0 {
                let (lg, sg) = ln_gamma_signed(j - nu);
                sign.push(sg * s.signum());
                ln_coef.push(ln_const - (j - 1.0) * LN_2 - lg - ln_fact);
                power.push(2.0 * j - 2.0);
            } else {
                let (lg, _) = ln_gamma_signed(j + nu);
                sign.push(-s.signum());
                ln_coef.push(ln_const - (j + nu - 1.0) * LN_2 - lg - ln_fact);
                power.push(2.0 * nu + 2.0 * j - 2.0);
            }
        }
        Terms { nu, sign, ln_coef, power, ln_const, const_sign: s.signum() }
    }

    pub fn f_k(&self, k: usize, ell: f64, sigma: f64) -> f64 {
        self.terms().f_k(k, ell, sigma)
    }

    pub fn c_k(&self, k: usize, z: f64) -> f64 {
        self.terms().c_k(k, z)
    }

    pub(crate) fn eval_unchecked(&self, ell: f64, sigma: f64, z: f64) -> f64 {
        self.terms().eval(ell, sigma, z)
    }
}

impl Terms {
    pub fn len(&self) -> usize {
        self.sign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sign.is_empty()
    }

    /// `F_k(ell, sigma)` for 1-based k.
    pub fn f_k(&self, k: usize, ell: f64, sigma: f64) -> f64 {
        let p = self.power[k - 1];
        self.const_sign * sigma * sigma * (self.ln_const - p * ell.ln()).exp()
    }

    /// `C_k(z)` for 1-based k; free of `ell`.
    pub fn c_k(&self, k: usize, z: f64) -> f64 {
        let i = k - 1;
        let p = self.power[i];
        let zp = if p == 0.0 {
            0.0
        } else if z == 0.0 {
            return 0.0;
        } else {
            p * (self.nu.sqrt() * z).ln()
        };
        self.sign[i] * self.const_sign * (self.ln_coef[i] - self.ln_const + zp).exp()
    }

    /// Sum of the series at `(ell, sigma, z)`, each term formed in log space.
    pub fn eval(&self, ell: f64, sigma: f64, z: f64) -> f64 {
        let lu = if z > 0.0 { (self.nu.sqrt() * z / ell).ln() } else { f64::NEG_INFINITY };
        let mut acc = 0.0;
        for i in 0..self.len() {
            let p = self.power[i];
            if p == 0.0 {
                acc += self.sign[i] * self.ln_coef[i].exp();
            } else if z > 0.0 {
                acc += self.sign[i] * (self.ln_coef[i] + p * lu).exp();
            }
        }
        sigma * sigma * acc
    }
}

pub fn linearized_eval(s: &SeparableKernel, ell: f64, sigma: f64, z: f64) -> Result<f64> {
    check_nu(s.nu)?;
    if !(z >= 0.0) || !(ell > 0.0) || !(sigma > 0.0) {
        return Err(Error::invalid(format!("need z >= 0, ell > 0, sigma > 0 (got {z}, {ell}, {sigma})")));
    }
    Ok(s.eval_unchecked(ell, sigma, z))
}

/// Largest deviation from the exact Matérn kernel over a `grid_density × grid_density`
/// tensor grid of `z ∈ [0, z_max]` and `ell ∈ [ell_min, diam(D)]`, both uniformly spaced.
pub fn truncation_error_sup(
    s: &SeparableKernel,
    sigma: f64,
    ell_min: f64,
    z_max: f64,
    grid_density: usize,
) -> Result<f64> {
    check_nu(s.nu)?;
    if !(ell_min > 0.0) || !(z_max > 0.0) || grid_density < 2 {
        return Err(Error::invalid("need ell_min > 0, z_max > 0 and grid_density >= 2"));
    }
    let terms = s.terms();
    let ell_max = DIAM.max(ell_min);
    let g = grid_density - 1;
    let mut sup: f64 = 0.0;
    for a in 0..=g {
        let ell = ell_min + (ell_max - ell_min) * a as f64 / g as f64;
        for b in 0..=g {
            let z = z_max * b as f64 / g as f64;
            let err = (terms.eval(ell, sigma, z) - matern_unchecked(s.nu, ell, sigma, z)).abs();
            sup = if err.is_nan() { f64::INFINITY } else { sup.max(err) };
        }
    }
    Ok(sup)
}

/// A priori bound on the truncation error with spatial dimension 2, evaluated in log space.
/// Returns `f64::INFINITY` when the value exceeds the floating-point range.
pub fn error_bound(nu: f64, ell_min: f64, diam: f64, n_lin: usize) -> Result<f64> {
    check_nu(nu)?;
    if !(ell_min > 0.0) || !(diam > 0.0) {
        return Err(Error::invalid("need ell_min > 0 and diam > 0"));
    }
    if n_lin == 0 || n_lin % 2 != 0 {
        return Err(Error::invalid(format!("bound needs an even positive term count, got {n_lin}")));
    }
    let d = 2.0;
    let zeta = diam / ell_min;
    let n = n_lin as f64;
    let ln = 2.0 * d * diam.ln() + PI.ln() - (PI * nu).sin().abs().ln() - (1.0 - nu) * LN_2
        + (2.0 * nu * zeta.ln()).exp().ln_1p()
        + zeta * zeta / 4.0
        + 2.0 * n * zeta.ln()
        - statrs::function::gamma::ln_gamma(n + 1.0);
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn two_terms_at_origin() {
        let s = SeparableKernel::paired(0.5, 2).unwrap();
        assert!((linearized_eval(&s, 1.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let s = SeparableKernel::paired(1.7, 2).unwrap();
        assert!((linearized_eval(&s, 0.3, 2.0, 0.0).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn forty_terms_reach_exponential() {
        let s = SeparableKernel::paired(0.5, 40).unwrap();
        let v = linearized_eval(&s, 0.5, 1.0, 0.5).unwrap();
        assert!((v - (-1f64).exp()).abs() < 9.09e-5);
        assert!((v - (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn extended_precision_partial_sums() {
        // Direct summation of the series with 50 significant digits.
        let cases = [
            (0.5, 0.3, 1.0, 10, 1.0, 3.055_484_096_653_295_115_6e-5),
            (1.5, 0.7, 1.3, 12, 0.9, 0.588_806_956_713_194_097),
            (0.25, 0.4, 1.0, 8, 0.6, 0.185_848_284_055_884_496_41),
        ];
        for (nu, ell, sigma, l, z, want) in cases {
            let s = SeparableKernel::paired(nu, l).unwrap();
            let got = linearized_eval(&s, ell, sigma, z).unwrap();
            // cancellation between terms limits the attainable accuracy
            let t = s.terms();
            let scale: f64 = (1..=l).map(|k| (t.f_k(k, ell, sigma) * t.c_k(k, z)).abs()).sum();
            assert!((got - want).abs() < 1e-14 * scale.max(want.abs()), "nu={nu}: {got} vs {want}");
        }
    }

    #[test]
    fn split_reconstructs_series() {
        for &(nu, l) in &[(0.5, 10), (1.5, 12), (0.3, 39), (2.2, 7)] {
            let s = SeparableKernel::new(nu, l).unwrap();
            let t = s.terms();
            for &(ell, sigma, z) in &[(0.7, 1.0, 0.4), (1.2, 0.5, 1.3), (0.3, 2.0, 0.05), (0.9, 1.0, 0.0)] {
                let direct = t.eval(ell, sigma, z);
                let split: f64 = (1..=l).map(|k| t.f_k(k, ell, sigma) * t.c_k(k, z)).sum();
                let scale: f64 = (1..=l).map(|k| (t.f_k(k, ell, sigma) * t.c_k(k, z)).abs()).sum();
                assert!((direct - split).abs() <= 1e-12 * scale.max(1e-300), "nu={nu} l={l}");
            }
        }
    }

    #[test]
    fn coefficient_powers() {
        let s = SeparableKernel::new(0.5, 6).unwrap();
        let t = s.terms();
        for k in 1..=6 {
            let r = t.f_k(k, 0.5, 1.0) / t.f_k(k, 1.0, 1.0);
            let p = if k % 2 == 0 { k as f64 - 2.0 } else { 2.0 * 0.5 + k as f64 - 1.0 };
            assert!(rel(r, 2f64.powf(p)) < 1e-13);
            assert!(rel(t.f_k(k, 0.5, 3.0) / t.f_k(k, 0.5, 1.0), 9.0) < 1e-13);
        }
    }

    #[test]
    fn converged_series_error() {
        let s = SeparableKernel::paired(0.5, 80).unwrap();
        let e = truncation_error_sup(&s, 1.0, 1.0, DIAM, 40).unwrap();
        assert!(e < 1e-12, "{e}");
    }

    #[test]
    fn short_series_blows_up() {
        let s = SeparableKernel::paired(0.5, 20).unwrap();
        let e = truncation_error_sup(&s, 1.0, 10f64.powf(-1.5), DIAM, 40).unwrap();
        assert!(e > 1e3, "{e}");
    }

    #[test]
    fn bound_values() {
        let b = error_bound(0.5, DIAM, DIAM, 2).unwrap();
        assert!(rel(b, 11.409_549_231_927_306_799) < 1e-13);
        let b = error_bound(0.5, 0.3, DIAM, 40).unwrap();
        assert!(rel(b, 11_974_021_697.719_213_424) < 1e-12);
        let b = error_bound(1.5, 0.1, DIAM, 100).unwrap();
        assert!(rel(b, 3.541_142_318_024_408_643_6e98) < 1e-11);
        assert_eq!(error_bound(0.5, 1e-3, DIAM, 2).unwrap(), f64::INFINITY);
        assert!(error_bound(0.5, 0.3, DIAM, 3).is_err());
    }

    #[test]
    fn bound_decreases_past_zeta_squared() {
        let zeta: f64 = DIAM / 0.3;
        let start = (zeta * zeta).ceil() as usize + 1;
        let start = start + start % 2;
        let mut prev = error_bound(0.5, 0.3, DIAM, start).unwrap();
        for n in (start + 2..200).step_by(2) {
            let b = error_bound(0.5, 0.3, DIAM, n).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(SeparableKernel::paired(0.5, 39).is_err());
        assert!(SeparableKernel::new(0.5, 39).is_ok());
        assert!(SeparableKernel::new(1.0, 4).is_err());
        let s = SeparableKernel::new(0.5, 4).unwrap();
        assert!(linearized_eval(&s, 1.0, 1.0, -1.0).is_err());
    }
}
