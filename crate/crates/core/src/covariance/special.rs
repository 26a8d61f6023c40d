use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// `(ln|Gamma(x)|, sign(Gamma(x)))` for real non-integer-or-positive `x`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (ln_gamma(x), 1.0);
    }
    // Gamma(x) = pi / (sin(pi x) Gamma(1 - x))
    let s = (PI * x).sin();
    assert!(s != 0.0, "Gamma has a pole at {x}");
    (PI.ln() - s.abs().ln() - ln_gamma(1.0 - x), s.signum())
}

pub fn is_integer(x: f64) -> bool {
    x.fract() == 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection() {
        // Gamma(-0.5) = -2 sqrt(pi)
        let (l, s) = ln_gamma_signed(-0.5);
        assert_eq!(s, -1.0);
        assert!((l.exp() - 2.0 * PI.sqrt()).abs() < 1e-13);
        // Gamma(-1.5) = 4 sqrt(pi) / 3
        let (l, s) = ln_gamma_signed(-1.5);
        assert_eq!(s, 1.0);
        assert!((l.exp() - 4.0 * PI.sqrt() / 3.0).abs() < 1e-13);
        let (l, s) = ln_gamma_signed(5.0);
        assert_eq!(s, 1.0);
        assert!((l - 24f64.ln()).abs() < 1e-13);
    }
}
