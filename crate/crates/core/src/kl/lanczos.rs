//! Thick-restart Lanczos with full reorthogonalisation for the leading eigenpairs of a
//! symmetric operator given only through products.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, fix_signs, sym_eig_desc, EigPairs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Relative residual `‖A x - θ x‖ / |θ_1|` required for every wanted pair.
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov dimension; `None` means `min(n, 2k + 20)`.
    pub krylov_dim: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-10, max_restarts: 300, krylov_dim: None }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub pairs: EigPairs,
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub matvecs: usize,
}

fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64], coeffs: &mut [f64]) {
    // Two passes of classical Gram-Schmidt.
    for c in coeffs.iter_mut() {
        *c = 0.0;
    }
    for _ in 0..2 {
        for (i, v) in basis.iter().enumerate() {
            let c = dot(v, w);
            coeffs[i] += c;
            for (x, y) in w.iter_mut().zip(v) {
                *x -= c * y;
            }
        }
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut scratch = vec![0.0; basis.len()];
    for _ in 0..5 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(basis, &mut v, &mut scratch);
        let nv = dot(&v, &v).sqrt();
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// Leading `k` eigenpairs (descending) of the symmetric operator `apply` on `R^n`.
pub fn lanczos<F>(apply: F, n: usize, k: usize, opts: LanczosOptions) -> Result<LanczosResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    if k == 0 || k > n {
        return Err(Error::invalid(format!("requested {k} eigenpairs of an operator of size {n}")));
    }
    let m = opts.krylov_dim.unwrap_or(2 * k + 20).min(n).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(random_unit(n, &mut rng, &[]).expect("nonzero start vector"));
    // Projected matrix, stored dense (m × m); only the leading `basis.len()` block is live.
    let mut hmat = vec![vec![0.0; m]; m];
    let mut w = vec![0.0; n];
    let mut coeffs = vec![0.0; m + 1];
    let mut matvecs = 0;
    let mut start = 0;
    let mut restarts = 0;

    loop {
        let mut beta_last = 0.0;
        let mut next: Option<Vec<f64>> = None;
        for j in start..m {
            apply(&basis[j], &mut w);
            matvecs += 1;
            orthogonalize(&basis, &mut w, &mut coeffs[..basis.len()]);
            for i in 0..=j {
                hmat[i][j] = coeffs[i];
            }
            let beta = dot(&w, &w).sqrt();
            let scale = hmat[j][j].abs().max(1e-300);
            let v = if beta > 1e-12 * scale {
                Some(w.iter().map(|x| x / beta).collect::<Vec<_>>())
            } else {
                None
            };
            if j + 1 == m {
                beta_last = if v.is_some() { beta } else { 0.0 };
                next = v;
                break;
            }
            match v {
                Some(v) => {
                    hmat[j + 1][j] = beta;
                    basis.push(v);
                }
                None => {
                    // Invariant subspace: continue with a fresh orthogonal direction.
                    hmat[j + 1][j] = 0.0;
                    match random_unit(n, &mut rng, &basis) {
                        Some(v) => basis.push(v),
                        None => return Err(Error::numerical("lanczos could not extend the basis")),
                    }
                }
            }
        }

        let h = Mat::from_fn(m, m, |i, j| 0.5 * (hmat[i][j] + hmat[j][i]));
        let ritz = sym_eig_desc(h.as_ref())?;
        let theta1 = ritz.values[0].abs().max(1e-300);
        let residuals: Vec<f64> = (0..m).map(|i| (beta_last * ritz.vectors[(m - 1, i)]).abs() / theta1).collect();
        let converged = residuals[..k].iter().all(|&r| r <= opts.tol);

        if converged || m == n || restarts >= opts.max_restarts {
            let mut vectors = Mat::zeros(n, k);
            for c in 0..k {
                let out = vectors.col_as_slice_mut(c);
                for (i, b) in basis.iter().enumerate() {
                    let y = ritz.vectors[(i, c)];
                    for (o, x) in out.iter_mut().zip(b) {
                        *o += y * x;
                    }
                }
            }
            fix_signs(&mut vectors);
            let pairs = EigPairs { values: ritz.values[..k].to_vec(), vectors };
            let res = residuals[..k].to_vec();
            if !converged && m < n {
                let worst = res.iter().cloned().fold(0.0, f64::max);
                return Err(Error::numerical(format!(
                    "lanczos did not converge after {restarts} restarts (worst relative residual {worst:.3e})"
                )));
            }
            return Ok(LanczosResult { pairs, residuals: res, restarts, matvecs });
        }

        // Thick restart: keep p Ritz vectors plus the residual direction.
        let p = (k + (m - k) / 3).clamp(k, m - 1);
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        for c in 0..p {
            let mut v = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                let y = ritz.vectors[(i, c)];
                for (o, x) in v.iter_mut().zip(b) {
                    *o += y * x;
                }
            }
            kept.push(v);
        }
        let next = match next {
            Some(v) => v,
            None => random_unit(n, &mut rng, &kept).ok_or_else(|| Error::numerical("lanczos restart failed"))?,
        };
        for row in hmat.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for c in 0..p {
            hmat[c][c] = ritz.values[c];
            hmat[p][c] = beta_last * ritz.vectors[(m - 1, c)];
        }
        kept.push(next);
        basis = kept;
        start = p;
        restarts += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matvec;

    #[test]
    fn diagonal_operator() {
        let n = 200;
        let d: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let r = lanczos(
            |x, y| {
                for i in 0..n {
                    y[i] = d[i] * x[i];
                }
            },
            n,
            10,
            LanczosOptions::default(),
        )
        .unwrap();
        for i in 0..10 {
            assert!((r.pairs.values[i] - d[i]).abs() < 1e-10);
            assert!((r.pairs.vectors[(i, i)] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn dense_random_symmetric() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = Mat::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let a = Mat::from_fn(n, n, |i, j| (0..n).map(|l| b[(i, l)] * b[(j, l)]).sum::<f64>());
        let r = lanczos(|x, y| y.copy_from_slice(&matvec(a.as_ref(), x)), n, 5, LanczosOptions::default()).unwrap();
        let full = sym_eig_desc(a.as_ref()).unwrap();
        for i in 0..5 {
            assert!((r.pairs.values[i] - full.values[i]).abs() < 1e-9 * full.values[0]);
        }
    }

    #[test]
    fn rejects_oversized_request() {
        assert!(lanczos(|x, y| y.copy_from_slice(x), 3, 4, LanczosOptions::default()).is_err());
    }
}
