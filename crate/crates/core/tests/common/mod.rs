#![allow(dead_code)]

use faer::Mat;

/// Sample covariance of `draws` (each of length n) against `c`: fraction of entries (i <= j)
/// within `k` standard errors, using `Var(x_i x_j) = c_ii c_jj + c_ij²` for Gaussian draws.
pub fn covariance_within(draws: &[Vec<f64>], c: &Mat<f64>, k: f64) -> f64 {
    let n = c.nrows();
    let m = draws.len() as f64;
    let mut s = Mat::<f64>::zeros(n, n);
    for d in draws {
        for j in 0..n {
            for i in 0..=j {
                s[(i, j)] += d[i] * d[j];
            }
        }
    }
    let (mut ok, mut tot) = (0usize, 0usize);
    for j in 0..n {
        for i in 0..=j {
            let est = s[(i, j)] / m;
            let se = ((c[(i, i)] * c[(j, j)] + c[(i, j)] * c[(i, j)]) / m).sqrt();
            tot += 1;
            if (est - c[(i, j)]).abs() <= k * se + 1e-15 {
                ok += 1;
            }
        }
    }
    ok as f64 / tot as f64
}

/// Asymptotic Kolmogorov-Smirnov p-value for statistic `d` with `n` samples.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let t = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lam * lam).exp();
        p += t;
        if t.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// KS statistic of `xs` against the uniform distribution on `[a, b]`.
pub fn ks_uniform(xs: &mut [f64], a: f64, b: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - a) / (b - a)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_mean_se(xs: &[f64], n_batches: usize) -> (f64, f64) {
    let b = xs.len() / n_batches;
    let means: Vec<f64> = (0..n_batches).map(|k| xs[k * b..(k + 1) * b].iter().sum::<f64>() / b as f64).collect();
    let m = means.iter().sum::<f64>() / n_batches as f64;
    let v = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n_batches - 1) as f64;
    (m, (v / n_batches as f64).sqrt())
}

/// KS statistic of `xs` against the continuous CDF `f`.
pub fn ks_stat(xs: &mut [f64], f: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = f(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}
