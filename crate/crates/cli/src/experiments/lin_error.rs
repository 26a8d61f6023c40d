//! Sup-error of the separable kernel over term count and smallest correlation length.

use rayon::prelude::*;
use serde_json::json;

use rbgrf::covariance::{truncation_error_sup, SeparableKernel};
use rbgrf::io::write_csv;
use rbgrf::mesh::DIAM;

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{RunDir, Summary};

pub fn sup_error(nu: f64, n_lin: usize, sigma: f64, ell_min: f64, density: usize) -> Result<f64> {
    Ok(truncation_error_sup(&SeparableKernel::new(nu, n_lin)?, sigma, ell_min, DIAM, density)?)
}

pub fn run(cfg: &RunConfig, dir: &RunDir) -> Result<Summary> {
    let c = &cfg.lin_error;
    let nu = cfg.kernel.nu;
    let ells: Vec<f64> = (0..c.n_ell)
        .map(|i| {
            let t = if c.n_ell == 1 { 0.0 } else { i as f64 / (c.n_ell - 1) as f64 };
            10f64.powf(c.log10_ell_min + t * (c.log10_ell_max - c.log10_ell_min))
        })
        .collect();
    let grid: Vec<(usize, f64)> = (1..=c.n_lin_max).flat_map(|l| ells.iter().map(move |&e| (l, e))).collect();
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&(l, e)| Ok(vec![l as f64, e, sup_error(nu, l, c.sigma, e, c.density)?]))
        .collect::<Result<_>>()?;
    write_csv(&dir.path("lin_error.csv"), &["n_lin", "ell_min", "error"], rows)?;
    dir.write_gnuplot(
        "lin_error.gp",
        "linearisation error",
        "set logscale y\nset logscale x\nset xlabel 'ell_min'\nset ylabel 'sup error'\n\
         plot for [L in '1 10 20 39 60 100'] 'lin_error.csv' using (column(1)==value(L) ? column(2) : 1/0):3 with lines title 'L='.L",
    )?;
    let l = c.report_n_lin;
    let e01 = sup_error(nu, l, c.sigma, 0.1, c.density)?;
    let e03 = sup_error(nu, l, c.sigma, 0.3, c.density)?;
    let line = format!("lin_error: {} points; L = {l}: sup error {e01:.3e} (ell_min 0.1), {e03:.3e} (ell_min 0.3)", grid.len());
    Ok(Summary::new(cfg, line, json!({ "n_lin": l, "ell_min_0.1": e01, "ell_min_0.3": e03 })))
}
