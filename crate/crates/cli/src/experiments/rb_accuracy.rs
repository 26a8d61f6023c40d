//! Relative eigenvalue errors of the reduced problem against full eigensolves, as the
//! basis grows.

use serde::Serialize;
use serde_json::json;

use rbgrf::covariance::{GridCovariance, HyperParams};
use rbgrf::io::write_csv;
use rbgrf::kl::eigs_grid;
use rbgrf::rb::{reduced_eigs, ReducedBasis};

use super::{field_mesh, rel_err};
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{RunDir, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub n_rb: usize,
    pub ell: f64,
    /// 1-based.
    pub index: usize,
    pub rel_error: f64,
}

/// Errors for every basis size in `sizes` (capped at the basis dimension), length in `ells`
/// and eigenvalue index in `indices`. Indices beyond a basis size are skipped.
pub fn accuracy_table(cfg: &RunConfig, basis: &ReducedBasis, ells: &[f64], indices: &[usize], sizes: &[usize]) -> Result<Vec<AccuracyRow>> {
    let mesh = field_mesh(cfg)?;
    let kmax = *indices.iter().max().unwrap_or(&1);
    let mut rows = Vec::new();
    for &ell in ells {
        let tau = HyperParams::new(ell, 1.0);
        let full = eigs_grid(&GridCovariance::from_kernel(&mesh, &cfg.kernel.exact(), tau), &mesh, kmax.min(mesh.n()))?;
        for &n in sizes {
            let n = n.min(basis.n_rb);
            let k = kmax.min(n);
            let b = basis.truncated(n)?;
            let red = reduced_eigs(&b, tau, k)?;
            for &i in indices.iter().filter(|&&i| i <= red.n_sto() && i <= full.eigvals.len()) {
                rows.push(AccuracyRow { n_rb: n, ell, index: i, rel_error: rel_err(red.eigvals[i - 1], full.eigvals[i - 1]) });
            }
        }
    }
    Ok(rows)
}

pub fn run(cfg: &RunConfig, dir: &RunDir) -> Result<Summary> {
    let c = &cfg.rb_accuracy;
    let mesh = field_mesh(cfg)?;
    let basis = super::reduced_basis(cfg, &mesh)?;
    let mut sizes: Vec<usize> = c.n_rb.iter().map(|&n| n.min(basis.n_rb)).collect();
    sizes.dedup();
    let rows = accuracy_table(cfg, &basis, &c.ells, &c.indices, &sizes)?;
    write_csv(
        &dir.path("rb_accuracy.csv"),
        &["n_rb", "ell", "index", "rel_error"],
        rows.iter().map(|r| vec![r.n_rb as f64, r.ell, r.index as f64, r.rel_error]),
    )?;
    dir.write_gnuplot(
        "rb_accuracy.gp",
        "reduced eigenvalue error",
        "set logscale xy\nset xlabel 'N_RB'\nset ylabel 'relative error'\n\
         plot 'rb_accuracy.csv' using 1:(column(3)==1 ? column(4) : 1/0) title 'lambda_1', \\\n\
         '' using 1:(column(3)==10 ? column(4) : 1/0) title 'lambda_10', \\\n\
         '' using 1:(column(3)==100 ? column(4) : 1/0) title 'lambda_100'",
    )?;
    let worst = rows.iter().filter(|r| r.n_rb == *sizes.last().unwrap()).map(|r| r.rel_error).fold(0.0, f64::max);
    let line = format!("rb_accuracy: n_rb = {}, largest relative error at the biggest basis {worst:.3e}", basis.n_rb);
    Ok(Summary::new(cfg, line, json!({ "n_rb": basis.n_rb, "rows": rows })))
}
