//! Per-sample online cost of full and reduced sampling against the field size.

use serde::Serialize;
use serde_json::json;
use std::sync::Arc;

use rbgrf::covariance::HyperParams;
use rbgrf::io::write_csv;
use rbgrf::kl::{LanczosOptions, Solver};
use rbgrf::mesh::build_field_mesh;
use rbgrf::rb::build_reduced_basis;
use rbgrf::rng::stream;
use rbgrf::uq::{full_sample, rb_sample, FullSampler, RbSampler};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{RunDir, Summary};
use crate::timing::{loglog_slope, median_time};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingRow {
    pub n: usize,
    pub n_rb: usize,
    pub full_s: f64,
    pub rb_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingResult {
    pub rows: Vec<TimingRow>,
    pub full_slope: f64,
    pub rb_slope: f64,
}

/// Median time per sample, averaged over the configured lengths. Full sampling uses
/// Lanczos on the matrix-free covariance; reduced sampling includes the lift to the mesh.
pub fn measure(cfg: &RunConfig) -> Result<TimingResult> {
    let t = &cfg.timings;
    let kernel = cfg.kernel.exact();
    let mut rows = Vec::new();
    for &e in &t.exponents {
        let n_side = 1usize << e;
        let mesh = build_field_mesh(n_side)?;
        let n_sto = t.n_sto.min(mesh.n());
        let full = FullSampler::new(mesh.clone(), kernel.clone(), n_sto)?.with_solver(Solver::Lanczos(LanczosOptions::default()));
        let plan = rbgrf::rb::SnapshotPlan { n_sto: cfg.offline.n_sto.min(mesh.n()), ..cfg.offline.plan()? };
        let opts = rbgrf::rb::OfflineOptions { max_rb: Some(t.n_rb), ..cfg.offline.options(&cfg.kernel)? };
        let basis = Arc::new(build_reduced_basis(&mesh, &plan, &opts)?);
        let n_rb = basis.n_rb;
        let rb = RbSampler::new(basis, n_sto.min(n_rb))?;
        let (mut tf, mut tr) = (0.0, 0.0);
        for (k, &ell) in t.ells.iter().enumerate() {
            let tau = HyperParams::new(ell, 1.0);
            let mut i = 0u64;
            tf += median_time(t.warmup, t.runs, || {
                i += 1;
                full_sample(&full, tau, &mut stream(cfg.seed, k as u64, i))?;
                Ok(())
            })?;
            tr += median_time(t.warmup, t.runs, || {
                i += 1;
                rb_sample(&rb, tau, &mut stream(cfg.seed, k as u64, i))?;
                Ok(())
            })?;
        }
        let m = t.ells.len() as f64;
        let row = TimingRow { n: mesh.n(), n_rb, full_s: tf / m, rb_s: tr / m };
        log::info!("N = {}: full {:.3e} s, rb {:.3e} s (n_rb {n_rb})", row.n, row.full_s, row.rb_s);
        rows.push(row);
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let full_slope = loglog_slope(&x, &rows.iter().map(|r| r.full_s).collect::<Vec<_>>());
    let rb_slope = loglog_slope(&x, &rows.iter().map(|r| r.rb_s).collect::<Vec<_>>());
    Ok(TimingResult { rows, full_slope, rb_slope })
}

pub fn run(cfg: &RunConfig, dir: &RunDir) -> Result<Summary> {
    let r = measure(cfg)?;
    write_csv(
        &dir.path("timings.csv"),
        &["n", "n_rb", "full_seconds", "rb_seconds"],
        r.rows.iter().map(|t| vec![t.n as f64, t.n_rb as f64, t.full_s, t.rb_s]),
    )?;
    dir.write_gnuplot(
        "timings.gp",
        "time per sample",
        "set logscale xy\nset xlabel 'N'\nset ylabel 'seconds'\nplot 'timings.csv' using 1:3 with linespoints, '' using 1:4 with linespoints",
    )?;
    let line = format!("timings: log-log slope full {:.2}, reduced {:.2}", r.full_slope, r.rb_slope);
    Ok(Summary::new(cfg, line, json!(r)))
}
