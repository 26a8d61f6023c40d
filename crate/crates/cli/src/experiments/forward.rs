//! Forward Monte Carlo of the flow-cell outflow, repeated to measure estimator spread.

use serde::Serialize;
use serde_json::json;

use rbgrf::fem::{Bc, FemProblem, Source};
use rbgrf::io::write_csv;
use rbgrf::uq::{mc_forward, spread, ForwardSummary, PriorModel, Spread};

use super::{field_mesh, prior_model};
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{RunDir, Summary};

#[derive(Debug, Clone, Serialize)]
pub struct ForwardResult {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub mean: Spread,
    pub variance: Spread,
}

fn write_samples(dir: &RunDir, rep: usize, s: &ForwardSummary) -> Result<()> {
    write_csv(
        &dir.path(&format!("samples_rep{rep}.csv")),
        &["sample", "ell", "sigma", "q"],
        s.samples.iter().map(|x| vec![x.index as f64, x.ell, x.sigma, x.q]),
    )?;
    Ok(())
}

/// `repetitions` independent runs on chains `0..repetitions`. Samples of every run are
/// written, including the completed prefix of a failing one.
pub fn repeated(cfg: &RunConfig, model: &dyn PriorModel, fem: &FemProblem, dir: Option<&RunDir>) -> Result<ForwardResult> {
    let prior = cfg.prior.resolve()?;
    let qoi = |theta: &[f64]| fem.outflow_qoi(theta, &fem.solve(theta)?);
    let (mut means, mut variances) = (Vec::new(), Vec::new());
    for r in 0..cfg.mc.repetitions {
        let out = mc_forward(&prior, model, qoi, cfg.mc.n_samples, cfg.seed, r as u64)?;
        if let Some(d) = dir {
            write_samples(d, r, &out.summary)?;
            if r == 0 {
                write_csv(&d.path("ecdf.csv"), &["q", "f"], out.summary.ecdf().into_iter().map(|(q, f)| vec![q, f]))?;
            }
        }
        let s = out.into_result()?;
        log::info!("repetition {r}: mean {:.6}, variance {:.6}", s.mean, s.variance);
        means.push(s.mean);
        variances.push(s.variance);
    }
    Ok(ForwardResult { mean: spread(&means)?, variance: spread(&variances)?, means, variances })
}

pub fn run(cfg: &RunConfig, dir: &RunDir) -> Result<Summary> {
    let mesh = field_mesh(cfg)?;
    let fem = FemProblem::new(cfg.mesh.fem_n_side, &mesh, Bc::FlowCell, Source::Zero)?;
    let model = prior_model(cfg, &mesh)?;
    let r = repeated(cfg, model.as_ref(), &fem, Some(dir))?;
    write_csv(
        &dir.path("repetitions.csv"),
        &["rep", "mean", "variance"],
        r.means.iter().zip(&r.variances).enumerate().map(|(i, (m, v))| vec![i as f64, *m, *v]),
    )?;
    dir.write_gnuplot("ecdf.gp", "empirical CDF of the outflow", "set xlabel 'Q'\nplot 'ecdf.csv' using 1:2 with steps")?;
    let line = format!(
        "forward_53: mean {:.6} (CoV {:.4}), variance {:.6} (CoV {:.4}) over {} repetitions",
        r.mean.mean, r.mean.cov, r.variance.mean, r.variance.cov, r.means.len()
    );
    Ok(Summary::new(cfg, line, json!(r)))
}
