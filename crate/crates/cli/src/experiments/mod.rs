//! One driver per experiment. Each writes its artifacts into the run directory and returns
//! the summary; `run` adds the manifest and `summary.json`.

pub mod bayes;
pub mod forward;
pub mod lin_error;
pub mod offline;
pub mod rb_accuracy;
pub mod timings;
pub mod verify;

use std::sync::Arc;

use rbgrf::mesh::{build_field_mesh, FieldMesh};
use rbgrf::rb::{build_reduced_basis, load_basis, ReducedBasis};
use rbgrf::uq::{FullSampler, PriorModel, RbSampler};

use crate::config::{Experiment, RunConfig, SamplerKind};
use crate::error::{CliError, Result};
use crate::output::{RunDir, Summary};

pub fn run(cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    let dir = RunDir::create(&cfg.out)?;
    dir.write_manifest(cfg)?;
    let summary = match cfg.experiment {
        Experiment::LinError => lin_error::run(cfg, &dir)?,
        Experiment::RbAccuracy => rb_accuracy::run(cfg, &dir)?,
        Experiment::Timings => timings::run(cfg, &dir)?,
        Experiment::Verify => verify::run(cfg, &dir)?,
        Experiment::Forward => forward::run(cfg, &dir)?,
        Experiment::BayesPde | Experiment::BayesField => bayes::run(cfg, &dir)?,
        Experiment::Offline => offline::run(cfg, &dir)?,
    };
    dir.write_json("summary.json", &summary)?;
    Ok(summary)
}

pub fn field_mesh(cfg: &RunConfig) -> Result<FieldMesh> {
    Ok(build_field_mesh(cfg.mesh.field_n_side)?)
}

/// The configured artifact, or a fresh offline phase from `[offline]`.
pub fn reduced_basis(cfg: &RunConfig, mesh: &FieldMesh) -> Result<Arc<ReducedBasis>> {
    let basis = match &cfg.sampler.basis {
        Some(path) => {
            let (b, _) = load_basis(path)?;
            if b.n_side != mesh.n_side {
                return Err(CliError::config(format!(
                    "sampler.basis was built on a {0}x{0} mesh, the run uses {1}x{1}",
                    b.n_side, mesh.n_side
                )));
            }
            b
        }
        None => {
            log::info!("building reduced basis on {}x{}", mesh.n_side, mesh.n_side);
            build_reduced_basis(mesh, &cfg.offline.plan()?, &cfg.offline.options(&cfg.kernel)?)?
        }
    };
    log::info!("reduced basis: n_rb = {}", basis.n_rb);
    Ok(Arc::new(basis))
}

pub fn full_sampler(cfg: &RunConfig, mesh: &FieldMesh, n_sto: usize) -> Result<FullSampler> {
    Ok(FullSampler::new(mesh.clone(), cfg.kernel.exact(), n_sto)?.with_solver(cfg.sampler.full_solver.solver()))
}

/// Field model selected by `[sampler]`.
pub fn prior_model(cfg: &RunConfig, mesh: &FieldMesh) -> Result<Box<dyn PriorModel>> {
    let n_sto = cfg.n_sto()?;
    Ok(match cfg.sampler.kind {
        SamplerKind::Full => Box::new(full_sampler(cfg, mesh, n_sto)?),
        SamplerKind::Rb => {
            let basis = reduced_basis(cfg, mesh)?;
            if cfg.sampler.full_rank {
                Box::new(RbSampler::full_rank(basis)?)
            } else {
                let n = n_sto.min(basis.n_rb);
                if n < n_sto {
                    log::warn!("n_sto = {n_sto} exceeds n_rb = {}; using {n}", basis.n_rb);
                }
                Box::new(RbSampler::new(basis, n)?)
            }
        }
    })
}

pub(crate) fn rel_err(a: f64, reference: f64) -> f64 {
    ((a - reference) / reference).abs()
}
