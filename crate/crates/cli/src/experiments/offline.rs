use serde_json::json;

use rbgrf::rb::{build_reduced_basis, save_basis};

use super::field_mesh;
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{RunDir, Summary};

pub fn run(cfg: &RunConfig, dir: &RunDir) -> Result<Summary> {
    let mesh = field_mesh(cfg)?;
    let plan = cfg.offline.plan()?;
    let basis = build_reduced_basis(&mesh, &plan, &cfg.offline.options(&cfg.kernel)?)?;
    let target = cfg.offline.dir.clone().unwrap_or_else(|| dir.path("basis"));
    save_basis(&target, &basis, json!({ "offline": cfg.offline, "kernel": cfg.kernel, "seed": cfg.seed }))?;
    let line = format!(
        "offline: {} snapshots x {} modes on {}x{} -> n_rb = {} at {}",
        plan.ell_snaps.len(),
        plan.n_sto,
        mesh.n_side,
        mesh.n_side,
        basis.n_rb,
        target.display()
    );
    Ok(Summary::new(cfg, line, json!({ "n_rb": basis.n_rb, "dir": target, "pod_sv": basis.pod_sv })))
}
