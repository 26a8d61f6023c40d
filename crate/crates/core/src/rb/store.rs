//! On-disk reduced basis: `manifest.json`, `w.bin` and `c_rb_XX.bin` in one directory.
//! The manifest is written last, so a directory without one is incomplete.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::online::ReducedBasis;
use super::pod::Pod;
use crate::covariance::SeparableKernel;
use crate::error::{Error, Result};
use crate::io::{read_matrix, write_matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_rb: usize,
    pub lambda_min: f64,
    pub snapshot_ells: Vec<f64>,
    pub snapshot_n_sto: usize,
    pub n_side: usize,
    pub snapshot_kernel: String,
    pub separable: SeparableKernel,
    pub pod_sv: Vec<f64>,
    pub components: Vec<String>,
    #[serde(default)]
    pub extra: serde_json::Value,
}

fn component_name(k: usize) -> String {
    format!("c_rb_{k:02}.bin")
}

pub fn save_basis(dir: &Path, basis: &ReducedBasis, extra: serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        std::fs::remove_file(&manifest_path)?;
    }
    write_matrix(&dir.join("w.bin"), &basis.w)?;
    let mut names = Vec::with_capacity(basis.components.len());
    for (k, c) in basis.components.iter().enumerate() {
        let name = component_name(k + 1);
        write_matrix(&dir.join(&name), c)?;
        names.push(name);
    }
    let m = Manifest {
        n_rb: basis.n_rb,
        lambda_min: basis.lambda_min,
        snapshot_ells: basis.snapshot_ells.clone(),
        snapshot_n_sto: basis.snapshot_n_sto,
        n_side: basis.n_side,
        snapshot_kernel: basis.snapshot_kernel.clone(),
        separable: basis.kernel,
        pod_sv: basis.pod_sv.clone(),
        components: names,
        extra,
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

pub fn load_basis(dir: &Path) -> Result<(ReducedBasis, Manifest)> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(Error::invalid(format!("{} has no manifest; run the offline phase first", dir.display())));
    }
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    let w = read_matrix(&dir.join("w.bin"))?;
    if w.ncols() != m.n_rb || w.nrows() != m.n_side * m.n_side {
        return Err(Error::invalid("w.bin does not match the manifest"));
    }
    let components = m
        .components
        .iter()
        .map(|name| {
            let c = read_matrix(&dir.join(name))?;
            if c.nrows() != m.n_rb || c.ncols() != m.n_rb {
                return Err(Error::invalid(format!("{name} has the wrong shape")));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let pod = Pod { w, sv: m.pod_sv.clone(), lambda_min: m.lambda_min };
    let basis = ReducedBasis::new(
        pod,
        components,
        m.separable,
        m.snapshot_ells.clone(),
        m.snapshot_n_sto,
        m.n_side,
        m.snapshot_kernel.clone(),
    );
    Ok((basis, m))
}
