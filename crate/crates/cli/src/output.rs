use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::Result;

/// Output directory of one run.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Resolved config plus crate version. No timestamps, so equal configs give equal bytes.
    pub fn write_manifest(&self, cfg: &RunConfig) -> Result<()> {
        let m = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": cfg.experiment.name(),
            "config": cfg,
        });
        self.write_json("manifest.json", &m)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        fs::write(self.path(name), s)?;
        Ok(())
    }

    /// Gnuplot script next to a CSV; `body` is the plot command(s).
    pub fn write_gnuplot(&self, name: &str, title: &str, body: &str) -> Result<()> {
        let png = Path::new(name).with_extension("png");
        let text = format!(
            "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{}'\nset title '{title}'\nset key autotitle columnhead\n{body}\n",
            png.display()
        );
        fs::write(self.path(name), text)?;
        Ok(())
    }
}

/// Everything a run reports: a one-line summary and structured values.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub line: String,
    pub values: Value,
}

impl Summary {
    pub fn new(cfg: &RunConfig, line: impl Into<String>, values: Value) -> Self {
        Summary { experiment: cfg.experiment.name().into(), line: line.into(), values }
    }
}
