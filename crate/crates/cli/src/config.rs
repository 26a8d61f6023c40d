//! Run configuration: one TOML file with a section per concern. Every section has defaults,
//! so a file only needs the `experiment` key and whatever differs from them.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use rbgrf::covariance::{Kernel, SeparableKernel};
use rbgrf::kl::{LanczosOptions, Solver};
use rbgrf::mesh::DIAM;
use rbgrf::rb::{snapshot_grid, OfflineOptions, SnapshotPlan};
use rbgrf::uq::{HyperPrior, Preset};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "lin_error")]
    LinError,
    #[serde(rename = "rb_accuracy")]
    RbAccuracy,
    #[serde(rename = "timings")]
    Timings,
    #[serde(rename = "verify_52")]
    Verify,
    #[serde(rename = "forward_53")]
    Forward,
    #[serde(rename = "bayes_pde_54")]
    BayesPde,
    #[serde(rename = "bayes_field_55")]
    BayesField,
    #[serde(rename = "offline")]
    Offline,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::LinError => "lin_error",
            Experiment::RbAccuracy => "rb_accuracy",
            Experiment::Timings => "timings",
            Experiment::Verify => "verify_52",
            Experiment::Forward => "forward_53",
            Experiment::BayesPde => "bayes_pde_54",
            Experiment::BayesField => "bayes_field_55",
            Experiment::Offline => "offline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses the available parallelism.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub offline: OfflineConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default)]
    pub bayes: BayesConfig,
    #[serde(default)]
    pub lin_error: LinErrorConfig,
    #[serde(default)]
    pub rb_accuracy: RbAccuracyConfig,
    #[serde(default)]
    pub timings: TimingsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub field_n_side: usize,
    pub fem_n_side: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { field_n_side: 32, fem_n_side: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub nu: f64,
    /// Flattened number of separable terms.
    pub n_lin: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { nu: 0.5, n_lin: 40 }
    }
}

impl KernelConfig {
    pub fn exact(&self) -> Kernel {
        if self.nu == 0.5 {
            Kernel::Exponential
        } else {
            Kernel::Matern { nu: self.nu }
        }
    }

    pub fn separable(&self) -> Result<SeparableKernel> {
        Ok(SeparableKernel::new(self.nu, self.n_lin)?)
    }
}

/// A named preset with optional overrides of single fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub preset: String,
    pub ell_min: Option<f64>,
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    pub m_sigma: Option<f64>,
    pub var_sigma: Option<f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            preset: "verification".into(),
            ell_min: None,
            sigma_min: None,
            sigma_max: None,
            m_sigma: None,
            var_sigma: None,
        }
    }
}

impl PriorConfig {
    pub fn preset(&self) -> Result<Preset> {
        Preset::from_name(&self.preset).map_err(|e| CliError::config(format!("prior.preset: {e}")))
    }

    pub fn resolve(&self) -> Result<HyperPrior> {
        let mut p = self.preset()?.prior();
        if let Some(v) = self.ell_min {
            p.ell_min = v;
        }
        if let Some(v) = self.sigma_min {
            p.sigma_min = v;
        }
        if let Some(v) = self.sigma_max {
            p.sigma_max = v;
        }
        if let Some(v) = self.m_sigma {
            p.m_sigma = v;
        }
        if let Some(v) = self.var_sigma {
            p.var_sigma = v;
        }
        p.validate().map_err(|e| CliError::config(format!("prior: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Full,
    Rb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullSolver {
    Symmetric,
    Lanczos,
    Dense,
}

impl FullSolver {
    pub fn solver(self) -> Solver {
        match self {
            FullSolver::Symmetric => Solver::Symmetric,
            FullSolver::Lanczos => Solver::Lanczos(LanczosOptions::default()),
            FullSolver::Dense => Solver::Dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// KL terms; defaults to the preset's value.
    pub n_sto: Option<usize>,
    /// Offline artifact to load; without it the basis is built from `[offline]`.
    pub basis: Option<PathBuf>,
    pub full_solver: FullSolver,
    /// Keep every reduced eigenpair (used by the MCMC drivers).
    pub full_rank: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { kind: SamplerKind::Rb, n_sto: None, basis: None, full_solver: FullSolver::Symmetric, full_rank: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfflineConfig {
    /// Explicit snapshot lengths; otherwise `n_snap` inverse-equidistant points on `[ell_min, ell_max]`.
    pub snapshots: Option<Vec<f64>>,
    pub n_snap: usize,
    pub ell_min: f64,
    pub ell_max: f64,
    pub n_sto: usize,
    pub lambda_min: f64,
    pub max_rb: Option<usize>,
    /// Output directory of the `offline` experiment; defaults to `<out>/basis`.
    pub dir: Option<PathBuf>,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        OfflineConfig {
            snapshots: None,
            n_snap: 4,
            ell_min: 0.322,
            ell_max: DIAM,
            n_sto: 100,
            lambda_min: 1e-10,
            max_rb: None,
            dir: None,
        }
    }
}

impl OfflineConfig {
    pub fn plan(&self) -> Result<SnapshotPlan> {
        let ell_snaps = match &self.snapshots {
            Some(s) => s.clone(),
            None => snapshot_grid(self.ell_min, self.ell_max, self.n_snap)?,
        };
        let plan = SnapshotPlan { ell_snaps, n_sto: self.n_sto };
        let lo = plan.ell_snaps.iter().cloned().fold(f64::INFINITY, f64::min);
        plan.validate(lo).map_err(|e| CliError::config(format!("offline: {e}")))?;
        Ok(plan)
    }

    pub fn options(&self, kernel: &KernelConfig) -> Result<OfflineOptions> {
        Ok(OfflineOptions {
            snapshot_kernel: kernel.exact(),
            separable: kernel.separable()?,
            lambda_min: self.lambda_min,
            max_rb: self.max_rb,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_samples: usize,
    pub repetitions: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_samples: 10_000, repetitions: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub n_steps: usize,
    pub burn_in: usize,
    pub beta: f64,
    pub chains: usize,
    /// Initial lengths, one per chain; empty spreads them over the prior range.
    pub init_ell: Vec<f64>,
    /// Initial sigma for every chain; defaults to the prior's `m_sigma` clamped to its support.
    pub init_sigma: Option<f64>,
    pub step_ell: Option<f64>,
    pub step_sigma: Option<f64>,
    pub monitor: Vec<usize>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_steps: 20_000,
            burn_in: 0,
            beta: 0.1,
            chains: 5,
            init_ell: Vec::new(),
            init_sigma: None,
            step_ell: None,
            step_sigma: None,
            monitor: vec![1, 10, 100],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BayesConfig {
    /// `γ²` of the likelihood.
    pub noise_var: f64,
    /// Observations on the interior lattice `(i/m, j/m)`, i, j = 1..m-1.
    pub obs_lattice: usize,
    /// Factor applied to field observations.
    pub field_scale: f64,
    /// Constant data value; otherwise data come from a synthetic truth.
    pub data_value: Option<f64>,
    pub truth_ell: f64,
    /// Defaults to the prior's `m_sigma`.
    pub truth_sigma: Option<f64>,
    pub truth_n_sto: usize,
    pub truth_seed: u64,
    /// Variance of the noise added to synthetic data.
    pub data_noise_var: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig {
            noise_var: 1e-3,
            obs_lattice: 8,
            field_scale: 1.0,
            data_value: None,
            truth_ell: 0.5,
            truth_sigma: None,
            truth_n_sto: 100,
            truth_seed: 0,
            data_noise_var: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinErrorConfig {
    pub n_lin_max: usize,
    pub n_ell: usize,
    pub log10_ell_min: f64,
    pub log10_ell_max: f64,
    /// Grid points per axis of the sup search.
    pub density: usize,
    pub sigma: f64,
    /// Term count reported in the summary.
    pub report_n_lin: usize,
}

impl Default for LinErrorConfig {
    fn default() -> Self {
        LinErrorConfig { n_lin_max: 100, n_ell: 31, log10_ell_min: -1.5, log10_ell_max: 1.5, density: 60, sigma: 1.0, report_n_lin: 39 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbAccuracyConfig {
    pub ells: Vec<f64>,
    /// 1-based eigenvalue indices.
    pub indices: Vec<usize>,
    pub n_rb: Vec<usize>,
}

impl Default for RbAccuracyConfig {
    fn default() -> Self {
        RbAccuracyConfig { ells: vec![0.1, 0.5, 1.4], indices: vec![1, 10, 100], n_rb: (1..=13).map(|k| 1 << k).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingsConfig {
    /// Field sizes `N = 4^e`.
    pub exponents: Vec<u32>,
    pub n_rb: usize,
    pub n_sto: usize,
    pub ells: Vec<f64>,
    pub warmup: usize,
    pub runs: usize,
}

impl Default for TimingsConfig {
    fn default() -> Self {
        TimingsConfig { exponents: vec![4, 5, 6, 7], n_rb: 256, n_sto: 100, ells: vec![0.5], warmup: 3, runs: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub lambda_mins: Vec<f64>,
    pub reference_samples: usize,
    /// Prior draws for the mean covariance error.
    pub cov_draws: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { lambda_mins: vec![1e-1, 1e-5, 1e-9], reference_samples: 100_000, cov_draws: 1000 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Minimal config for `experiment` with every default.
    pub fn new(experiment: Experiment) -> Self {
        RunConfig {
            experiment,
            seed: 0,
            threads: None,
            out: default_out(),
            mesh: MeshConfig::default(),
            kernel: KernelConfig::default(),
            prior: PriorConfig::default(),
            sampler: SamplerConfig::default(),
            offline: OfflineConfig::default(),
            mc: McConfig::default(),
            mcmc: McmcConfig::default(),
            bayes: BayesConfig::default(),
            lin_error: LinErrorConfig::default(),
            rb_accuracy: RbAccuracyConfig::default(),
            timings: TimingsConfig::default(),
            verify: VerifyConfig::default(),
        }
    }

    pub fn n_sto(&self) -> Result<usize> {
        Ok(self.sampler.n_sto.unwrap_or(self.prior.preset()?.n_sto()))
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };
        let m = &self.mesh;
        check((1..=1024).contains(&m.field_n_side), format!("mesh.field_n_side = {} must lie in 1..=1024", m.field_n_side));
        check((1..=1024).contains(&m.fem_n_side), format!("mesh.fem_n_side = {} must lie in 1..=1024", m.fem_n_side));
        let k = &self.kernel;
        check(k.nu > 0.0 && k.nu.is_finite(), format!("kernel.nu = {} must be positive", k.nu));
        check(k.n_lin >= 1, "kernel.n_lin must be at least 1".into());
        if let Err(CliError::Config(v)) = self.prior.resolve() {
            v.into_iter().for_each(|m| check(false, m));
        }
        let n_cells = m.field_n_side * m.field_n_side;
        use Experiment::*;
        let full_rank = self.sampler.kind == SamplerKind::Rb && self.sampler.full_rank;
        let uses_sampler = matches!(self.experiment, Verify | Forward | BayesPde | BayesField) && !full_rank;
        let bayes = matches!(self.experiment, BayesPde | BayesField);
        let offline_on_mesh = !matches!(self.experiment, LinError | Timings);
        if let (true, Ok(n)) = (uses_sampler, self.n_sto()) {
            check(n >= 1 && n <= n_cells, format!("sampler.n_sto = {n} must lie in 1..={n_cells}"));
        }
        if let Some(p) = &self.sampler.basis {
            check(p.join("manifest.json").is_file(), format!("sampler.basis: no offline artifact at {}", p.display()));
        }
        let o = &self.offline;
        if let Some(s) = &o.snapshots {
            check(!s.is_empty(), "offline.snapshots must not be empty".into());
            check(s.iter().all(|&l| l > 0.0 && l <= DIAM * (1.0 + 1e-12)), format!("offline.snapshots must lie in (0, {DIAM}]"));
            check(s.windows(2).all(|w| w[1] < w[0]), "offline.snapshots must be strictly decreasing".into());
        } else {
            check(o.n_snap >= 1, "offline.n_snap must be at least 1".into());
            check(o.ell_min > 0.0 && o.ell_min < o.ell_max, format!("offline.ell_min = {} must lie in (0, ell_max)", o.ell_min));
            check(o.ell_max <= DIAM * (1.0 + 1e-12), format!("offline.ell_max = {} exceeds the diameter", o.ell_max));
        }
        check(o.n_sto >= 1, "offline.n_sto must be positive".into());
        if offline_on_mesh {
            check(o.n_sto <= n_cells, format!("offline.n_sto = {} exceeds the {n_cells} field cells", o.n_sto));
        }
        check(o.lambda_min >= 0.0 && o.lambda_min.is_finite(), format!("offline.lambda_min = {} must be >= 0", o.lambda_min));
        check(o.max_rb != Some(0), "offline.max_rb must be positive".into());
        check(self.mc.n_samples >= 2, "mc.n_samples must be at least 2".into());
        check(self.mc.repetitions >= 1, "mc.repetitions must be at least 1".into());
        let c = &self.mcmc;
        check(c.n_steps >= 1, "mcmc.n_steps must be positive".into());
        check(c.burn_in < c.n_steps, format!("mcmc.burn_in = {} must be below n_steps = {}", c.burn_in, c.n_steps));
        check(c.beta > 0.0 && c.beta <= 1.0, format!("mcmc.beta = {} must lie in (0, 1]", c.beta));
        check(c.chains >= 1, "mcmc.chains must be at least 1".into());
        check(c.init_ell.is_empty() || c.init_ell.len() == c.chains, "mcmc.init_ell needs one value per chain".into());
        check(c.step_ell.map_or(true, |s| s >= 0.0), "mcmc.step_ell must be nonnegative".into());
        check(c.step_sigma.map_or(true, |s| s >= 0.0), "mcmc.step_sigma must be nonnegative".into());
        check(!c.monitor.contains(&0), "mcmc.monitor indices are 1-based".into());
        let b = &self.bayes;
        check(b.noise_var > 0.0, format!("bayes.noise_var = {} must be positive", b.noise_var));
        check(b.obs_lattice >= 2, "bayes.obs_lattice must be at least 2".into());
        check(b.field_scale > 0.0 && b.field_scale.is_finite(), "bayes.field_scale must be positive".into());
        check(b.truth_ell > 0.0, "bayes.truth_ell must be positive".into());
        check(b.truth_sigma.map_or(true, |s| s > 0.0), "bayes.truth_sigma must be positive".into());
        check(b.truth_n_sto >= 1 && (!bayes || b.truth_n_sto <= n_cells), format!("bayes.truth_n_sto must lie in 1..={n_cells}"));
        check(b.data_noise_var >= 0.0, "bayes.data_noise_var must be nonnegative".into());
        let l = &self.lin_error;
        check(l.n_lin_max >= 1 && l.n_ell >= 1 && l.density >= 2 && l.report_n_lin >= 1, "lin_error: n_lin_max, n_ell, report_n_lin >= 1 and density >= 2".into());
        check(l.log10_ell_min <= l.log10_ell_max, "lin_error: log10_ell_min must not exceed log10_ell_max".into());
        check(l.sigma > 0.0, "lin_error.sigma must be positive".into());
        let r = &self.rb_accuracy;
        check(!r.ells.is_empty() && r.ells.iter().all(|&l| l > 0.0), "rb_accuracy.ells must be positive".into());
        check(!r.indices.is_empty() && !r.indices.contains(&0), "rb_accuracy.indices are 1-based".into());
        check(!r.n_rb.is_empty() && !r.n_rb.contains(&0), "rb_accuracy.n_rb must be positive".into());
        let t = &self.timings;
        check(!t.exponents.is_empty() && t.exponents.iter().all(|&e| (1..=8).contains(&e)), "timings.exponents must lie in 1..=8".into());
        check(t.n_rb >= 1 && t.n_sto >= 1 && t.runs >= 1, "timings: n_rb, n_sto and runs must be positive".into());
        check(!t.ells.is_empty() && t.ells.iter().all(|&l| l > 0.0), "timings.ells must be positive".into());
        let v = &self.verify;
        check(!v.lambda_mins.is_empty() && v.lambda_mins.iter().all(|&l| l >= 0.0), "verify.lambda_mins must be >= 0".into());
        check(v.reference_samples >= 2, "verify.reference_samples must be at least 2".into());
        check(self.threads != Some(0), "threads must be positive".into());
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(bad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let c = RunConfig::from_toml("experiment = \"forward_53\"\n[prior]\npreset = \"flow_cell\"").unwrap();
        assert_eq!(c.experiment, Experiment::Forward);
        assert_eq!(c.n_sto().unwrap(), 100);
        assert_eq!(c.kernel.n_lin, 40);
    }

    #[test]
    fn every_violation_is_listed() {
        let text = "experiment = \"timings\"\n[mesh]\nfield_n_side = 0\n[mcmc]\nbeta = 2.0\n[bayes]\nnoise_var = -1.0\n";
        match RunConfig::from_toml(text) {
            Err(CliError::Config(v)) => {
                assert!(v.iter().any(|m| m.contains("field_n_side")));
                assert!(v.iter().any(|m| m.contains("mcmc.beta")));
                assert!(v.iter().any(|m| m.contains("noise_var")));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("experiment = \"offline\"\nbogus = 1").is_err());
        assert!(RunConfig::from_toml("experiment = \"nope\"").is_err());
    }

    #[test]
    fn missing_artifact_is_a_config_error() {
        let e = RunConfig::from_toml("experiment = \"forward_53\"\n[sampler]\nbasis = \"/nonexistent/basis\"").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn roundtrips_through_toml() {
        let c = RunConfig::new(Experiment::Verify);
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }
}
