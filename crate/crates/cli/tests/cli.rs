use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rbgrf_cli::{run, Experiment, RunConfig};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rbgrf"));
    c.env("RUST_LOG", "warn");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn shipped_configs_are_valid() {
    let mut n = 0;
    for e in fs::read_dir(configs_dir()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert_eq!(n, 8);
}

#[test]
fn invalid_config_exits_with_2_and_lists_every_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "experiment = \"forward_53\"\n[mesh]\nfem_n_side = 0\n[mc]\nn_samples = 1\n[mcmc]\nbeta = 0.0\n",
    );
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["fem_n_side", "mc.n_samples", "mcmc.beta"] {
        assert!(err.contains(field), "{field} missing from: {err}");
    }
    let out = bin().args(["run", "--config"]).arg(tmp.path().join("missing.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

const TINY_FORWARD: &str = r#"
experiment = "forward_53"
[mesh]
field_n_side = 8
fem_n_side = 4
[prior]
preset = "flow_cell"
[sampler]
kind = "rb"
n_sto = 10
[offline]
n_snap = 3
n_sto = 10
[mc]
n_samples = 50
repetitions = 2
"#;

#[test]
fn reruns_reproduce_every_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "fwd.toml", TINY_FORWARD);
    let mut outs = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{k}"));
        let o = bin().args(["run", "--seed", "5", "--threads", threads, "--config"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("forward_53:"));
        outs.push(dir);
    }
    for name in ["samples_rep0.csv", "samples_rep1.csv", "ecdf.csv", "repetitions.csv", "summary.json"] {
        assert_eq!(fs::read(outs[0].join(name)).unwrap(), fs::read(outs[1].join(name)).unwrap(), "{name}");
    }
    // manifests differ only in the recorded thread count
    let m: serde_json::Value = serde_json::from_slice(&fs::read(outs[0].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["experiment"], "forward_53");
    let s = bin().arg("summarize").arg(&outs[0]).output().unwrap();
    assert!(String::from_utf8_lossy(&s.stdout).contains("CoV"));
}

#[test]
fn offline_artifact_feeds_a_later_run() {
    let tmp = tempfile::tempdir().unwrap();
    let basis = tmp.path().join("basis");
    let mut off = RunConfig::from_toml(TINY_FORWARD).unwrap();
    off.offline.dir = Some(basis.clone());
    let text = toml::to_string(&off).unwrap();
    let cfg = write(tmp.path(), "off.toml", &text);
    let o = bin().args(["offline", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(basis.join("manifest.json").is_file());

    let mut c = RunConfig::from_toml(TINY_FORWARD).unwrap();
    c.sampler.basis = Some(basis.clone());
    c.out = tmp.path().join("from_artifact");
    let a = run(&c).unwrap();
    c.sampler.basis = None;
    c.out = tmp.path().join("fresh");
    let b = run(&c).unwrap();
    assert_eq!(a.values["mean"], b.values["mean"]);

    // a basis on another mesh is refused as a configuration error
    c.sampler.basis = Some(basis);
    c.mesh.field_n_side = 9;
    assert_eq!(run(&c).unwrap_err().exit_code(), 2);
}

#[test]
fn single_snapshot_without_threshold_keeps_every_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = RunConfig::new(Experiment::Offline);
    c.mesh.field_n_side = 10;
    c.offline.snapshots = Some(vec![0.6]);
    c.offline.n_sto = 25;
    c.offline.lambda_min = 0.0;
    c.out = tmp.path().to_path_buf();
    let s = run(&c).unwrap();
    assert_eq!(s.values["n_rb"], 25);
}

#[test]
fn small_drivers_run_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = RunConfig::new(Experiment::LinError);
    c.lin_error.n_lin_max = 6;
    c.lin_error.n_ell = 3;
    c.lin_error.density = 8;
    c.out = tmp.path().join("lin");
    run(&c).unwrap();
    assert_eq!(fs::read_to_string(c.out.join("lin_error.csv")).unwrap().lines().count(), 1 + 18);

    let mut c = RunConfig::new(Experiment::RbAccuracy);
    c.mesh.field_n_side = 12;
    c.offline.n_snap = 3;
    c.offline.n_sto = 20;
    c.rb_accuracy.indices = vec![1, 10];
    c.rb_accuracy.n_rb = vec![4, 16, 40];
    c.out = tmp.path().join("acc");
    let s = run(&c).unwrap();
    assert!(s.values["rows"].as_array().unwrap().len() >= 12);

    let mut c = RunConfig::new(Experiment::BayesField);
    c.mesh.field_n_side = 8;
    c.prior.preset = "field_inverse".into();
    c.sampler.full_rank = true;
    c.offline.n_snap = 2;
    c.offline.ell_min = 0.2;
    c.offline.n_sto = 20;
    c.bayes.obs_lattice = 4;
    c.bayes.truth_n_sto = 30;
    c.mcmc.n_steps = 200;
    c.mcmc.chains = 2;
    c.out = tmp.path().join("bayes");
    let s = run(&c).unwrap();
    assert!(c.out.join("chain_1.csv").is_file() && c.out.join("posterior_mean.csv").is_file());
    assert!(s.line.starts_with("bayes_field_55"));
}
