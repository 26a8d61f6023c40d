use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use rbgrf_cli::{run, CliError, Experiment, Result, RunConfig};

#[derive(Parser)]
#[command(name = "rbgrf", version, about = "Reduced-basis Gaussian random field experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build and store a reduced basis from the `[offline]` section.
    Offline(RunArgs),
    /// Run the experiment named in the config.
    Run(RunArgs),
    /// Print the summary line of a finished run.
    Summarize {
        /// Output directory of the run.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::config(format!("threads: {e}")))?;
    }
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<String> {
    match cli.cmd {
        Cmd::Offline(a) => {
            let mut cfg = load(&a)?;
            cfg.experiment = Experiment::Offline;
            Ok(run(&cfg)?.line)
        }
        Cmd::Run(a) => Ok(run(&load(&a)?)?.line),
        Cmd::Summarize { dir } => {
            let text = std::fs::read_to_string(dir.join("summary.json"))
                .map_err(|e| CliError::config(format!("no summary in {}: {e}", dir.display())))?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            Ok(v["line"].as_str().unwrap_or_default().to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match main_inner(Cli::parse()) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
