//! Command-line driver for acoustica experiments.
//!
//! `acoustica <mode> --config <file> [--out <dir>] [--stride N]` runs one
//! experiment; `acoustica batch --config a.toml --config b.toml --out <dir>`
//! runs several in parallel, each in its own subdirectory. The worker count
//! defaults to the number of CPUs and is capped by `ACOUSTICA_WORKERS`.

pub mod error;
pub mod manifest;
pub mod run;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use acoustica_core::Mode;
use clap::Parser;

pub use error::{CliError, Result};
pub use manifest::{read_manifest, verify_manifest, Artifacts, ManifestEntry, MANIFEST_NAME};
pub use run::{load_config, run_experiment, RunOutput, RunSummary, SUMMARY_NAME};

pub const WORKERS_ENV: &str = "ACOUSTICA_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "acoustica", version, about = "Adjoint-based design of non-reflecting acoustic inclusions")]
pub struct Cli {
    /// forward, generate_target, optimize, optimize_interp_then_refine or batch
    pub mode: String,
    /// Experiment config (TOML). Repeat for batch.
    #[arg(long, required = true)]
    pub config: Vec<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Field snapshot stride in time levels; overrides `output.stride`.
    #[arg(long)]
    pub stride: Option<usize>,
}

/// Result of one invocation: a single run, or one entry per batch config.
#[derive(Debug)]
pub enum Outcome {
    Single(RunOutput),
    Batch(Vec<(PathBuf, Result<RunOutput>)>),
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn prepare(cli: &Cli, path: &Path, mode: Option<Mode>) -> Result<acoustica_core::ExperimentConfig> {
    let mut cfg = load_config(path)?;
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    if let Some(stride) = cli.stride {
        if stride == 0 {
            return Err(CliError::Usage("--stride must be positive".into()));
        }
        cfg.output.stride = stride;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    if cli.mode == "batch" {
        return run_batch(cli).map(Outcome::Batch);
    }
    let mode = Mode::parse(&cli.mode).map_err(|_| {
        CliError::Usage(format!(
            "unknown mode '{}' (expected forward, generate_target, optimize, optimize_interp_then_refine or batch)",
            cli.mode
        ))
    })?;
    let [path] = cli.config.as_slice() else {
        return Err(CliError::Usage(format!("mode {} takes exactly one --config", cli.mode)));
    };
    let cfg = prepare(cli, path, Some(mode))?;
    let dir = config_dir(path);
    let out = cli.out.clone().unwrap_or_else(|| dir.join(&cfg.output.dir));
    run_experiment(&cfg, &dir, &out).map(Outcome::Single)
}

/// Worker count: `ACOUSTICA_WORKERS` if set, else the CPU count, never more
/// than the number of jobs.
pub fn worker_count(jobs: usize) -> Result<usize> {
    let cap = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV} = '{v}' is not a positive integer")))?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(cap.min(jobs).max(1))
}

fn run_batch(cli: &Cli) -> Result<Vec<(PathBuf, Result<RunOutput>)>> {
    let out = cli.out.clone().ok_or_else(|| CliError::Usage("batch needs --out".into()))?;
    let mut jobs = Vec::new();
    for path in &cli.config {
        let cfg = prepare(cli, path, None)?;
        let stem = path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
        let dest = out.join(&stem);
        if jobs.iter().any(|(_, _, d): &(_, _, PathBuf)| *d == dest) {
            return Err(CliError::Usage(format!("two batch configs share the output directory {}", dest.display())));
        }
        jobs.push((path.clone(), cfg, dest));
    }
    let workers = worker_count(jobs.len())?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunOutput>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((path, cfg, dest)) = jobs.get(i) else { break };
                log::info!("batch: {} -> {}", path.display(), dest.display());
                let r = run_experiment(cfg, &config_dir(path), dest);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let results = results.into_inner().unwrap();
    Ok(jobs.into_iter().zip(results).map(|((p, _, _), r)| (p, r.expect("every job ran"))).collect())
}
