//! `fpp`: batch runner for first-passage percolation experiments.
//!
//! Exit status is 0 when every job and embedded assertion passes, 1 when an
//! assertion or a job fails, and 2 on a configuration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod jobs;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use fpp_core::validation::run_criterion;
use rayon::prelude::*;
use serde::Serialize;

use config::{config_error, ConfigError, EmptyConfig};
use output::{write_records, SCHEMA};

pub const MANIFEST: &str = "run-manifest.json";

#[derive(Parser, Debug)]
#[command(name = "fpp", version, about = "Batch runner for first-passage percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,

    /// TOML config with `schema`, `seed`, `[media.*]`, `[tolerances]` and `[[jobs]]`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a dotted config key, e.g. `tolerances.stationary=1e-3` or `jobs.0.n=[128]`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Base seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Run every job in the config (the default).
    Run,
    /// Run the built-in acceptance suite and print a PASS/FAIL table.
    Validate {
        /// Criteria to run, e.g. `1,3,8`; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

#[derive(Serialize)]
struct JobEntry {
    name: String,
    command: &'static str,
    seed: Option<u64>,
    outputs: Vec<String>,
    status: &'static str,
    failures: Vec<String>,
    wall_seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    version: &'static str,
    config_digest: &'a str,
    config: &'a str,
    seed: u64,
    workers: usize,
    jobs: Vec<JobEntry>,
    total_seconds: f64,
}

fn usage() {
    eprintln!("{}", Cli::command().render_help());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        None | Some(Sub::Run) => run(&cli),
        Some(Sub::Validate { criteria }) => validate(&cli, criteria),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<EmptyConfig>().is_some() => {
            eprintln!("error: {e}");
            usage();
            ExitCode::from(2)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    if workers == Some(0) {
        return Err(config_error("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build().context("building worker pool")
}

fn relative(path: &Path, out: &Path) -> String {
    path.strip_prefix(out).unwrap_or(path).to_string_lossy().into_owned()
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let Some(path) = &cli.config else {
        eprintln!("error: --config is required");
        usage();
        return Ok(ExitCode::from(2));
    };
    let loaded = config::load(path, &cli.set, cli.seed)?;
    if loaded.config.jobs.is_empty() {
        return Err(EmptyConfig.into());
    }
    let planned = jobs::plan(&loaded, &cli.out)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| config_error(format!("cannot create {}: {e}", cli.out.display())))?;
    let pool = pool(cli.jobs)?;
    let start = Instant::now();
    let results: Vec<(Result<jobs::JobResult>, f64)> = pool.install(|| {
        planned
            .par_iter()
            .map(|job| {
                let t = Instant::now();
                let r = job.run();
                (r, t.elapsed().as_secs_f64())
            })
            .collect()
    });

    let (mut config_errors, mut failed) = (0usize, 0usize);
    let mut entries = Vec::new();
    for (job, (result, seconds)) in planned.iter().zip(results) {
        let mut outputs = vec![relative(&job.output, &cli.out)];
        let (status, failures) = match result {
            Ok(r) => {
                for line in &r.console {
                    println!("{line}");
                }
                write_records(&job.output, job.format, &job.name, &r.records)?;
                for extra in &r.extras {
                    write_records(&extra.path, extra.format, &job.name, &extra.records)?;
                    outputs.push(relative(&extra.path, &cli.out));
                }
                if r.failures.is_empty() {
                    ("ok", r.failures)
                } else {
                    failed += 1;
                    ("failed", r.failures)
                }
            }
            Err(e) => {
                if e.downcast_ref::<ConfigError>().is_some() {
                    config_errors += 1;
                } else {
                    failed += 1;
                }
                ("error", vec![format!("{e:#}")])
            }
        };
        println!("job {} {} {} ({seconds:.2} s) -> {}", job.name, job.command.as_str(), status, outputs[0]);
        for f in &failures {
            eprintln!("  {}: {f}", job.name);
        }
        entries.push(JobEntry {
            name: job.name.clone(),
            command: job.command.as_str(),
            seed: job.seed,
            outputs,
            status,
            failures,
            wall_seconds: seconds,
        });
    }

    std::fs::write(cli.out.join("effective-config.toml"), &loaded.text)?;
    let manifest = Manifest {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        config_digest: &loaded.digest,
        config: &loaded.text,
        seed: loaded.seed(),
        workers: pool.current_num_threads(),
        jobs: entries,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::write(cli.out.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;

    Ok(if config_errors > 0 {
        ExitCode::from(2)
    } else if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn validate(cli: &Cli, criteria: &[u8]) -> Result<ExitCode> {
    let loaded = match &cli.config {
        Some(path) => config::load(path, &cli.set, cli.seed)?,
        None => config::load_str("schema = 1\n", Path::new("."), &cli.set, cli.seed)?,
    };
    let (tolerances, seed) = (&loaded.config.tolerances, loaded.seed());
    let ids: Vec<u8> = if criteria.is_empty() { (1..=9).collect() } else { criteria.to_vec() };
    if let Some(bad) = ids.iter().find(|&&c| !(1..=9).contains(&c)) {
        return Err(config_error(format!("no criterion {bad}")));
    }
    let pool = pool(cli.jobs)?;
    let mut all_pass = true;
    for id in ids {
        let report = pool
            .install(|| run_criterion(id, tolerances, seed))
            .map_err(|e| match e {
                fpp_core::Error::Config(m) => config_error(m),
                other => other.into(),
            })?;
        println!("{}", report.line());
        for c in report.checks.iter().filter(|c| !c.pass) {
            println!("    failed clause: {}", c.name);
        }
        all_pass &= report.pass;
    }
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
