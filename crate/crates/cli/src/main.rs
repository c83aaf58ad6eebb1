use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use filmflow::probes::ProbeId;
use filmflow_cli::{run_evolve, run_probe, run_stability, ProbeArgs, RunConfig, StabilityArgs};

#[derive(Parser)]
#[command(name = "filmflow", version, about = "Strained-film surface diffusion: evolve, stability, probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one evolution from a TOML config.
    Evolve {
        config: PathBuf,
        /// Override `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several configs concurrently; exits 1 if any run failed, else 2 if any hit a terminal event.
    Sweep {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Flat-film stability threshold.
    Stability {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        e0: f64,
        #[arg(long)]
        psi11: f64,
        #[arg(long)]
        b: f64,
        /// Also locate the threshold from the finite-element second variation.
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        ny: usize,
        /// Directory for the per-mode CSV and JSON summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized interpolation-inequality probe.
    Probe {
        /// One of A, C, D, H1, morini.
        #[arg(long, value_parser = parse_probe_id)]
        id: ProbeId,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the single Fourier mode `k` instead of random trials.
        #[arg(long)]
        pure_mode: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        decay: Option<f64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_probe_id(s: &str) -> Result<ProbeId, String> {
    s.parse::<ProbeId>().map_err(|e| e.to_string())
}

fn evolve_one(path: &Path, out: Option<&Path>) -> Result<(i32, String)> {
    let mut config = RunConfig::load(path)?;
    if let Some(o) = out {
        config.output.dir = o.to_path_buf();
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let outcome = run_evolve(&config, base)?;
    Ok((outcome.exit_code(), outcome.summary))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Evolve { config, out } => {
            let (code, summary) = evolve_one(&config, out.as_deref())?;
            print!("{summary}");
            Ok(code)
        }
        Command::Sweep { configs, jobs } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| anyhow!("cannot build worker pool: {e}"))?;
            let results: Vec<_> = pool.install(|| configs.par_iter().map(|c| (c, evolve_one(c, None))).collect());
            let (mut failed, mut event) = (false, false);
            for (c, r) in results {
                match r {
                    Ok((code, summary)) => {
                        println!("== {} (exit {code})", c.display());
                        print!("{summary}");
                        event |= code == 2;
                    }
                    Err(e) => {
                        println!("== {} failed: {e:#}", c.display());
                        failed = true;
                    }
                }
            }
            Ok(if failed { 1 } else if event { 2 } else { 0 })
        }
        Command::Stability { mu, lambda, e0, psi11, b, numeric, n, ny, out } => {
            let (text, _) = run_stability(&StabilityArgs { mu, lambda, e0, psi11, b, numeric, n, ny, out_dir: out })?;
            print!("{text}");
            Ok(0)
        }
        Command::Probe { id, trials, seed, pure_mode, p, q, j, m, s, dim, n, decay, out } => {
            let (json, report) = run_probe(&ProbeArgs { id, trials, seed, pure_mode, p, q, j, m, s, dim, n, decay })?;
            match out {
                Some(path) => {
                    std::fs::write(&path, json)?;
                    println!("{}: worst ratio {:.6} (cap {})", report.id, report.worst_ratio, report.cap);
                }
                None => print!("{json}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
