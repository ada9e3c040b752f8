use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spgm_bench::config::PolicyChoice;
use spgm_bench::experiment::{diagnostics_lines, manifest_header, write_key_values};
use spgm_bench::{prepare, run_experiment, BenchError, ExperimentConfig, Overrides, ReferenceCache, Result};

/// Stochastic proximal gradient experiments.
#[derive(Parser)]
#[command(name = "spgm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or fetch from the cache) the reference solution.
    Reference(Common),
    /// Run every (method, N, seed) cell and write the CSV files and manifest.
    Run(Common),
    /// Estimate noise and curvature constants at the reference solution.
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration in `key = value` form.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated minibatch sizes.
    #[arg(long, value_delimiter = ',')]
    batch_sizes: Option<Vec<usize>>,
    /// Comma-separated outer methods (spgm, sgdm).
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
    #[arg(long, value_parser = policy)]
    policy: Option<PolicyChoice>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

fn policy(s: &str) -> std::result::Result<PolicyChoice, String> {
    s.parse()
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            out: self.out.clone(),
            seeds: self.seeds.clone(),
            batch_sizes: self.batch_sizes.clone(),
            methods: self.method.clone(),
            policy: self.policy,
            mu0: self.mu0,
            eps: self.eps,
            max_iter: self.max_iter,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<()> {
    let cache = ReferenceCache::from_env();
    match command {
        Command::Reference(c) => {
            let cfg = c.load()?;
            let prepared = prepare(&cfg, &cache)?;
            let mut lines = manifest_header(&cfg, &prepared);
            let w = prepared.reference.w.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
            lines.push(("reference.w".into(), w));
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("reference.txt");
            write_key_values(&path, &lines)?;
            println!(
                "reference {} ({}) in {} iterations, written to {}",
                prepared.instance_hash,
                prepared.cache_status.name(),
                prepared.reference.iterations,
                path.display()
            );
        }
        Command::Run(c) => {
            let cfg = c.load()?;
            let out = run_experiment(&cfg, &cache)?;
            for f in &out.csv_files {
                println!("{}", f.display());
            }
            println!("{}", out.manifest.display());
        }
        Command::Diagnose(c) => {
            let cfg = c.load()?;
            let prepared = prepare(&cfg, &cache)?;
            let mut lines = manifest_header(&cfg, &prepared);
            lines.extend(diagnostics_lines(&prepared.diagnostics()?));
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("diagnostics.txt");
            write_key_values(&path, &lines)?;
            for (k, v) in lines.iter().filter(|(k, _)| k.starts_with("diagnostics.")) {
                println!("{k} = {v}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(BenchError::exit_code(&e))
        }
    }
}
