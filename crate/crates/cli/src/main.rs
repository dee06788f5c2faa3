//! `adsdirac`: runs the laboratory's experiments from a JSON config and prints
//! one verdict line per acceptance check.
//!
//! Exit codes: `0` every selected check passed, `1` a check failed or an
//! experiment aborted, `2` the configuration was rejected.

use std::path::PathBuf;
use std::process::ExitCode;

use adsdirac_core::harness::{parse_config, run_with_threads, Experiment, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "adsdirac",
    version,
    about = "Massive Dirac field on Schwarzschild-anti-de Sitter: numerical checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config (defaults to the built-in reference config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "ADSDIRAC_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Horizon, tortoise coordinate and coordinate maps.
    Geometry,
    /// Unitary evolution and the free-propagator oracle.
    Evolve(EvolveArgs),
    /// Wave operators in every configured regime.
    Scatter,
    /// Velocity cutoffs and the asymptotic velocity.
    Velocity,
    /// Mourre positivity under grid refinement.
    Mourre,
    /// Eigen-decompositions and the no-eigenvalue test.
    Spectrum,
    /// Boundary exponents of resolvent probes.
    DomainExponent,
    /// Every experiment, including the exact algebra identities.
    All,
}

/// Overrides of the config for the evolution experiment.
#[derive(Debug, Args)]
struct EvolveArgs {
    /// Black-hole mass.
    #[arg(long = "M")]
    mass: Option<f64>,
    /// AdS length.
    #[arg(long = "l")]
    l: Option<f64>,
    /// Field mass.
    #[arg(long = "m")]
    m: Option<f64>,
    /// Channel index s.
    #[arg(long = "s")]
    s: Option<f64>,
    /// Channel index n.
    #[arg(long = "n")]
    n: Option<f64>,
    /// Left end of the grid.
    #[arg(long = "xmin", allow_hyphen_values = true)]
    x_min: Option<f64>,
    /// Number of nodes.
    #[arg(long = "N")]
    nodes: Option<usize>,
    /// Time step.
    #[arg(long = "dt")]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Snapshot times, comma separated.
    #[arg(long = "snap", value_delimiter = ',')]
    snap: Option<Vec<f64>>,
}

impl EvolveArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.mass {
            cfg.mass = v;
        }
        if let Some(v) = self.l {
            cfg.l = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
            cfg.extra_masses.clear();
        }
        if let Some(v) = self.s {
            cfg.channel.0 = v;
        }
        if let Some(v) = self.n {
            cfg.channel.1 = v;
        }
        if let Some(v) = self.x_min {
            cfg.evolve.x_min = v;
        }
        if let Some(v) = self.nodes {
            cfg.evolve.n = v;
        }
        if self.dt.is_some() {
            cfg.evolve.dt = self.dt;
        }
        if let Some(v) = self.t_final {
            cfg.evolve.t_final = v;
            cfg.evolve.snapshots.retain(|&t| t <= v);
        }
        if let Some(v) = &self.snap {
            cfg.evolve.snapshots = v.clone();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match parse_config(path) {
            Ok(c) => c,
            Err(e) => {
                for err in &e.errors {
                    eprintln!("config: {err}");
                }
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::reference(),
    };
    cfg.experiments = match &cli.command {
        Command::Geometry => vec![Experiment::Geometry],
        Command::Evolve(args) => {
            args.apply(&mut cfg);
            vec![Experiment::Evolve]
        }
        Command::Scatter => vec![Experiment::Scatter],
        Command::Velocity => vec![Experiment::Velocity],
        Command::Mourre => vec![Experiment::Mourre],
        Command::Spectrum => vec![Experiment::Spectrum],
        Command::DomainExponent => vec![Experiment::DomainExponent],
        Command::All => Experiment::ALL.to_vec(),
    };
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Err(e) = cfg.validate() {
        for err in &e.errors {
            eprintln!("config: {err}");
        }
        return ExitCode::from(2);
    }
    match run_with_threads(&cfg, cli.threads) {
        Ok(manifest) => {
            for line in manifest.verdict_lines() {
                println!("{line}");
            }
            println!(
                "{} — outputs in {} (config {}, {:.1} s)",
                if manifest.passed {
                    "ALL PASS"
                } else {
                    "FAILURES"
                },
                manifest.output_dir.display(),
                &manifest.config_hash[..12],
                manifest.wall_seconds
            );
            if manifest.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
