use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use crystal_hydro::catalog;
use crystal_hydro::config::ExperimentConfig;
use crystal_hydro::experiment::{
    realize, run_experiment, verify_paper_tables, CheckStatus, ExperimentResult, RunOptions,
    Stages,
};
use crystal_hydro::harmonic::solve_harmonic_pinned;

/// Exclusion processes on crystal lattices and their hydrodynamic limit.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replica count override.
    #[arg(long)]
    replicas: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the periodic harmonic realization and print its report.
    SolveHarmonic {
        /// Built-in lattice name or catalog file.
        lattice: String,
        /// Vertex fixed at the origin.
        #[arg(long, default_value_t = 0)]
        pin: usize,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the diffusion matrix, in ambient and lattice coordinates.
    Diffusion {
        lattice: String,
    },
    /// Run the simulations of an experiment.
    Simulate(RunFlags),
    /// Solve the limit equation of an experiment.
    Pde(RunFlags),
    /// Simulate, solve, and tabulate hydrodynamic errors.
    Compare(RunFlags),
    /// Recompute the published diffusion matrices exactly.
    VerifyPaper,
    /// Simulate and evaluate the replacement diagnostic.
    ReplacementDiagnostic(RunFlags),
}

fn load(flags: &RunFlags) -> Result<(ExperimentConfig, RunOptions)> {
    let mut config = ExperimentConfig::from_path(&flags.config)
        .with_context(|| format!("loading {}", flags.config.display()))?;
    if let Some(s) = flags.seed {
        config.master_seed = s;
    }
    if let Some(r) = flags.replicas {
        config.replicas = r;
    }
    if let Some(o) = &flags.out {
        config.output = o.clone();
    }
    config.validate()?;
    Ok((
        config,
        RunOptions {
            workers: flags.workers,
            stages: Stages::all(),
        },
    ))
}

fn run(flags: &RunFlags, stages: Stages) -> Result<(ExperimentConfig, ExperimentResult)> {
    let (config, mut options) = load(flags)?;
    options.stages = stages;
    let result = run_experiment(&config, &options)?;
    println!("experiment {} -> {}", result.hash, result.dir.display());
    Ok((config, result))
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::SolveHarmonic { lattice, pin, out } => {
            let spec = catalog::load(&lattice)?;
            let r = solve_harmonic_pinned(&spec.graph, &spec.basis, pin)?;
            let text = r.report().to_toml();
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(verdict(r.is_harmonic()))
        }
        Command::Diffusion { lattice } => {
            let spec = catalog::load(&lattice)?;
            let r = realize(&spec)?;
            let report = r.report();
            println!("lattice   {}", spec.name);
            println!("harmonic  {}", r.is_harmonic());
            println!("D         {:?}", report.diffusion);
            println!("D lattice {:?}", report.lattice_diffusion);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate(flags) => {
            let (_, result) = run(&flags, Stages::simulate_only())?;
            let mut ok = true;
            for l in &result.lattices {
                for run in &l.runs {
                    println!(
                        "{} N={}: {} candidates, {} jumps, particle count conserved: {}",
                        l.name, run.n, run.candidates, run.accepted, run.conserved
                    );
                    ok &= run.conserved;
                }
            }
            Ok(verdict(ok))
        }
        Command::Pde(flags) => {
            let (_, result) = run(&flags, Stages::pde_only())?;
            for l in &result.lattices {
                if let Some(p) = &l.pde {
                    let last = p.grids.last().expect("at least one time");
                    println!(
                        "{}: t={} mass={} range=[{}, {}]{}",
                        l.name,
                        last.time,
                        last.mass(),
                        last.min(),
                        last.max(),
                        l.pde_shared_with
                            .as_ref()
                            .map(|o| format!(" (shared with {o})"))
                            .unwrap_or_default()
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare(flags) => {
            let (config, result) = run(&flags, Stages::all())?;
            let mut ok = true;
            for l in &result.lattices {
                let errors: Vec<f64> = l
                    .runs
                    .iter()
                    .map(|r| {
                        r.errors
                            .as_ref()
                            .expect("comparison ran")
                            .max_mean_error(config.horizon)
                    })
                    .collect();
                for (run, e) in l.runs.iter().zip(&errors) {
                    println!("{} N={} error(T)={e:.6}", l.name, run.n);
                    ok &= run.conserved;
                }
                let trend = strictly_decreasing(&errors);
                println!("{}: error decreasing in N: {trend}", l.name);
                ok &= trend;
            }
            Ok(verdict(ok))
        }
        Command::ReplacementDiagnostic(flags) => {
            let (config, result) = run(&flags, Stages::replacement_only())?;
            anyhow::ensure!(
                config.replacement.is_some(),
                "{} has no [replacement] section",
                flags.config.display()
            );
            let mut ok = true;
            for l in &result.lattices {
                let bundles = l.runs.first().map(|r| r.replacement.len()).unwrap_or(0);
                for b in 0..bundles {
                    let means: Vec<f64> = l.runs.iter().map(|r| r.replacement[b].mean()).collect();
                    for (run, m) in l.runs.iter().zip(&means) {
                        println!(
                            "{} N={} {:?}: {m:.6}",
                            l.name, run.n, run.replacement[b].bundle
                        );
                    }
                    let trend = strictly_decreasing(&means);
                    println!("{} {:?}: decreasing in N: {trend}", l.name, l.runs[0].replacement[b].bundle);
                    ok &= trend;
                }
            }
            Ok(verdict(ok))
        }
        Command::VerifyPaper => {
            let report = verify_paper_tables();
            for c in &report.checks {
                let tag = match c.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::ExpectedDivergence => "DIVERGES (expected)",
                };
                println!("{tag:<20} {}: expected {} computed {}", c.label, c.expected, c.computed);
                if let Some(n) = &c.note {
                    println!("{:<20} note: {n}", "");
                }
            }
            Ok(verdict(report.passed()))
        }
    }
}
