use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use liftmap::pipeline::{self, Method, Problem, EXACT_LIMIT};
use liftmap::solve::{MapOptions, Polytope, Space};
use liftmap::Error;

/// Symmetry detection and lifted MAP inference.
#[derive(Parser)]
#[command(name = "liftmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orbit partitions of variables, edges, arcs, factors and features.
    Orbits {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "search")]
        method: Method,
        /// Report both the search and renaming methods (MLN inputs).
        #[arg(long)]
        compare: bool,
        /// Seed for generator verification samples.
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MAP by LP relaxation, optionally lifted and tightened with cycle cuts.
    Map {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "ground")]
        space: Space,
        #[arg(long, default_value = "local")]
        polytope: Polytope,
        #[arg(long, default_value = "search")]
        method: Method,
        #[arg(long, default_value_t = 0.99)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_cuts: usize,
        #[arg(long, default_value_t = 1000)]
        max_rounds: usize,
        /// Accepted for interface uniformity; the solver is deterministic.
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the bound curve as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exact MAP, log-partition and marginals by enumeration.
    Exact {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = EXACT_LIMIT)]
        limit: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ground an MLN and print the model as FGM text.
    Ground {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Model file: `.mln` for Markov logic, FGM text otherwise.
    input: PathBuf,
    /// Number of constants for MLN grounding.
    #[arg(long)]
    domain_size: Option<usize>,
    /// Evidence file for MLN inputs.
    #[arg(long)]
    evidence: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self) -> Result<Problem, Error> {
        Problem::load(&self.input, self.domain_size, self.evidence.as_deref())
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(out, &text)
}

/// Exit code 4 marks a cutting-plane run that hit its limits or stalled.
const EXIT_CAP: u8 = 4;

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Orbits {
            input,
            method,
            compare,
            seed,
            out,
        } => {
            let problem = input.load()?;
            if compare {
                write_json(out.as_deref(), &pipeline::compare_orbits(&problem, seed)?)?;
            } else {
                write_json(
                    out.as_deref(),
                    &pipeline::orbit_report(&problem, method, seed)?,
                )?;
            }
            Ok(0)
        }
        Command::Map {
            input,
            space,
            polytope,
            method,
            alpha,
            tol,
            max_cuts,
            max_rounds,
            seed: _,
            out,
            csv,
        } => {
            let problem = input.load()?;
            let opts = MapOptions {
                polytope,
                alpha,
                tol,
                max_cuts,
                max_rounds,
            };
            let report = pipeline::run_map(&problem, method, space, &opts)?;
            write_json(out.as_deref(), &report)?;
            if let Some(path) = csv {
                write_text(Some(&path), &report.result.bounds_csv())?;
            }
            Ok(if report.result.status.is_success() {
                0
            } else {
                EXIT_CAP
            })
        }
        Command::Exact { input, limit, out } => {
            let problem = input.load()?;
            write_json(out.as_deref(), &pipeline::run_exact(&problem, limit)?)?;
            Ok(0)
        }
        Command::Ground { input, out } => {
            let problem = input.load()?;
            if problem.mln.is_none() {
                return Err(Error::Config("ground expects an .mln input".into()));
            }
            write_text(out.as_deref(), &problem.ground_fgm())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("liftmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
