use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cluster_curves::approx::{DEFAULT_MAX_DEGREE, MIN_DEGREE};
use cluster_curves::continuum::ContinuumSpec;
use cluster_curves::pipeline::{run, run_gallery, write_artifacts, Emit, GalleryItem, PipelineError, RunConfig};

/// Regular curves with prescribed initial and terminal cluster sets.
#[derive(Debug, Parser)]
#[command(name = "cluster-curves", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build, smooth, fit and certify a curve between two continua.
    Construct {
        /// Initial cluster set, as inline JSON or `@path`.
        #[arg(long)]
        kminus: String,
        /// Terminal cluster set, as inline JSON or `@path`.
        #[arg(long)]
        kplus: String,
        /// Sequence half-length; must be at least 8.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fit half-width, defaults to N - 1.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated subset of csv, svg, report.
        #[arg(long, default_value = "csv,report")]
        emit: String,
    },
    /// Emit one of the closed-form examples (1-4) or the strip transfer (`strip`).
    Gallery {
        id: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn read_spec(flag: &str, arg: &str) -> Result<ContinuumSpec, PipelineError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)?,
        None => arg.to_string(),
    };
    ContinuumSpec::from_json(&text).map_err(|e| PipelineError::Config(format!("{flag}: {e}")))
}

fn max_degree() -> Result<usize, PipelineError> {
    match std::env::var("CURVE_MAX_DEGREE") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(d) if d >= MIN_DEGREE => Ok(d),
            _ => Err(PipelineError::Config(format!(
                "CURVE_MAX_DEGREE must be an integer >= {MIN_DEGREE}, got `{v}`"
            ))),
        },
        Err(_) => Ok(DEFAULT_MAX_DEGREE),
    }
}

fn execute(cli: Cli) -> Result<u8, PipelineError> {
    match cli.command {
        Command::Construct {
            kminus,
            kplus,
            n,
            seed,
            t,
            out,
            emit,
        } => {
            let mut config = RunConfig::new(read_spec("kminus", &kminus)?, read_spec("kplus", &kplus)?, n, out);
            config.seed = seed;
            config.t = t;
            config.emit = emit.parse::<Emit>()?;
            config.max_degree = max_degree()?;
            let output = run(&config)?;
            let written = write_artifacts(&config, &output)?;
            for p in &written {
                println!("{}", p.display());
            }
            let cert = &output.verification.certification;
            if output.certified() {
                eprintln!("certified at degree {}", cert.degree);
                Ok(0)
            } else {
                for reason in output.verification.failures() {
                    eprintln!("certification failed: {reason}");
                }
                Ok(3)
            }
        }
        Command::Gallery { id, out } => {
            let item: GalleryItem = id.parse()?;
            let pass = run_gallery(item, &out, max_degree()?)?;
            if pass {
                Ok(0)
            } else {
                eprintln!("gallery checks failed; see the JSON report in {}", out.display());
                Ok(3)
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
