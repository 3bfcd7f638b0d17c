use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use excbo::benchmarks::{build, EpidemicConfig, MixtureNoiseSpec};
use excbo_cli::output::{write_atomic, AGGREGATE_CSV};
use excbo_cli::plot::render_svg;
use excbo_cli::{emit_outputs, estimate_oracle_optimum, load_bundle, parse_config, run_suite, Registry, RunnerError, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "excbo", version, about = "Causal Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair of a config and write results.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and the environment.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// `key=value` config overrides; dotted keys address tables.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Estimate the optimum expected reward of a benchmark.
    Oracle {
        benchmark: String,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify a result directory and redraw its plot.
    Plot { bundle: PathBuf },
    /// Parse and validate a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn read_config(path: &Path, overrides: &[String]) -> Result<excbo_cli::ExperimentConfig, RunnerError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunnerError::io(path, e))?;
    parse_config(&text, overrides)
}

fn execute(cli: Cli) -> Result<i32, RunnerError> {
    match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            overrides,
        } => {
            let cfg = read_config(&config, &overrides)?;
            let dir = out
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let bundle = run_suite(&cfg, &Registry, jobs)?;
            for path in emit_outputs(&bundle, &dir)? {
                println!("wrote {}", path.display());
            }
            for f in &bundle.failures {
                eprintln!("run {} seed {} failed: {}", f.algorithm, f.seed, f.message);
            }
            Ok(bundle.exit_code())
        }
        Command::Oracle {
            benchmark,
            budget,
            sigma,
            seed,
        } => {
            let b = build(&benchmark, &MixtureNoiseSpec::with_sigma(sigma), &EpidemicConfig::default(), seed)
                .map_err(|e| RunnerError::Validation(e.to_string()))?;
            println!("{:.16e}", estimate_oracle_optimum(&b, budget, seed));
            Ok(0)
        }
        Command::Plot { bundle } => {
            let (_, agg, manifest) = load_bundle(&bundle)?;
            let name = manifest["config"]["benchmark"].as_str().unwrap_or("benchmark");
            let path = write_atomic(&bundle, &format!("{name}-replot.svg"), render_svg(name, &agg).as_bytes())?;
            println!("{AGGREGATE_CSV} verified; wrote {}", path.display());
            Ok(0)
        }
        Command::Validate { config, overrides } => {
            let cfg = read_config(&config, &overrides)?;
            println!("ok {}", cfg.hash());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
