use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pmc_lab::{parse_config_with, run_cli, CliError, ExperimentId, ExperimentSpec};

/// Run a population Monte Carlo experiment grid and write its CSV.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Configuration file in key=value format.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "PMC_LAB_THREADS")]
    threads: Option<usize>,
    /// Experiment id, overriding the config.
    #[arg(long)]
    experiment: Option<ExperimentId>,
}

fn load(args: &Args) -> Result<ExperimentSpec, CliError> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config_with(&text, args.experiment)?
        }
        None => match args.experiment {
            Some(id) => ExperimentSpec::defaults(id),
            None => {
                return Err(CliError::Unsupported(
                    "pass --config or --experiment to select an experiment".into(),
                ))
            }
        },
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = load(&args).and_then(|spec| run_cli(&spec, &args.out));
    match outcome {
        Ok(o) => {
            println!(
                "wrote {} and {}",
                o.csv_path.display(),
                o.manifest_path.display()
            );
            if o.skipped_cells > 0 {
                println!(
                    "{} cell(s) cannot run under their budget and were written as '*'",
                    o.skipped_cells
                );
            }
            if o.failed_cells > 0 {
                eprintln!("{} cell(s) failed; see the status column", o.failed_cells);
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
