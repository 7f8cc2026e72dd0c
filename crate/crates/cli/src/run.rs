//! Executes a spec and writes the CSV plus its run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pmc_core::diagnostics::{
    bootstrap_variance_ci, failed_csv_row, run_experiment, sample_stats, z_study, MseReport,
    BOOTSTRAP_RESAMPLES, BOOTSTRAP_STREAM_BIT, MSE_CSV_HEADER,
};
use pmc_core::targets::{make_ar4_target, make_bimodal_1d, make_sensor_target};
use pmc_core::{PmcError, RngStream};

use crate::config::{emit, ExperimentId, ExperimentSpec};
use crate::registry::build_cells;
use crate::CliError;

pub const Z_ESTIMATORS: [&str; 3] = ["is", "dm", "sm"];
const Z_FIELDS: [&str; 7] = ["mean", "median", "se", "var", "var_lo", "var_hi", "max"];

pub fn z_csv_header() -> String {
    let mut h = String::from("scenario,N,R");
    for est in Z_ESTIMATORS {
        for f in Z_FIELDS {
            let _ = write!(h, ",{f}_z_{est}");
        }
    }
    h.push_str(",status");
    h
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    /// Target evaluations spent by the samplers, MH moves excluded.
    pub target_evals: u64,
    pub mh_evals: u64,
    /// Cells written as `*` because their configuration cannot run.
    pub skipped_cells: usize,
    /// Cells that failed while running.
    pub failed_cells: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents.as_bytes()).map_err(io_err(path))
}

/// Run `spec`, writing `<out_dir>/<spec.output>` and a sibling `.manifest`.
pub fn run_cli(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunOutcome, CliError> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join(&spec.output);
    let manifest_path = csv_path.with_extension("manifest");
    let start = Instant::now();

    let body = if spec.experiment.is_z_study() {
        z_study_csv(spec)?
    } else {
        write_data_files(spec, &csv_path)?;
        grid_csv(spec)?
    };
    write_file(&csv_path, &body.csv)?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "experiment={}", spec.experiment);
    let _ = writeln!(manifest, "seed={}", spec.seed);
    let _ = writeln!(manifest, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "wall_time_s={:.3}", start.elapsed().as_secs_f64());
    let _ = writeln!(manifest, "target_evals={}", body.target_evals);
    let _ = writeln!(manifest, "mh_evals={}", body.mh_evals);
    let _ = writeln!(manifest, "cells={}", body.cells);
    let _ = writeln!(manifest, "skipped_cells={}", body.skipped);
    let _ = writeln!(manifest, "failed_cells={}", body.failed);
    let _ = writeln!(manifest, "[config]");
    manifest.push_str(&emit(spec));
    write_file(&manifest_path, &manifest)?;

    Ok(RunOutcome {
        exit_code: i32::from(body.failed > 0),
        csv_path,
        manifest_path,
        target_evals: body.target_evals,
        mh_evals: body.mh_evals,
        skipped_cells: body.skipped,
        failed_cells: body.failed,
    })
}

struct CsvBody {
    csv: String,
    target_evals: u64,
    mh_evals: u64,
    cells: usize,
    skipped: usize,
    failed: usize,
}

/// Synthetic data sets are written next to the results for auditing.
fn write_data_files(spec: &ExperimentSpec, csv_path: &Path) -> Result<(), CliError> {
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("data");
    let path = csv_path.with_file_name(format!("{stem}_data.csv"));
    let mut buf = Vec::new();
    match spec.experiment {
        ExperimentId::Ar4 => make_ar4_target(spec.seed)?.write_csv(&mut buf),
        ExperimentId::Sensors => make_sensor_target(spec.seed).write_csv(&mut buf),
        _ => return Ok(()),
    }
    .map_err(io_err(&path))?;
    fs::write(&path, buf).map_err(io_err(&path))
}

fn grid_csv(spec: &ExperimentSpec) -> Result<CsvBody, CliError> {
    let grid = build_cells(spec)?;
    let with_dim = grid.iter().any(|g| g.dim.is_some());
    let cells: Vec<_> = grid.iter().map(|g| g.cell.clone()).collect();
    let reports = run_experiment(&cells, spec.reps, spec.seed);

    let mut csv = String::new();
    if with_dim {
        csv.push_str("dim,");
    }
    csv.push_str(MSE_CSV_HEADER);
    csv.push('\n');
    let mut body = CsvBody {
        csv: String::new(),
        target_evals: 0,
        mh_evals: 0,
        cells: grid.len(),
        skipped: 0,
        failed: 0,
    };
    for (g, report) in grid.iter().zip(&reports) {
        if let Some(d) = g.dim {
            let _ = write!(csv, "{d},");
        }
        match report {
            Ok(r) => {
                body.target_evals += r.target_evals;
                body.mh_evals += r.mh_evals;
                csv.push_str(&r.csv_row());
            }
            Err(e @ PmcError::Config(_)) => {
                body.skipped += 1;
                csv.push_str(&failed_csv_row(&g.cell, spec.reps, e));
            }
            Err(e) => {
                body.failed += 1;
                let row = failed_csv_row(&g.cell, spec.reps, e);
                let row = row.strip_suffix('*').unwrap_or(&row);
                csv.push_str(row);
                csv.push_str("error");
            }
        }
        csv.push('\n');
    }
    body.csv = csv;
    Ok(body)
}

/// A cell's report tagged with its state dimension, if swept.
pub type DimReport = (Option<usize>, Result<MseReport, PmcError>);

/// Reports for programmatic callers that want the full run summaries.
pub fn grid_reports(spec: &ExperimentSpec) -> Result<Vec<DimReport>, CliError> {
    spec.validate()?;
    let grid = build_cells(spec)?;
    let cells: Vec<_> = grid.iter().map(|g| g.cell.clone()).collect();
    let reports = run_experiment(&cells, spec.reps, spec.seed);
    Ok(grid.iter().map(|g| g.dim).zip(reports).collect())
}

fn z_study_csv(spec: &ExperimentSpec) -> Result<CsvBody, CliError> {
    let mut csv = z_csv_header();
    csv.push('\n');
    let mut target_evals = 0;
    for (s_idx, &scenario) in spec.scenarios.iter().enumerate() {
        let (target, pop) = make_bimodal_1d(scenario)?;
        let study = z_study(&target, &pop, spec.reps, spec.seed)?;
        // IS and DM each evaluate the shared draws; SM draws its own.
        target_evals += 3 * (spec.reps * pop.len()) as u64;
        let _ = write!(csv, "{scenario},{},{}", pop.len(), spec.reps);
        for (e_idx, values) in [&study.z_is, &study.z_dm, &study.z_sm]
            .into_iter()
            .enumerate()
        {
            let stats = sample_stats(values)?;
            let (lo, hi) = if values.len() > 1 {
                let stream = BOOTSTRAP_STREAM_BIT | (s_idx * Z_ESTIMATORS.len() + e_idx) as u64;
                let (lo, hi) = bootstrap_variance_ci(
                    values,
                    BOOTSTRAP_RESAMPLES,
                    &mut RngStream::new(spec.seed, stream),
                )?;
                (lo.min(stats.variance), hi.max(stats.variance))
            } else {
                (f64::NAN, f64::NAN)
            };
            let _ = write!(
                csv,
                ",{},{},{},{},{},{},{}",
                stats.mean, stats.median, stats.std_error, stats.variance, lo, hi, stats.max
            );
        }
        csv.push_str(",ok\n");
    }
    Ok(CsvBody {
        csv,
        target_evals,
        mh_evals: 0,
        cells: spec.scenarios.len(),
        skipped: 0,
        failed: 0,
    })
}
