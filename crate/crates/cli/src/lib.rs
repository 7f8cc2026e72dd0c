//! Experiment registry, configuration and CSV front end for `pmc-core`.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod registry;
pub mod run;

pub use config::{
    emit, parse_config, parse_config_with, ConfigError, ExperimentId, ExperimentSpec, SchemeName,
};
pub use registry::{build_cells, build_target, GridCell, TEMPERING_SCALES};
pub use run::{grid_reports, run_cli, z_csv_header, RunOutcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] pmc_core::PmcError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
}
