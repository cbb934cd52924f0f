//! Configuration-driven front end for the stability experiments.
//!
//! `modstab run` executes one experiment, `modstab sweep` runs the product of
//! parameter axes, and `modstab check-modular` certifies a modular. Reports
//! are JSON (`"schema": "modstab-report/1"`) or CSV.
//!
//! Exit codes: 0 all checks pass, 2 regime or check failure, 3 I/O error,
//! 4 configuration error.

pub mod config;
pub mod experiment;
pub mod modular_check;
pub mod report;
pub mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use config::{ConfigError, Format, Overrides};
use modstab_core::modular::DEFAULT_AXIOM_TOL;
use modstab_core::ModularSpec;

pub use experiment::run_experiment;
pub use sweep::run_sweep;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn render(report: &report::StabilityReport, format: Format) -> String {
    match format {
        Format::Json => report::to_json(report),
        Format::Csv => report::report_csv(report),
    }
}

/// `modstab run <config>`
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<i32, CliError> {
    let mut cfg = config::parse_experiment(&read(config_path)?)?;
    cfg.apply(overrides)?;
    let report = run_experiment(&cfg);
    emit(cfg.output.as_deref(), &render(&report, cfg.format))?;
    Ok(report.exit_code)
}

/// `modstab sweep <config>`: `summary.csv` plus one report per cell in the output directory.
///
/// Without an output directory only the summary is printed.
pub fn cmd_sweep(config_path: &Path, overrides: &Overrides) -> Result<i32, CliError> {
    let mut cfg = config::parse_sweep(&read(config_path)?)?;
    cfg.apply(overrides)?;
    let outcome = run_sweep(&cfg);
    let summary = report::sweep_csv(&outcome.rows());
    match &cfg.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            for cell in &outcome.cells {
                if let Some(r) = &cell.report {
                    let name = format!("cell_{:05}.{}", cell.cell.index, cfg.base.format.name());
                    emit(Some(&dir.join(name)), &render(r, cfg.base.format))?;
                }
            }
            emit(Some(&dir.join(SUMMARY_FILE)), &summary)?;
        }
        None => emit(None, &summary)?,
    }
    Ok(outcome.exit_code)
}

/// `modstab check-modular <spec>`
pub fn cmd_check_modular(spec: &str, overrides: &Overrides) -> Result<i32, CliError> {
    let modular: ModularSpec = spec.parse().map_err(|e| ConfigError {
        line: 0,
        message: format!("modular: {e}"),
    })?;
    let tol = overrides.tol.unwrap_or(DEFAULT_AXIOM_TOL);
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(ConfigError {
            line: 0,
            message: format!("tol must be positive, got {tol}"),
        }
        .into());
    }
    let report = match modular_check::check_modular(&modular, tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("modstab: {e}");
            return Ok(EXIT_FAILURE);
        }
    };
    let text = match overrides.format.unwrap_or(Format::Json) {
        Format::Json => report::to_json(&report),
        Format::Csv => modular_check::modular_csv(&report),
    };
    emit(overrides.out.as_deref(), &text)?;
    Ok(report.exit_code)
}
