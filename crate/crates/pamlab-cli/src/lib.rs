//! Experiment runner for pamlab: flat key/value configs, seeded parallel sweeps and reproducible
//! JSON/CSV reports.

pub mod config;
mod experiments;
pub mod report;

pub use config::{ExperimentConfig, EXPERIMENTS};
pub use report::{write_report, Assertion, Curve, ErrorKind, ExperimentReport, Format, Measurement};

use pamlab::PamError;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource guard: `{param}` requires {needed:.3e} {what}, cap is {cap:.3e}")]
    Resource { param: String, what: &'static str, needed: f64, cap: f64 },

    #[error("computation failed: {0}")]
    Model(#[from] PamError),

    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: configuration, resource and runtime errors all map to 2.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Runs the experiment named in `cfg` on a pool of `cfg.width` threads.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.width)
        .build()
        .map_err(|e| CliError::Config(format!("width: {e}")))?;
    let start = Instant::now();
    let out = pool.install(|| experiments::dispatch(cfg))?;
    Ok(ExperimentReport {
        experiment: cfg.experiment.clone(),
        config: cfg.echo(),
        config_hash: cfg.hash(),
        results: out.results,
        assertions: out.assertions,
        curves: out.curves,
        notes: out.notes,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
