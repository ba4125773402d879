//! Experiment configs, named fixtures and SNR sweeps.

pub mod config;
pub mod experiment;
pub mod fixtures;

pub use config::{Algorithm, ExperimentConfig, NormalizeMode, SampleSpec};
pub use experiment::{header, run_and_write, run_experiment, ExperimentOutput, Row, TraceRow};
pub use fixtures::load_fixture;

use crate::error::{Error, Result};

/// Environment variable overriding the worker-thread count.
pub const WORKERS_ENV: &str = "MIMOBC_WORKERS";

/// Worker count requested through [`WORKERS_ENV`], if any.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got {v:?}"))),
        },
    }
}

/// Sizes the global thread pool from [`WORKERS_ENV`]. Results do not depend on it.
pub fn init_workers() -> Result<()> {
    if let Some(n) = workers_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?;
    }
    Ok(())
}
