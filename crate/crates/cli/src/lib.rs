//! Config-driven runner, verifier and figure reproduction for `lyapex`.

pub mod config;
pub mod output;
pub mod reproduce;
pub mod verify;

use std::io::Write;
use std::path::Path;

use lyapex::benettin::{run, RunResult};
use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    /// Checks ran but at least one failed; the report is already printed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for configuration errors, 3 for runtime errors and failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Failed(_) => 3,
        }
    }
}

/// Reads a config file, applying `LYAPEX_SEED`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = ExperimentConfig::parse(&text, base)?;
    cfg.apply_env_seed()?;
    Ok(cfg)
}

/// Runs one experiment. On a numerical failure the partial result, if any,
/// comes back alongside the error.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunResult, (CliError, Option<Box<RunResult>>)> {
    let run_cfg = cfg.to_run_config().map_err(|e| (e, None))?;
    run(&run_cfg).map_err(|e| {
        let msg = match &e.partial {
            Some(p) => format!(
                "{} (partial results kept for {} steps)",
                e.error, p.steps_completed
            ),
            None => e.error.to_string(),
        };
        (CliError::Runtime(msg), e.partial)
    })
}

pub fn cmd_run(path: &Path) -> Result<(), CliError> {
    let cfg = load_config(path)?;
    let (result, failure) = match execute(&cfg) {
        Ok(r) => (Some(r), None),
        Err((e @ CliError::Config(_), _)) => return Err(e),
        Err((e, partial)) => (partial.map(|p| *p), Some(e)),
    };
    if let Some(result) = result {
        let csv = output::render_csv(&result);
        match cfg.resolved_output() {
            Some(p) => output::write_atomic(&p, csv.as_bytes())?,
            None => std::io::stdout()
                .write_all(csv.as_bytes())
                .map_err(|e| CliError::Runtime(format!("writing stdout: {e}")))?,
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
