//! Scenario runner around the core models: config parsing, named presets,
//! experiment execution, and table output.
//!
//! Errors carry their exit code: 2 for config syntax, 3 for a bad
//! parameter value or key, 1 for anything that failed at run time.

pub mod config;
pub mod presets;
pub mod runner;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{context}: {message}")]
    InvalidParam { context: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn invalid(context: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::InvalidParam { context: context.into(), message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::InvalidParam { .. } => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Cap the global worker pool from the ATOMWEAVER_THREADS variable.
///
/// Call once at startup, before any parallel work. Unset or empty means
/// one worker per CPU.
pub fn apply_thread_cap() -> Result<(), CliError> {
    let raw = match std::env::var("ATOMWEAVER_THREADS") {
        Ok(v) if !v.trim().is_empty() => v,
        _ => return Ok(()),
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::invalid("ATOMWEAVER_THREADS", format!("expected a positive integer, got {raw:?}"))
    })?;
    if n == 0 {
        return Err(CliError::invalid("ATOMWEAVER_THREADS", "thread cap must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::runtime(format!("thread pool setup failed: {e}")))
}
