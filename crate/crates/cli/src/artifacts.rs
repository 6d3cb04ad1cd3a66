use std::fs;
use std::path::Path;

use fkam_core::engine::{EngineError, StageTrace};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{parse_json, ExperimentConfig};
use crate::error::CliError;

pub const TOOL: &str = "fkam";

/// Common wrapper of every JSON report.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a ExperimentConfig,
    pub warnings: &'a [String],
    pub passed: bool,
    pub result: &'a T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(
        command: &'a str,
        config: &'a ExperimentConfig,
        warnings: &'a [String],
        passed: bool,
        result: &'a T,
    ) -> Self {
        Envelope { tool: TOOL, version: env!("CARGO_PKG_VERSION"), command, config, warnings, passed, result }
    }
}

#[derive(Serialize)]
pub struct ErrorReport<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: Option<&'a ExperimentConfig>,
    pub module: &'static str,
    pub error: String,
    pub root: String,
    pub traces: &'a [StageTrace],
}

impl<'a> ErrorReport<'a> {
    pub fn new(command: &'a str, config: Option<&'a ExperimentConfig>, err: &'a CliError) -> Self {
        let (root, traces): (String, &[StageTrace]) = match err {
            CliError::Core(fkam_core::Error::Engine(e)) => {
                let traces = match e {
                    EngineError::WithTrace { traces, .. } => traces.as_slice(),
                    _ => &[],
                };
                (e.root().to_string(), traces)
            }
            e => (e.to_string(), &[]),
        };
        ErrorReport {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            module: err.module(),
            error: err.to_string(),
            root,
            traces,
        }
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })
        }
        _ => Ok(()),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input {
        what: "output".into(),
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    parse_json(&text, what)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}
