use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Library(#[from] relent::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 validation, 2 runtime, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        use relent::Error as E;
        match self {
            CliError::Io { .. } => 3,
            CliError::Json(_) => 2,
            CliError::Library(e) if e.is_io() => 3,
            CliError::Library(e) => match e {
                E::Domain { .. }
                | E::Range { .. }
                | E::InvalidConfig(_)
                | E::UnsupportedLimit(_)
                | E::ShapeMismatch { .. } => 1,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RngInfo {
    pub seed: u64,
    pub threads: usize,
    pub streams: usize,
}

/// Uniform JSON wrapper around every command's output.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub parameters: Map<String, Value>,
    pub results: Value,
    pub rng: Option<RngInfo>,
    pub warnings: Vec<String>,
}

impl Envelope {
    pub fn new(command: &'static str, parameters: Map<String, Value>, results: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            parameters,
            results,
            rng: None,
            warnings: Vec::new(),
        }
    }

    pub fn print(&self) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)?;
        let mut out = std::io::stdout().lock();
        writeln!(out, "{text}").map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
    }
}

/// `{"value": v, "provenance": p}`.
pub fn tagged(value: f64, provenance: &str) -> Value {
    serde_json::json!({ "value": value, "provenance": provenance })
}

pub fn print_csv(header: &str, row: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    write!(out, "{header}\n{row}\n").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}
