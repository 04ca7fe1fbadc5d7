//! `manifest.json`: everything needed to reproduce a run, plus checksums of
//! what it produced.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Value;
use crate::{CliError, ConfigDocument};

pub const SCHEMA_VERSION: u32 = 1;
pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    pub seed: u64,
    pub stream_id: u64,
    pub format: String,
    pub output_dir: String,
    /// Directory relative config paths resolve against.
    pub base_dir: String,
    pub config: BTreeMap<String, serde_json::Value>,
    /// SHA-256 of every input file, keyed by the path as written in the config.
    pub inputs: BTreeMap<String, String>,
    pub status: Status,
    pub exit_code: Option<i32>,
    pub error: Option<String>,
    /// SHA-256 of every file written next to the manifest.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_to_json(doc: &ConfigDocument) -> BTreeMap<String, serde_json::Value> {
    doc.entries()
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("config values serialise")))
        .collect()
}

fn value_from_json(v: &serde_json::Value) -> Result<Value, String> {
    Ok(match v {
        serde_json::Value::Bool(b) => Value::Bool(*b),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) if !n.is_f64() => Value::Int(i),
            _ => Value::Real(n.as_f64().ok_or("number out of range")?),
        },
        serde_json::Value::String(s) => Value::Str(s.clone()),
        serde_json::Value::Array(a) => Value::List(a.iter().map(value_from_json).collect::<Result<_, _>>()?),
        _ => return Err("unsupported value".into()),
    })
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("manifest {}: {e}", path.display())))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!("unsupported manifest schema_version {}", m.schema_version)));
        }
        Ok(m)
    }

    pub fn config_document(&self) -> Result<ConfigDocument, CliError> {
        let entries = self
            .config
            .iter()
            .map(|(k, v)| value_from_json(v).map(|v| (k.clone(), v)).map_err(|e| CliError::Validation(format!("manifest key {k}: {e}"))))
            .collect::<Result<_, _>>()?;
        Ok(ConfigDocument::from_entries(entries, &self.base_dir))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        std::fs::write(dir.join(FILE_NAME), text)?;
        Ok(())
    }
}
