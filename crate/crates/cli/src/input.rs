//! Scenario files.
//!
//! Single-resource form: `{"a": -200, "prosumers": [{"c": 0.003, "d": 0.042, "D": 100, "a_i": -150}]}`
//! with `a_i` optional. Multi-resource form: `{"a": -200, "prosumers": [{"D": 100, "resources": [{"c", "d"}]}]}`.

use std::path::Path;

use energy_sharing::analysis::GeneratorBounds;
use energy_sharing::{MrpProsumer, MrpScenario, Prosumer, Scenario};
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioFile {
    Single(Scenario),
    Multi(MrpScenario),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SingleDoc {
    a: f64,
    prosumers: Vec<Prosumer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiDoc {
    a: f64,
    prosumers: Vec<MrpProsumer>,
}

/// A loaded file together with the SHA-256 of its bytes.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> CliResult<(Vec<u8>, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let d = digest(&bytes);
    Ok((bytes, d))
}

fn field_error(e: serde_json::Error, index: Option<usize>) -> CliError {
    match index {
        Some(i) => CliError::Input(format!("prosumers[{i}]: {e}")),
        None => CliError::Input(e.to_string()),
    }
}

fn is_multi(doc: &Value) -> bool {
    doc.get("prosumers")
        .and_then(Value::as_array)
        .is_some_and(|list| list.iter().any(|p| p.get("resources").is_some()))
}

/// Parses either scenario form and validates it.
pub fn parse_scenario(text: &[u8]) -> CliResult<ScenarioFile> {
    let doc: Value = serde_json::from_slice(text).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))?;
    if !doc.is_object() {
        return Err(CliError::Input("scenario must be a JSON object".into()));
    }
    // Decode prosumers one at a time so errors can name the offending entry.
    let entries = doc
        .get("prosumers")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Input("prosumers: missing or not an array".into()))?;
    for (i, entry) in entries.iter().enumerate() {
        let result = if is_multi(&doc) {
            serde_json::from_value::<MrpProsumer>(entry.clone()).map(drop)
        } else {
            serde_json::from_value::<Prosumer>(entry.clone()).map(drop)
        };
        result.map_err(|e| field_error(e, Some(i)))?;
    }
    if is_multi(&doc) {
        let d: MultiDoc = serde_json::from_value(doc).map_err(|e| field_error(e, None))?;
        Ok(ScenarioFile::Multi(MrpScenario::new(d.a, d.prosumers).map_err(CliError::input)?))
    } else {
        let d: SingleDoc = serde_json::from_value(doc).map_err(|e| field_error(e, None))?;
        Ok(ScenarioFile::Single(Scenario::new(d.a, d.prosumers).map_err(CliError::input)?))
    }
}

pub fn load_scenario(path: &Path) -> CliResult<Loaded<ScenarioFile>> {
    let (bytes, digest) = read(path)?;
    Ok(Loaded { value: parse_scenario(&bytes)?, digest })
}

pub fn load_bounds(path: &Path) -> CliResult<Loaded<GeneratorBounds>> {
    let (bytes, digest) = read(path)?;
    let value: GeneratorBounds =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("bounds file: {e}")))?;
    value.validate().map_err(CliError::input)?;
    Ok(Loaded { value, digest })
}

impl ScenarioFile {
    pub fn single(self) -> CliResult<Scenario> {
        match self {
            ScenarioFile::Single(s) => Ok(s),
            ScenarioFile::Multi(_) => Err(CliError::Input("expected a single-resource scenario".into())),
        }
    }

    pub fn multi(self) -> CliResult<MrpScenario> {
        match self {
            ScenarioFile::Multi(s) => Ok(s),
            ScenarioFile::Single(_) => Err(CliError::Input("expected a multi-resource scenario".into())),
        }
    }
}
