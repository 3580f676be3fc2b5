//! JSON model files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "theta": 0.5,
//!   "transitions": [[1, 1], [1, 1]],
//!   "potential_f": { "range": 1, "values": { "1": 0.0, "2": 0.0 } },
//!   "observable_psi": { "range": 1, "values": { "1": 1.0, "2": 0.0 } },
//!   "labels": ["a", "b"]
//! }
//! ```
//!
//! Word keys are 1-based symbol strings (`"121"`, or `"1,10,2"` for more
//! than nine symbols). Tables must list every admissible word of the given
//! range and nothing else.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermo_core::{Potential, TransitionMatrix, Word};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub range: usize,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub schema_version: u32,
    pub theta: f64,
    pub transitions: Vec<Vec<i64>>,
    pub potential_f: TableConfig,
    pub observable_psi: TableConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {field}: {message}")]
    Schema { path: PathBuf, field: String, message: String },
    #[error("{path}: {field}: {source}")]
    Model { path: PathBuf, field: String, source: thermo_core::Error },
}

/// A validated model.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub shift: TransitionMatrix,
    pub f: Potential,
    pub psi: Potential,
}

pub fn load_model(path: &Path) -> Result<Model, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_model(&text, path)
}

/// Parses and validates model text; `path` is only used in messages.
pub fn parse_model(text: &str, path: &Path) -> Result<Model, ConfigError> {
    let config: ModelConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build_model(config, path)
}

fn build_model(config: ModelConfig, path: &Path) -> Result<Model, ConfigError> {
    let schema = |field: &str, message: String| ConfigError::Schema { path: path.into(), field: field.into(), message };
    let model = |field: String, source| ConfigError::Model { path: path.into(), field, source };
    if config.schema_version != SCHEMA_VERSION {
        return Err(schema(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", config.schema_version),
        ));
    }
    let shift = TransitionMatrix::new(&config.transitions).map_err(|e| model("transitions".into(), e))?;
    if let Some(labels) = &config.labels {
        if labels.len() != shift.size() {
            return Err(schema("labels", format!("expected {} labels, got {}", shift.size(), labels.len())));
        }
    }
    let table = |name: &str, t: &TableConfig| -> Result<Potential, ConfigError> {
        let mut map = HashMap::with_capacity(t.values.len());
        for (key, &value) in &t.values {
            let field = format!("{name}.values.{key}");
            let word = Word::parse(key).map_err(|e| model(field.clone(), e))?;
            if word.len() != t.range || !shift.is_admissible(&word) {
                return Err(model(field, thermo_core::Error::InadmissibleWord(key.clone())));
            }
            if !value.is_finite() {
                return Err(schema(&field, format!("value {value} is not finite")));
            }
            map.insert(word, value);
        }
        Potential::new(&shift, t.range, &map, config.theta).map_err(|e| model(name.into(), e))
    };
    let f = table("potential_f", &config.potential_f)?;
    let psi = table("observable_psi", &config.observable_psi)?;
    Ok(Model { config, shift, f, psi })
}

/// The configuration describing an in-memory model.
pub fn to_config(f: &Potential, psi: &Potential) -> ModelConfig {
    let table = |g: &Potential| TableConfig {
        range: g.range(),
        values: g.words().iter().zip(g.values()).map(|(w, &v)| (w.to_string(), v)).collect(),
    };
    ModelConfig {
        schema_version: SCHEMA_VERSION,
        theta: f.theta(),
        transitions: f.shift().rows(),
        potential_f: table(f),
        observable_psi: table(psi),
        labels: None,
    }
}
