//! Configuration files: the compliance configuration document in TOML, plus
//! an optional `[classifier]` table.
//!
//! ```toml
//! total_duration_s = 30.0
//! required_movements = [2, 3, 4, 5, 6, 7]
//!
//! [per_movement_min_s]
//! 2 = 4.0
//!
//! [classifier]
//! kind = "external"
//! model_path = "model.json"
//! input_size = 224
//! ```

use std::path::Path;

use anyhow::{bail, Context};
use handwash_core::engine::{ComplianceConfig, ConfigDocument};
use handwash_core::pipeline::ClassifierSpec;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub config: ComplianceConfig,
    pub classifier: Option<ClassifierSpec>,
}

pub fn parse_config(text: &str) -> anyhow::Result<ConfigFile> {
    let mut table: toml::Table = toml::from_str(text)?;
    let classifier = match table.remove("classifier") {
        Some(v) => Some(v.try_into::<ClassifierSpec>().context("invalid [classifier] table")?),
        None => None,
    };
    let doc: ConfigDocument = toml::Value::Table(table).try_into()?;
    Ok(ConfigFile {
        config: ComplianceConfig::from_document(&doc)?,
        classifier,
    })
}

pub fn load_config(path: &Path) -> anyhow::Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

pub fn default_config_toml() -> String {
    toml::to_string(&ComplianceConfig::default().to_document()).expect("config documents serialize")
}

/// JSON merge patch: objects merge key by key, anything else replaces the
/// target. `null` values are rejected rather than deleting keys, since every
/// configuration key has a value.
pub fn merge_patch(target: serde_json::Value, patch: serde_json::Value) -> anyhow::Result<serde_json::Value> {
    use serde_json::Value;
    match (target, patch) {
        (Value::Object(mut t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    bail!("'{k}' cannot be null");
                }
                let merged = match t.remove(&k) {
                    Some(existing) => merge_patch(existing, v)?,
                    None => v,
                };
                t.insert(k, merged);
            }
            Ok(Value::Object(t))
        }
        (_, p) => Ok(p),
    }
}
