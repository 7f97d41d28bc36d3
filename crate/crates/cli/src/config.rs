//! `--config` files and their merge with command-line flags.
//!
//! Option structs round-trip through JSON: every field whose value did not
//! come from the command line is replaced by the config entry of the same
//! name, if there is one. Keys may use `-` or `_`.

use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Loads a config object. A run manifest is accepted too; its recorded
/// configuration is used.
pub fn load(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Usage(format!("config {} must be a JSON object", path.display())));
    };
    if map.contains_key("subcommand") {
        if let Some(Value::Object(inner)) = map.remove("config") {
            map = inner;
        }
    }
    Ok(map.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect())
}

/// Fills fields of `args` not given on the command line from `config`.
/// Returns the merged options and the config keys it used.
pub fn merge<T: Serialize + DeserializeOwned>(
    args: &T,
    matches: &ArgMatches,
    config: &Map<String, Value>,
) -> Result<(T, Vec<String>), CliError> {
    let mut value = serde_json::to_value(args).map_err(|e| CliError::Usage(e.to_string()))?;
    let fields = value.as_object_mut().expect("options serialize to a JSON object");
    let mut used = Vec::new();
    for (key, slot) in fields.iter_mut() {
        let from_cli = matches.value_source(key) == Some(ValueSource::CommandLine);
        if let (false, Some(v)) = (from_cli, config.get(key)) {
            *slot = v.clone();
            used.push(key.clone());
        }
    }
    let merged = serde_json::from_value(value)
        .map_err(|e| CliError::Usage(format!("config value has the wrong type: {e}")))?;
    Ok((merged, used))
}
