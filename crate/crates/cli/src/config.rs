use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;
use dqvrp::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Parse a JSON or TOML (by extension) config file.
pub fn load(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let value = if path.extension().is_some_and(|e| e == "toml") {
        let t: toml::Value = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t)?
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    };
    if !value.is_object() {
        return Err(Error::Config(format!("{}: expected a table at the top level", path.display())));
    }
    Ok(value)
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |v, k| v.get(k))
}

fn overlay(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() && v.get("source").is_none() => overlay(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
}

/// Merge a config file over values built from flags. `flags` maps argument
/// ids to the field they set; a flag given on the command line that the file
/// also sets is overridden by the file, with a warning.
pub fn merge<T: Serialize + DeserializeOwned>(
    from_flags: T,
    file: Option<&Path>,
    matches: &ArgMatches,
    flags: &[(&str, &str)],
) -> Result<T> {
    let Some(file) = file else {
        return Ok(from_flags);
    };
    let config = load(file)?;
    let mut merged = serde_json::to_value(&from_flags)?;
    for (id, path) in flags {
        let explicit = matches.try_get_raw(id).ok().flatten().is_some() && matches.value_source(id) == Some(ValueSource::CommandLine);
        if let (true, Some(file_value)) = (explicit, lookup(&config, path)) {
            if lookup(&merged, path) != Some(file_value) {
                log::warn!("--{} conflicts with `{path}` in {}; using the config file value", id.replace('_', "-"), file.display());
            }
        }
    }
    overlay(&mut merged, &config);
    serde_json::from_value(merged).map_err(|e| Error::Config(format!("{}: {e}", file.display())))
}
