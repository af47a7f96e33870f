//! Config file + flag merging. A config file is TOML or JSON (by extension);
//! it is either a flat table of the subcommand's options or has a table named
//! after the subcommand. Flags given on the command line win.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn load_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        _ => {
            let t: toml::Table =
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            serde_json::to_value(t)?
        }
    };
    if !value.is_object() {
        bail!("{}: config must be a table", path.display());
    }
    Ok(value)
}

/// Overlays the non-null fields of `flags` on the file's section for
/// `command`, then deserializes the result.
pub fn merge<T: Serialize + DeserializeOwned>(
    command: &str,
    file: Option<&Value>,
    flags: &T,
) -> Result<T> {
    let mut base = match file {
        Some(Value::Object(m)) => match m.get(command) {
            Some(Value::Object(section)) => section.clone(),
            _ => m.clone(),
        },
        _ => Map::new(),
    };
    let Value::Object(over) = serde_json::to_value(flags)? else {
        bail!("internal: flags are not a table");
    };
    for (k, v) in over {
        let empty_list = matches!(&v, Value::Array(a) if a.is_empty());
        if !v.is_null() && !empty_list {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base))
        .map_err(|e| anyhow::anyhow!("invalid config for `{command}`: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Opts {
        seed: Option<u64>,
        lr: Option<f64>,
        #[serde(default)]
        list: Vec<f64>,
    }

    #[test]
    fn flags_override_file_and_sections_apply() {
        let file = serde_json::json!({"train": {"seed": 3, "lr": 0.1}, "seed": 99});
        let flags = Opts {
            seed: None,
            lr: Some(0.5),
            list: vec![],
        };
        let got: Opts = merge("train", Some(&file), &flags).unwrap();
        assert_eq!(
            got,
            Opts {
                seed: Some(3),
                lr: Some(0.5),
                list: vec![]
            }
        );
    }

    #[test]
    fn unknown_field_is_named() {
        let file = serde_json::json!({"sede": 3});
        let err = merge("x", Some(&file), &Opts::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("sede"), "{err}");
    }
}
