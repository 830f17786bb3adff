//! `--config` files. A config is a JSON object of flag values; keys naming
//! a subcommand hold a nested object that applies only to that command and
//! wins over top-level keys. Top-level keys reach only the commands that
//! have such a flag. A run manifest is accepted too, replaying the options
//! it recorded.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::CommandFactory;
use serde_json::{Map, Value};
use trafficsim::io::{read_text, DocumentHeader, SchemaKind};

use crate::args::{Cli, Command};

/// Flag values for `command`, as command-line tokens.
pub fn config_args(path: &Path, command: &str) -> Result<Vec<OsString>> {
    let text = read_text(path)?;
    let root: Value = serde_json::from_str(&text).with_context(|| format!("{}: not valid JSON", path.display()))?;
    let Value::Object(root) = root else {
        bail!("{}: a config must be a JSON object", path.display());
    };
    let root = match root.get("header") {
        Some(header) => manifest_config(header, &root, path)?,
        None => root,
    };

    let accepted = flags_of(command);
    let mut merged = Map::new();
    for (key, value) in &root {
        if Command::NAMES.contains(&key.as_str()) {
            continue;
        }
        let flag = key.replace('_', "-");
        if flag == "config" || flag == "manifest" {
            bail!("{}: `{key}` cannot be set from a config file", path.display());
        }
        if accepted.contains(&flag) {
            merged.insert(key.clone(), value.clone());
        } else if !Command::NAMES.iter().any(|c| flags_of(c).contains(&flag)) {
            bail!("{}: no command has a `--{flag}` option", path.display());
        }
    }
    match root.get(command) {
        Some(Value::Object(section)) => merged.extend(section.clone()),
        Some(_) => bail!("{}: section `{command}` must be an object", path.display()),
        None => {}
    }

    let mut out = Vec::new();
    for (key, value) in merged {
        if key == "config" || key == "manifest" {
            bail!("{}: `{key}` cannot be set from a config file", path.display());
        }
        push_flag(&mut out, &key, &value).with_context(|| format!("{}: key `{key}`", path.display()))?;
    }
    Ok(out)
}

/// Long flag names of a subcommand.
fn flags_of(command: &str) -> Vec<String> {
    Cli::command()
        .find_subcommand(command)
        .map(|c| c.get_arguments().filter_map(|a| a.get_long()).map(str::to_string).collect())
        .unwrap_or_default()
}

fn manifest_config(header: &Value, root: &Map<String, Value>, path: &Path) -> Result<Map<String, Value>> {
    let header: DocumentHeader = serde_json::from_value(header.clone())?;
    header.check(SchemaKind::RunManifest)?;
    match root.get("data").and_then(|d| d.get("config")) {
        Some(Value::Object(config)) => Ok(config.clone()),
        _ => bail!("{}: manifest has no `config` object", path.display()),
    }
}

fn push_flag(out: &mut Vec<OsString>, key: &str, value: &Value) -> Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        Value::Null | Value::Bool(false) => {}
        Value::Bool(true) => out.push(flag.into()),
        Value::Number(n) => out.extend([flag.into(), n.to_string().into()]),
        Value::String(s) => out.extend([flag.into(), s.into()]),
        Value::Array(items) => {
            for item in items {
                push_flag(out, key, item)?;
            }
        }
        Value::Object(_) => bail!("nested objects are only allowed as command sections"),
    }
    Ok(())
}

/// Value of `--config`, wherever it appears.
pub fn find_config(args: &[OsString]) -> Option<std::path::PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(Into::into);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Argument vector with config flags placed right after the subcommand, so
/// flags given on the command line override them.
pub fn merge_args(args: &[OsString], config: Option<&Path>) -> Result<Vec<OsString>> {
    let Some(path) = config else {
        return Ok(args.to_vec());
    };
    let mut k = 1;
    while k < args.len() {
        let a = args[k].to_string_lossy();
        if a == "--config" || a == "--manifest" {
            k += 2;
        } else if a.starts_with('-') {
            k += 1;
        } else {
            break;
        }
    }
    let Some(command) = args.get(k).map(|a| a.to_string_lossy().into_owned()) else {
        return Ok(args.to_vec());
    };
    let mut out = args[..=k].to_vec();
    out.extend(config_args(path, &command)?);
    out.extend_from_slice(&args[k + 1..]);
    Ok(out)
}
