//! TOML config files. Top-level scalars apply to any subcommand that takes an
//! argument of the same name; a table named after the subcommand applies to
//! that subcommand only. Keys may use `-` or `_`. Flags given on the command
//! line always win.

use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::UsageError;

pub fn load(path: &Path) -> anyhow::Result<toml::Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
}

fn has_arg(cmd: &Command, id: &str) -> bool {
    cmd.get_arguments().any(|a| a.get_id() == id)
}

fn from_command_line(m: &ArgMatches, id: &str) -> bool {
    matches!(m.value_source(id), Some(ValueSource::CommandLine | ValueSource::EnvVariable))
}

/// Overlays config values onto parsed arguments wherever the command line
/// left the argument at its default.
pub fn merge<T>(
    args: T,
    cmd: &Command,
    matches: &ArgMatches,
    table: &toml::Table,
) -> anyhow::Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let subcommand = cmd.get_name();
    let mut value = serde_json::to_value(&args)?;
    let obj = value.as_object_mut().expect("argument structs serialize to objects");
    let mut overlay = |key: &str, v: &toml::Value, strict: bool| -> anyhow::Result<()> {
        let key = key.replace('-', "_");
        let key = key.as_str();
        if !has_arg(cmd, key) {
            if strict {
                return Err(UsageError(format!(
                    "config key '{key}' is not an option of '{subcommand}'"
                ))
                .into());
            }
            return Ok(());
        }
        if !from_command_line(matches, key) {
            obj.insert(key.to_owned(), serde_json::to_value(v)?);
        }
        Ok(())
    };
    for (key, v) in table {
        if !v.is_table() {
            overlay(key, v, false)?;
        }
    }
    if let Some(section) = table.get(subcommand) {
        let section = section
            .as_table()
            .ok_or_else(|| UsageError(format!("config entry '{subcommand}' must be a table")))?;
        for (key, v) in section {
            overlay(key, v, true)?;
        }
    }
    serde_json::from_value(Value::Object(obj.clone()))
        .map_err(|e| UsageError(format!("invalid config value: {e}")).into())
}
