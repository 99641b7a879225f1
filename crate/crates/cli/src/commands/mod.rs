use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub mod decompose;
pub mod embed;
pub mod gen;
pub mod join;
pub mod size;
pub mod verify;

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Parses `"0.1,0.2"` into a list of reals.
pub fn parse_list(name: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("{name}: {t:?} is not a number")))
        })
        .collect()
}
