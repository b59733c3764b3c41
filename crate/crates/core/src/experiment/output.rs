//! CSV tables with a JSON metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Identifies the run that produced a table.
#[derive(Clone, Debug, Serialize)]
pub struct RunMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub episodes: Option<u64>,
}

impl RunMeta {
    pub fn new(command: &str, config_source: &str, seed: u64, episodes: Option<u64>) -> Self {
        RunMeta {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: hex::encode(Sha256::digest(config_source.as_bytes())),
            seed,
            episodes,
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    meta: &'a RunMeta,
    file: &'a str,
    columns: &'a [&'a str],
    rows: usize,
}

/// Formats an optional number, leaving absent values empty.
pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `name` and `name.meta.json` into `dir`.
pub fn write_table(
    dir: &Path,
    name: &str,
    columns: &[&str],
    rows: &[Vec<String>],
    meta: &RunMeta,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(columns)?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        w.write_record(row)?;
    }
    w.flush()?;
    write_sidecar(dir, name, columns, rows.len(), meta)?;
    Ok(path)
}

/// Writes `name.meta.json` for a table written by other means.
pub fn write_sidecar(dir: &Path, name: &str, columns: &[&str], rows: usize, meta: &RunMeta) -> Result<()> {
    let sidecar = Sidecar {
        meta,
        file: name,
        columns,
        rows,
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    fs::write(dir.join(format!("{name}.meta.json")), json)?;
    Ok(())
}
