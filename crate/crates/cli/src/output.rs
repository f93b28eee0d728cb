use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Shortest round-trip text; integral values without a fraction.
fn cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Serialize)]
struct Artifact {
    file: String,
    bytes: usize,
    sha256: String,
}

/// Artifacts of one run, written in order and hashed for the manifest.
pub struct Output {
    dir: PathBuf,
    format: Format,
    artifacts: Vec<Artifact>,
}

impl Output {
    pub fn create(dir: &Path, format: Format) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, file: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(file);
        fs::write(&path, bytes).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(Artifact {
            file: file.into(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// A JSON report; objects gain a `schema_version` field.
    pub fn json<T: Serialize>(&mut self, file: &str, report: &T) -> Result<(), Failure> {
        let mut value = serde_json::to_value(report).map_err(|e| Failure::usage(format!("serialising {file}: {e}")))?;
        if let Value::Object(map) = &mut value {
            map.insert("schema_version".into(), SCHEMA_VERSION.into());
        }
        let mut text = serde_json::to_string_pretty(&value).expect("json value");
        text.push('\n');
        self.write(file, text.as_bytes())
    }

    /// Grid data as `<stem>.csv`, or `<stem>.json` under `--format json`.
    pub fn table(&mut self, stem: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), Failure> {
        match self.format {
            Format::Csv => {
                let mut text = columns.join(",");
                text.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(|&v| cell(v)).collect();
                    text.push_str(&cells.join(","));
                    text.push('\n');
                }
                self.write(&format!("{stem}.csv"), text.as_bytes())
            }
            Format::Json => {
                let records: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        Value::Object(
                            columns
                                .iter()
                                .map(|c| c.to_string())
                                .zip(row.iter().map(|&v| json!(v)))
                                .collect(),
                        )
                    })
                    .collect();
                self.json(&format!("{stem}.json"), &json!({ "columns": columns, "rows": records }))
            }
        }
    }

    pub fn finish(self, subcommand: &str, argv: &[String], seed: u64, threads: usize) -> Result<(), Failure> {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "mixllt",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "argv": argv,
            "seed": seed,
            "threads": threads,
            "created_unix": created,
            "artifacts": self.artifacts,
        });
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("json value");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
    }
}
