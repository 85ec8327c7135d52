//! CSV assembly and the run manifest that makes every emission replayable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Record accompanying every CSV: the resolved parameters that produced it.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: None,
            parameters,
            outputs: Vec::new(),
        }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.master_seed = Some(seed);
        self
    }
}

/// In-memory CSV: '#' comment lines, one header naming columns and units,
/// then rows. Small enough to assemble whole and write once.
#[derive(Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new() -> Self {
        Csv::default()
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.buf, "# {line}");
    }

    pub fn header(&mut self, line: &str) {
        self.buf.push_str(line);
        self.buf.push('\n');
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let mut first = true;
        for cell in cells {
            if !first {
                self.buf.push(',');
            }
            self.buf.push_str(&cell);
            first = false;
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// 10 significant digits, with infinities spelled out.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.9e}")
}

pub fn int<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the CSV to `out` (standard output when absent) and its manifest
/// next to it (standard error when the CSV goes to standard output).
pub fn emit(csv: Csv, mut manifest: RunManifest, out: Option<&Path>) -> anyhow::Result<()> {
    let body = csv.into_string();
    match out {
        Some(path) => {
            fs::write(path, &body).with_context(|| format!("writing {}", path.display()))?;
            let mpath = manifest_path(path);
            manifest.outputs.push(path.display().to_string());
            let json = serde_json::to_string_pretty(&manifest)?;
            fs::write(&mpath, json + "\n")
                .with_context(|| format!("writing {}", mpath.display()))?;
        }
        None => {
            print!("{body}");
            manifest.outputs.push("stdout".to_string());
            eprintln!("{}", serde_json::to_string(&manifest)?);
        }
    }
    Ok(())
}
