//! CSV and manifest writers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Floats are written with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Output {
    pub dir: PathBuf,
    pub command: &'static str,
    pub config_hash: String,
    pub written: Vec<String>,
    pub derived: BTreeMap<String, serde_json::Value>,
}

impl Output {
    pub fn new(dir: PathBuf, command: &'static str, config_hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(Output { dir, command, config_hash, written: Vec::new(), derived: BTreeMap::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    /// Two comment lines (command, schema, config hash; units) and then a
    /// plain CSV table.
    pub fn csv(&mut self, name: &str, units: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# pagc {} schema={} config_hash={}", self.command, CSV_SCHEMA_VERSION, self.config_hash)?;
        writeln!(file, "# units: {units}")?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(path, body)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        self.derived.insert(key.to_string(), serde_json::to_value(value).expect("serialisable"));
    }

    pub fn finish(self, seed: u64, threads: Option<usize>, execution: &str, seconds: f64) -> Result<(), CliError> {
        let m = RunManifest {
            command: self.command,
            artifact_version: env!("CARGO_PKG_VERSION"),
            csv_schema_version: CSV_SCHEMA_VERSION,
            config_hash: &self.config_hash,
            master_seed: seed,
            execution,
            threads,
            outputs: &self.written,
            derived: &self.derived,
            wall_clock_seconds: seconds,
        };
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        fs::write(self.dir.join(format!("{}.manifest.json", self.command)), s)?;
        Ok(())
    }
}

/// Emitted next to every run. The wall-clock field is the only
/// nondeterministic output.
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    artifact_version: &'a str,
    csv_schema_version: u32,
    config_hash: &'a str,
    master_seed: u64,
    execution: &'a str,
    threads: Option<usize>,
    outputs: &'a [String],
    derived: &'a BTreeMap<String, serde_json::Value>,
    wall_clock_seconds: f64,
}

/// Reads a CSV written by [`Output::csv`] (or any CSV with `#` comments)
/// into its header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}
