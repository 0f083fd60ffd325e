//! Result directory: deterministic JSON/CSV artifacts plus a metadata file
//! that holds everything run-dependent (timings, worker count).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use quasilin::grid::csv_number;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub struct Sink {
    dir: PathBuf,
    timings: Vec<(String, f64)>,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            timings: Vec::new(),
            written: Vec::new(),
        })
    }

    #[cfg(test)]
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|source| CliError::Write { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).expect("serializable result");
        body.push('\n');
        self.text(name, &body)
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.push((stage.to_string(), t0.elapsed().as_secs_f64()));
        out
    }

    pub fn metadata(&mut self, mut extra: Map<String, Value>) -> Result<(), CliError> {
        let timings: Map<String, Value> = self.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        extra.insert("timings_seconds".into(), Value::Object(timings));
        extra.insert("files".into(), json!(self.written));
        self.json("metadata.json", &Value::Object(extra))
    }
}

pub fn two_column(h1: &str, h2: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut s = format!("{h1},{h2}\n");
    for (a, b) in rows {
        let _ = writeln!(s, "{},{}", csv_number(a), csv_number(b));
    }
    s
}

/// Header shared by every result record.
pub fn record(scenario: &str, digest: &str, command: &str, seed: u64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("scenario".into(), json!(scenario));
    m.insert("config_digest".into(), json!(digest));
    m.insert("command".into(), json!(command));
    m.insert("seed".into(), json!(seed));
    m
}
