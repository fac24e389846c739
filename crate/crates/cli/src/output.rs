//! Output directory bookkeeping and the JSON run summary.

use mdfrac_core::mesh::vtk::{write_vtk, Field};
use mdfrac_core::{Error, Grid, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Writes files into one directory and remembers each of them for the
/// summary.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Outputs> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn track(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.track(name);
        std::fs::write(&path, contents).map_err(|e| Error::Io(e).context(format!("writing {}", path.display())))
    }

    pub fn vtk(&mut self, name: &str, g: &Grid, subdomain: usize, fields: &[(&str, Field)]) -> Result<()> {
        let path = self.track(name);
        let f = File::create(&path).map_err(|e| Error::Io(e).context(format!("creating {}", path.display())))?;
        write_vtk(g, subdomain, fields, BufWriter::new(f)).map_err(|e| Error::Io(e).context(format!("writing {}", path.display())))
    }
}

/// Counters and metrics reported by one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub steps: usize,
    pub newton_iterations: usize,
    pub final_residual: Option<f64>,
    pub metrics: Map<String, Value>,
}

impl Outcome {
    pub fn metric(&mut self, name: &str, v: impl Into<Value>) {
        self.metrics.insert(name.to_string(), v.into());
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    model: &'a str,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    wall_time_s: f64,
    steps: usize,
    newton_iterations: usize,
    final_residual: Option<f64>,
    metrics: &'a Map<String, Value>,
    files: Vec<String>,
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Write `summary.json`; it lists every other file written to the directory.
pub fn write_summary(
    out: &mut Outputs,
    command: &str,
    model: &str,
    outcome: &Outcome,
    error: Option<&Error>,
    wall_time_s: f64,
) -> Result<()> {
    let files = out.files().iter().filter(|f| *f != SUMMARY_FILE).cloned().collect();
    let s = Summary {
        command,
        model,
        status: if error.is_some() { "error" } else { "ok" },
        error: error.map(|e| e.to_string()),
        wall_time_s,
        steps: outcome.steps,
        newton_iterations: outcome.newton_iterations,
        final_residual: outcome.final_residual.filter(|r| r.is_finite()),
        metrics: &outcome.metrics,
        files,
    };
    let json = serde_json::to_string_pretty(&s).expect("summary serializes");
    out.text(SUMMARY_FILE, &(json + "\n"))
}
