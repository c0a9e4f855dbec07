use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use onsager_core::field::io::atomic_write;
use onsager_core::Result;

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub version: String,
    pub defaults_version: u32,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seeds: Vec<u64>,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
}

pub struct Recorder {
    command: &'static str,
    started: Instant,
    started_unix: f64,
}

impl Recorder {
    pub fn start(command: &'static str) -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Recorder { command, started: Instant::now(), started_unix }
    }

    /// Writes the manifest to `path`.
    pub fn finish(
        self,
        path: &Path,
        parameters: &impl Serialize,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        seeds: Vec<u64>,
    ) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            argv: std::env::args().collect(),
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            version: env!("CARGO_PKG_VERSION").to_string(),
            defaults_version: onsager_core::defaults::defaults().version,
            inputs,
            outputs,
            seeds,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        atomic_write(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            w.write_all(b"\n")
        })
    }
}

/// `<file>.run.json` beside an output file.
pub fn beside(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    output.with_file_name(name)
}
