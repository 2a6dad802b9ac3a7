use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use spectra4::problem::ProblemConfig;

/// Everything needed to reproduce a run. Timings live here and nowhere else.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config_path: Option<String>,
    pub problem: Option<ProblemConfig>,
    pub tolerances: Value,
    pub jobs: usize,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(skip)]
    phase_start: Option<(String, Instant)>,
}

impl RunManifest {
    pub fn new(subcommand: &str, jobs: usize) -> Self {
        Self {
            tool: "spectra4",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            argv: std::env::args().collect(),
            config_path: None,
            problem: None,
            tolerances: Value::Null,
            jobs,
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
            phase_start: None,
        }
    }

    pub fn begin(&mut self, phase: &str) {
        self.end();
        self.phase_start = Some((phase.to_string(), Instant::now()));
    }

    pub fn end(&mut self) {
        if let Some((name, t)) = self.phase_start.take() {
            self.timings_ms.insert(name, t.elapsed().as_secs_f64() * 1e3);
        }
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write(&mut self, out: &Path) -> Result<PathBuf> {
        self.end();
        let path = Self::path_for(out);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// `# manifest=<file name>` line that opens every CSV written next to `out`.
pub fn csv_header(out: Option<&Path>) -> String {
    match out {
        Some(p) => {
            let m = RunManifest::path_for(p);
            let name = m
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            format!("# manifest={name}\n")
        }
        None => String::new(),
    }
}
