//! Workspace layout and the JSON run log.
//!
//! ```text
//! <workspace>/
//!   platform/                 stored artifacts
//!   organs/<feature>.json     adapted organs
//!   postop/                   postoperative source tree
//!   implant-log.json
//!   clone-report-<feature>.json
//!   validation-report.json
//!   run-log.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use transplant_core::platform::to_sorted_json;

pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: &Path) -> Self {
        Workspace { root: root.to_path_buf() }
    }

    pub fn platform(&self) -> PathBuf {
        self.root.join("platform")
    }

    pub fn organ(&self, feature: &str) -> PathBuf {
        self.root.join("organs").join(format!("{feature}.json"))
    }

    pub fn postop(&self) -> PathBuf {
        self.root.join("postop")
    }

    pub fn implant_log(&self) -> PathBuf {
        self.root.join("implant-log.json")
    }

    pub fn clone_report(&self, feature: &str) -> PathBuf {
        self.root.join(format!("clone-report-{feature}.json"))
    }

    pub fn validation_report(&self) -> PathBuf {
        self.root.join("validation-report.json")
    }

    pub fn run_log(&self) -> PathBuf {
        self.root.join("run-log.json")
    }
}

/// Writes `value` as sorted JSON, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, to_sorted_json(value)?)
}

/// Machine-readable record of one invocation.
#[derive(Debug, Default, Serialize)]
pub struct RunLog {
    pub command: String,
    pub tool_version: String,
    pub feature: Option<String>,
    pub seeds: Vec<u64>,
    /// Wall-clock milliseconds per stage.
    pub stages: BTreeMap<String, u64>,
    pub verdict: Option<String>,
    pub exit_code: u8,
    pub organ_statements: Option<usize>,
    pub fitness: Option<String>,
    pub error: Option<String>,
}

impl RunLog {
    pub fn new(command: &str) -> Self {
        RunLog { command: command.into(), tool_version: env!("CARGO_PKG_VERSION").into(), ..Default::default() }
    }

    /// Runs `f`, recording its duration under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        let ms = start.elapsed().as_millis().try_into().unwrap_or(u64::MAX);
        *self.stages.entry(stage.to_string()).or_default() += ms;
        out
    }
}
