//! Test suites: ice-box, regression, regression++ and acceptance.
//!
//! A suite lives in a directory holding `suite.json`; `stdin` and
//! `expected_stdout` name files relative to that directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuiteKind {
    #[serde(rename = "regression")]
    Regression,
    #[serde(rename = "regression++")]
    RegressionPlus,
    #[serde(rename = "acceptance")]
    Acceptance,
    #[serde(rename = "icebox")]
    Icebox,
}

impl SuiteKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteKind::Regression => "regression",
            SuiteKind::RegressionPlus => "regression++",
            SuiteKind::Acceptance => "acceptance",
            SuiteKind::Icebox => "icebox",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdin: Option<String>,
    #[serde(default)]
    pub expected_exit: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_stdout: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub kind: SuiteKind,
    pub tests: Vec<TestCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_note: Option<f64>,
    /// Directory that relative file names resolve against.
    #[serde(skip)]
    pub dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("reading suite {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed suite {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

impl TestSuite {
    pub fn new(kind: SuiteKind, dir: impl Into<PathBuf>) -> Self {
        TestSuite { kind, tests: Vec::new(), coverage_note: None, dir: dir.into() }
    }

    /// Reads `<dir>/suite.json`.
    pub fn load(dir: &Path) -> Result<Self, SuiteError> {
        let path = dir.join("suite.json");
        let text = fs::read_to_string(&path).map_err(|source| SuiteError::Io { path: path.clone(), source })?;
        let mut suite: TestSuite = serde_json::from_str(&text)
            .map_err(|e| SuiteError::Malformed { path: path.clone(), message: e.to_string() })?;
        suite.dir = dir.to_path_buf();
        for t in &suite.tests {
            for f in t.stdin.iter().chain(&t.expected_stdout) {
                if !dir.join(f).is_file() {
                    return Err(SuiteError::Malformed { path, message: format!("test {}: missing file {f}", t.name) });
                }
            }
        }
        Ok(suite)
    }

    pub fn stdin_path(&self, t: &TestCase) -> Option<PathBuf> {
        t.stdin.as_ref().map(|f| self.dir.join(f))
    }

    pub fn expected_stdout(&self, t: &TestCase) -> io::Result<Option<Vec<u8>>> {
        t.expected_stdout.as_ref().map(|f| fs::read(self.dir.join(f))).transpose()
    }

    /// Writes the suite into `dest`, copying referenced files under
    /// `data/` so the result is self-contained.
    pub fn save(&self, dest: &Path) -> io::Result<TestSuite> {
        fs::create_dir_all(dest.join("data"))?;
        let mut out = TestSuite::new(self.kind, dest);
        out.coverage_note = self.coverage_note;
        for t in &self.tests {
            let mut t2 = t.clone();
            let stem = sanitize(&t.name);
            if let Some(src) = self.stdin_path(t) {
                let rel = format!("data/{stem}.in");
                copy_if_different(&src, &dest.join(&rel))?;
                t2.stdin = Some(rel);
            }
            if let Some(f) = &t.expected_stdout {
                let rel = format!("data/{stem}.out");
                copy_if_different(&self.dir.join(f), &dest.join(&rel))?;
                t2.expected_stdout = Some(rel);
            }
            out.tests.push(t2);
        }
        fs::write(dest.join("suite.json"), crate::platform::to_sorted_json(&out)?)?;
        Ok(out)
    }

    /// Every file the suite references, relative to its directory.
    pub fn files(&self) -> Vec<String> {
        let mut out: Vec<String> =
            self.tests.iter().flat_map(|t| t.stdin.iter().chain(&t.expected_stdout).cloned()).collect();
        out.sort();
        out.dedup();
        out
    }
}

fn copy_if_different(src: &Path, dest: &Path) -> io::Result<()> {
    if src == dest {
        return Ok(());
    }
    let bytes = fs::read(src)?;
    fs::write(dest, bytes)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}
