//! Building a project with the configured compiler command and running
//! tests against the resulting binary.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::frontend::ProjectModel;
use crate::suite::{TestCase, TestSuite};

pub const DEFAULT_BUILD: &str = "cc -o {out} {sources}";

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("build tool {0} not found")]
    ToolMissing(String),
    #[error("build failed:\n{0}")]
    Failed(String),
    #[error("empty build command")]
    EmptyCommand,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A compiler invocation template with `{out}`, `{sources}` and optional
/// `{cflags}` placeholders. Without `{cflags}`, flags are appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildCommand(pub String);

impl Default for BuildCommand {
    fn default() -> Self {
        BuildCommand(DEFAULT_BUILD.to_string())
    }
}

impl BuildCommand {
    pub fn argv(&self, out: &str, sources: &[String], cflags: &[String]) -> Vec<String> {
        let mut argv = Vec::new();
        let mut placed_flags = false;
        for word in self.0.split_whitespace() {
            match word {
                "{sources}" => argv.extend(sources.iter().cloned()),
                "{cflags}" => {
                    argv.extend(cflags.iter().cloned());
                    placed_flags = true;
                }
                w => argv.push(w.replace("{out}", out)),
            }
        }
        if !placed_flags {
            argv.extend(cflags.iter().cloned());
        }
        argv
    }

    /// Compiles the implementation files of a project written under `dir`.
    pub fn build(&self, dir: &Path, sources: &[String], defines: &[String]) -> Result<PathBuf, BuildError> {
        let out = dir.join("product.bin");
        let cflags: Vec<String> = defines.iter().map(|d| format!("-D{d}")).collect();
        let argv = self.argv(&out.to_string_lossy(), sources, &cflags);
        let (tool, args) = argv.split_first().ok_or(BuildError::EmptyCommand)?;
        let output = Command::new(tool).args(args).current_dir(dir).stdin(Stdio::null()).output().map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                BuildError::ToolMissing(tool.clone())
            } else {
                BuildError::Io(e)
            }
        })?;
        if !output.status.success() || !out.is_file() {
            return Err(BuildError::Failed(String::from_utf8_lossy(&output.stderr).into_owned()));
        }
        Ok(out)
    }

    /// Writes `project` into a fresh directory below `scratch` and builds it.
    pub fn build_project(
        &self,
        project: &ProjectModel,
        scratch: &Path,
        defines: &[String],
    ) -> Result<PathBuf, BuildError> {
        project.write_to(scratch)?;
        self.build(scratch, &project.c_files(), defines)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub passed: bool,
    pub exit_code: Option<i32>,
    pub timed_out: bool,
}

/// Runs one test in its own scratch directory. Stdout is compared
/// byte-exactly after trailing-newline normalization.
pub fn run_test(binary: &Path, suite: &TestSuite, test: &TestCase, timeout: Duration) -> io::Result<TestOutcome> {
    let scratch = tempfile::tempdir()?;
    let stdin_data = match suite.stdin_path(test) {
        Some(p) => Some(fs::read(p)?),
        None => None,
    };
    let mut child = Command::new(binary)
        .args(&test.args)
        .current_dir(scratch.path())
        .stdin(if stdin_data.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()?;
    let writer = stdin_data.map(|data| {
        let mut pipe = child.stdin.take().expect("piped stdin");
        thread::spawn(move || {
            let _ = pipe.write_all(&data);
        })
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let status = match child.wait_timeout(timeout)? {
        Some(s) => Some(s),
        None => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    };
    if let Some(w) = writer {
        let _ = w.join();
    }
    let out = reader.join().unwrap_or_default();
    let Some(status) = status else {
        return Ok(TestOutcome { name: test.name.clone(), passed: false, exit_code: None, timed_out: true });
    };
    let code = status.code();
    let mut passed = code == Some(test.expected_exit);
    if let Some(expected) = suite.expected_stdout(test)? {
        passed &= trim_newlines(&out) == trim_newlines(&expected);
    }
    Ok(TestOutcome { name: test.name.clone(), passed, exit_code: code, timed_out: false })
}

fn trim_newlines(b: &[u8]) -> &[u8] {
    let mut end = b.len();
    while end > 0 && b[end - 1] == b'\n' {
        end -= 1;
    }
    &b[..end]
}
