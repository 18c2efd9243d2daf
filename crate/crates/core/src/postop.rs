//! Postoperative validation: regression, regression++ and acceptance
//! suites run against the implanted product, and promotion of the new
//! suites into the host's regression suite.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::ProjectModel;
use crate::sandbox::{run_test, BuildCommand, BuildError, TestOutcome};
use crate::suite::{SuiteKind, TestSuite};

#[derive(Debug, Error)]
pub enum PostopError {
    #[error("no {0} suite given")]
    MissingSuite(&'static str),
    #[error("more than one {0} suite given")]
    DuplicateSuite(&'static str),
    #[error("tests can only be promoted after a successful validation")]
    PromotionBeforeValidation,
    #[error(transparent)]
    Build(BuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Ok,
    Broken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub kind: SuiteKind,
    pub passed: usize,
    pub total: usize,
    /// The product did not build, so nothing ran.
    pub build_failed: bool,
    /// Not run because an earlier suite failed.
    pub skipped: bool,
    /// Sorted by test name.
    pub tests: Vec<TestOutcome>,
    pub duration_ms: u64,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        !self.build_failed && !self.skipped && self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suites: Vec<SuiteResult>,
    pub verdict: Verdict,
    pub duration_ms: u64,
}

impl ValidationReport {
    pub fn suite(&self, kind: SuiteKind) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.kind == kind)
    }

    pub fn to_json(&self) -> std::io::Result<String> {
        crate::platform::to_sorted_json(self)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json()?)
    }
}

/// How suites are run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub build: BuildCommand,
    pub defines: Vec<String>,
    pub timeout: Duration,
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { build: BuildCommand::default(), defines: Vec::new(), timeout: Duration::from_secs(5), jobs: 1 }
    }
}

fn millis(d: Duration) -> u64 {
    d.as_millis().try_into().unwrap_or(u64::MAX)
}

/// Builds once and runs every test in isolation. A failed build counts
/// every test as failed.
pub fn run_suite(project: &ProjectModel, suite: &TestSuite, opts: &RunOptions) -> Result<SuiteResult, PostopError> {
    let start = Instant::now();
    let dir = tempfile::tempdir()?;
    let total = suite.tests.len();
    let binary = match opts.build.build_project(project, dir.path(), &opts.defines) {
        Ok(b) => b,
        Err(BuildError::Failed(msg)) => {
            log::warn!("{} suite: product does not build:\n{msg}", suite.kind.as_str());
            return Ok(SuiteResult {
                kind: suite.kind,
                passed: 0,
                total,
                build_failed: true,
                skipped: false,
                tests: Vec::new(),
                duration_ms: millis(start.elapsed()),
            });
        }
        Err(BuildError::Io(e)) => return Err(e.into()),
        Err(e) => return Err(PostopError::Build(e)),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build().map_err(std::io::Error::other)?;
    let mut tests: Vec<TestOutcome> = pool.install(|| {
        suite.tests.par_iter().map(|t| run_test(&binary, suite, t, opts.timeout)).collect::<Result<_, _>>()
    })?;
    tests.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(SuiteResult {
        kind: suite.kind,
        passed: tests.iter().filter(|t| t.passed).count(),
        total,
        build_failed: false,
        skipped: false,
        tests,
        duration_ms: millis(start.elapsed()),
    })
}

fn pick<'a>(suites: &'a [TestSuite], kind: SuiteKind) -> Result<&'a TestSuite, PostopError> {
    let mut found = suites.iter().filter(|s| s.kind == kind);
    let first = found.next().ok_or(PostopError::MissingSuite(kind.as_str()))?;
    if found.next().is_some() {
        return Err(PostopError::DuplicateSuite(kind.as_str()));
    }
    Ok(first)
}

/// Runs regression, regression++ and acceptance in that order. A failing
/// regression suite stops validation; later failures do not.
pub fn validate(project: &ProjectModel, suites: &[TestSuite], opts: &RunOptions) -> Result<ValidationReport, PostopError> {
    let start = Instant::now();
    let order = [SuiteKind::Regression, SuiteKind::RegressionPlus, SuiteKind::Acceptance];
    let picked: Vec<&TestSuite> = order.iter().map(|k| pick(suites, *k)).collect::<Result<_, _>>()?;
    let mut results = Vec::new();
    let mut stop = false;
    for suite in picked {
        if stop {
            results.push(SuiteResult {
                kind: suite.kind,
                passed: 0,
                total: suite.tests.len(),
                build_failed: false,
                skipped: true,
                tests: Vec::new(),
                duration_ms: 0,
            });
            continue;
        }
        let r = run_suite(project, suite, opts)?;
        stop = suite.kind == SuiteKind::Regression && !r.ok();
        results.push(r);
    }
    let verdict = if results.iter().all(SuiteResult::ok) { Verdict::Ok } else { Verdict::Broken };
    Ok(ValidationReport { suites: results, verdict, duration_ms: millis(start.elapsed()) })
}

/// The host regression suite extended with the new suites' tests, first
/// occurrence of each name kept. File references of foreign tests become
/// absolute; `TestSuite::save` makes the result self-contained.
pub fn promote_tests(
    host_regression: &TestSuite,
    new_suites: &[&TestSuite],
    report: &ValidationReport,
) -> Result<TestSuite, PostopError> {
    if report.verdict != Verdict::Ok {
        return Err(PostopError::PromotionBeforeValidation);
    }
    let mut out = host_regression.clone();
    out.kind = SuiteKind::Regression;
    let mut names: BTreeSet<String> = out.tests.iter().map(|t| t.name.clone()).collect();
    for suite in new_suites {
        for t in &suite.tests {
            if !names.insert(t.name.clone()) {
                log::warn!("test {} already in the regression suite; keeping the first copy", t.name);
                continue;
            }
            let mut t = t.clone();
            let abs = |f: &String| suite.dir.join(f).to_string_lossy().into_owned();
            t.stdin = t.stdin.as_ref().map(abs);
            t.expected_stdout = t.expected_stdout.as_ref().map(abs);
            out.tests.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{project, suite};

    const GOOD: &str = "#include <stdio.h>\n\nint main(int argc, char **argv)\n{\n    printf(\"%d\\n\", argc);\n    return argc > 3;\n}\n";

    fn suites(dir: &Path, acceptance_out: &str) -> Vec<TestSuite> {
        let regression: Vec<(String, Vec<&str>, String)> =
            (0..22).map(|i| (format!("r{i:02}"), vec!["a"; i % 3], format!("{}\n", i % 3 + 1))).collect();
        let reg: Vec<(&str, &[&str], &str)> = regression.iter().map(|(n, a, o)| (n.as_str(), a.as_slice(), o.as_str())).collect();
        vec![
            suite(&dir.join("acc"), SuiteKind::Acceptance, &[("acc1", &["x", "y"], acceptance_out)]),
            suite(&dir.join("reg"), SuiteKind::Regression, &reg),
            suite(&dir.join("plus"), SuiteKind::RegressionPlus, &[("plus1", &[], "1\n"), ("r00", &[], "1\n")]),
        ]
    }

    #[test]
    fn all_suites_pass() {
        let dir = tempfile::tempdir().unwrap();
        let s = suites(dir.path(), "3\n");
        let report = validate(&project(&[("main.c", GOOD)]), &s, &RunOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Ok);
        let reg = report.suite(SuiteKind::Regression).unwrap();
        assert_eq!((reg.passed, reg.total), (22, 22));
        let kinds: Vec<SuiteKind> = report.suites.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, [SuiteKind::Regression, SuiteKind::RegressionPlus, SuiteKind::Acceptance]);

        let promoted = promote_tests(&s[1], &[&s[2], &s[0]], &report).unwrap();
        // r00 is already present
        assert_eq!(promoted.tests.len(), 24);
        let saved = promoted.save(&dir.path().join("promoted")).unwrap();
        let reloaded = TestSuite::load(&dir.path().join("promoted")).unwrap();
        assert_eq!(reloaded.tests, saved.tests);
    }

    #[test]
    fn acceptance_failure_is_broken_but_reported() {
        let dir = tempfile::tempdir().unwrap();
        let s = suites(dir.path(), "4\n");
        let report = validate(&project(&[("main.c", GOOD)]), &s, &RunOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Broken);
        let plus = report.suite(SuiteKind::RegressionPlus).unwrap();
        assert_eq!((plus.passed, plus.total, plus.skipped), (2, 2, false));
        let acc = report.suite(SuiteKind::Acceptance).unwrap();
        assert_eq!((acc.passed, acc.total), (0, 1));
        assert!(matches!(promote_tests(&s[1], &[&s[2]], &report), Err(PostopError::PromotionBeforeValidation)));
    }

    #[test]
    fn broken_build_scores_zero() {
        let dir = tempfile::tempdir().unwrap();
        let s = suites(dir.path(), "3\n");
        let broken = project(&[("main.c", "int missing(void);\n\nint main(void)\n{\n    return missing();\n}\n")]);
        let r = run_suite(&broken, &s[1], &RunOptions::default()).unwrap();
        assert_eq!((r.passed, r.total, r.build_failed), (0, 22, true));
        let report = validate(&broken, &s, &RunOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Broken);
        assert!(report.suite(SuiteKind::Acceptance).unwrap().skipped);
    }

    #[test]
    fn one_failing_expectation_and_missing_suites() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = suites(dir.path(), "3\n");
        s[1].tests[0].expected_exit = 9;
        let r = run_suite(&project(&[("main.c", GOOD)]), &s[1], &RunOptions { jobs: 4, ..Default::default() }).unwrap();
        assert_eq!((r.passed, r.total), (21, 22));
        let names: Vec<&str> = r.tests.iter().map(|t| t.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        s.remove(0);
        assert!(matches!(validate(&project(&[("main.c", GOOD)]), &s, &RunOptions::default()), Err(PostopError::MissingSuite("acceptance"))));
    }
}
