use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_transplantc");

fn fx() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/wordcount")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn transplant(ws: &Path, suites: Option<&Path>, extra: &[&str]) -> Output {
    let f = fx();
    let mut cmd = Command::new(BIN);
    cmd.args(["transplant", "--core_function_target", "report_words"])
        .arg("--donor_folder")
        .arg(f.join("donor"))
        .arg("--host_project")
        .arg(f.join("notes"))
        .arg("--host_target")
        .arg(f.join("notes/main.c"))
        .arg("--seeds_file")
        .arg(f.join("seeds.txt"))
        .arg("--features_file")
        .arg(f.join("features.txt"))
        .arg("--workspace")
        .arg(ws);
    if let Some(dir) = suites {
        cmd.arg("--suites").arg(dir);
    }
    cmd.args(extra).output().expect("binary runs")
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.path().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            fs::copy(e.path(), target).unwrap();
        }
    }
}

#[test]
fn transplant_succeeds_and_logs_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("w");
    let out = transplant(&ws, None, &["--emit-report"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let log = json(&ws.join("run-log.json"));
    assert_eq!(log["verdict"], "ok");
    assert_eq!(log["seeds"], serde_json::json!([7]));
    for stage in ["extraction", "adaptation", "merging", "validation"] {
        assert!(log["stages"][stage].is_u64(), "{stage} missing from {log}");
    }
    let main = fs::read_to_string(ws.join("postop/main.c")).unwrap();
    assert!(main.contains("report_words(note);"));
    assert!(!main.contains("TRACE"));
    assert!(ws.join("clone-report-report_words.json").is_file());

    // a second run into the same workspace needs --force
    let again = transplant(&ws, None, &[]);
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"));
    let forced = transplant(&ws, None, &["--force"]);
    assert_eq!(forced.status.code(), Some(0), "{}", stderr(&forced));
}

#[test]
fn broken_validation_exits_one_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let suites = tmp.path().join("tests");
    copy_dir(&fx().join("tests"), &suites);
    fs::write(suites.join("acceptance/data/acceptance_00.out"), "note: one two three\nlength: 13\nwords: 4\n").unwrap();
    let ws = tmp.path().join("w");
    let out = transplant(&ws, Some(&suites), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let report = json(&ws.join("validation-report.json"));
    assert_eq!(report["verdict"], "broken");
    let acceptance = report["suites"].as_array().unwrap().iter().find(|s| s["kind"] == "acceptance").unwrap();
    assert_eq!((acceptance["passed"].as_u64(), acceptance["total"].as_u64()), (Some(2), Some(3)));
    assert_eq!(json(&ws.join("run-log.json"))["verdict"], "broken");
    // nothing promoted
    assert!(!ws.join("platform/product-bases/notes/tests").exists());
}

#[test]
fn missing_seeds_file_is_a_usage_error() {
    let out = run(&["adapt", "--workspace", "/nonexistent", "--feature", "f", "--product-base", "p"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--seeds_file"), "{}", stderr(&out));
}

#[test]
fn bad_inputs_are_rejected_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("w");
    let f = fx();
    let bad_seeds = tmp.path().join("seeds.txt");
    fs::write(&bad_seeds, "12\nabc\n").unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["--donor_folder".into(), s(&tmp.path().join("nope")).into()], "--donor_folder"),
        (vec!["--seeds_file".into(), s(&bad_seeds).into()], "--seeds_file"),
        (vec!["--host_target".into(), s(&f.join("donor/main.c")).into()], "--host_target"),
        (vec!["--gp-pop".into(), "1".into()], "population"),
    ];
    for (overrides, needle) in cases {
        let mut args: Vec<String> = vec![
            "transplant".into(),
            "--donor_folder".into(),
            s(&f.join("donor")).into(),
            "--host_project".into(),
            s(&f.join("notes")).into(),
            "--core_function_target".into(),
            "report_words".into(),
            "--host_target".into(),
            s(&f.join("notes/main.c")).into(),
            "--seeds_file".into(),
            s(&f.join("seeds.txt")).into(),
            "--workspace".into(),
            s(&ws).into(),
        ];
        for pair in overrides.chunks(2) {
            if let Some(i) = args.iter().position(|a| *a == pair[0]) {
                args[i + 1] = pair[1].clone();
            } else {
                args.extend(pair.iter().cloned());
            }
        }
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run(&refs);
        assert_eq!(out.status.code(), Some(2), "{needle}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{needle}: {}", stderr(&out));
        assert!(!ws.exists(), "{needle}: workspace was created");
    }
}

#[test]
fn unknown_marker_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("w");
    let out = transplant(&ws, None, &["--feature", "other"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("/*@transplant:other*/"), "{}", stderr(&out));
}

#[test]
fn stages_run_one_at_a_time() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("w");
    let w = s(&ws).to_string();
    let f = fx();
    let ok = |args: &[&str]| {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    ok(&["init", "--workspace", &w]);
    ok(&["reduce-host", "--workspace", &w, "--host_project", s(&f.join("notes")), "--features_file", s(&f.join("features.txt"))]);
    let sdg = tmp.path().join("donor.dot");
    ok(&[
        "extract",
        "--workspace",
        &w,
        "--donor_folder",
        s(&f.join("donor")),
        "--core_function_target",
        "report_words",
        "--donor_target",
        "main.c",
        "--icebox",
        s(&f.join("tests/icebox")),
        "--emit-sdg",
        s(&sdg),
    ]);
    assert!(fs::read_to_string(&sdg).unwrap().starts_with("digraph"));
    let dup = run(&["extract", "--workspace", &w, "--donor_folder", s(&f.join("donor")), "--core_function_target", "report_words"]);
    assert_eq!(dup.status.code(), Some(2));

    let seeds = s(&f.join("seeds.txt")).to_string();
    ok(&["adapt", "--workspace", &w, "--feature", "report_words", "--product-base", "notes", "--seeds_file", &seeds, "--gp-pop", "10"]);
    assert!(ws.join("organs/report_words.json").is_file());
    ok(&["implant", "--workspace", &w, "--feature", "report_words", "--product-base", "notes", "--emit-report"]);
    let report = json(&ws.join("clone-report-report_words.json"));
    assert!(report["decisions"].as_array().unwrap().iter().any(|d| d["verdict"] == "graft"));

    let suites = s(&f.join("tests")).to_string();
    let printed = ok(&["validate", "--workspace", &w, "--product-base", "notes", "--suites", &suites, "--jobs", "2"]);
    assert_eq!(printed.trim(), "regression 22/22, regression++ 4/4, acceptance 3/3");
    // promoted tests now form the regression suite
    let printed = ok(&["validate", "--workspace", &w, "--product-base", "notes", "--suites", &suites]);
    assert_eq!(printed.trim(), "regression 29/29, regression++ 4/4, acceptance 3/3");

    let ls = ok(&["platform", "ls", "--workspace", &w]);
    for id in ["notes", "report_words"] {
        assert!(ls.contains(id), "{ls}");
    }
    let model = json(&ws.join("platform/feature-model.json"));
    assert_eq!(model["annotations"]["report_words"]["entry_point"], "report_words");
}

#[test]
fn usage_without_subcommand() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
}
