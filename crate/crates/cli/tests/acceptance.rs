//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the summary is always printed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use transplant_core::adaptation::{evolve, materialize, synthesize_wrapper, AdaptError, GpConfig, GpIndividual, HostContext, Organ};
use transplant_core::depgraph::build_sdg;
use transplant_core::extractor::{extract_over_organ, OverOrgan};
use transplant_core::frontend::{project_units, ProjectModel, SourceUnit};
use transplant_core::implantation::{implant, PostoperativeProject};
use transplant_core::platform::{Constraint, Feature, FeatureKind, FeatureModel, Violation};
use transplant_core::postop::{run_suite, RunOptions};
use transplant_core::reconfigurator::{
    load_prepared, remove_features, remove_features_units, strip_dead_directives, FeatureDirectiveList, RemovalMode,
};
use transplant_core::sandbox::BuildCommand;
use transplant_core::suite::TestSuite;

const BIN: &str = env!("CARGO_BIN_EXE_transplantc");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn wordcount() -> PathBuf {
    fixtures().join("wordcount")
}

fn project(files: &[(String, String)]) -> ProjectModel {
    let units = files.iter().map(|(p, t)| SourceUnit::new(p.clone(), t)).collect();
    ProjectModel::from_units(Path::new("."), units).expect("fixture parses")
}

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. Slicing against a reachability oracle on generated projects.

struct SliceFixture {
    files: Vec<(String, String)>,
    functions: Vec<String>,
}

fn slicing_fixture(seed: u64) -> SliceFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nfun = rng.random_range(3..=11usize);
    let nfile = rng.random_range(1..=3usize);
    let nconst = rng.random_range(0..=3usize);
    let ntype = rng.random_range(0..=2usize);
    let nglob = rng.random_range(0..=3usize);

    let mut header = String::new();
    for i in 0..nconst {
        if i > 0 && rng.random_bool(0.4) {
            header.push_str(&format!("#define C{i} (C{} + {i})\n", rng.random_range(0..i)));
        } else {
            header.push_str(&format!("#define C{i} {}\n", rng.random_range(1..50)));
        }
    }
    for i in 0..ntype {
        if i > 0 && rng.random_bool(0.5) {
            header.push_str(&format!("typedef T{} T{i};\n", rng.random_range(0..i)));
        } else {
            header.push_str(&format!("typedef int T{i};\n"));
        }
    }
    let mut gtypes = Vec::new();
    for i in 0..nglob {
        let ty = if ntype > 0 && rng.random_bool(0.5) { format!("T{}", rng.random_range(0..ntype)) } else { "int".into() };
        header.push_str(&format!("extern {ty} G{i};\n"));
        gtypes.push(ty);
    }
    for k in 0..nfun {
        header.push_str(&format!("int f{k}(int x);\n"));
    }

    let mut calls: Vec<BTreeSet<usize>> = (0..nfun).map(|_| (0..rng.random_range(0..=2)).map(|_| rng.random_range(0..nfun)).collect()).collect();
    // at least one pair of mutually recursive functions
    let a = rng.random_range(0..nfun);
    let b = (a + rng.random_range(1..nfun)) % nfun;
    calls[a].insert(b);
    calls[b].insert(a);

    let mut files: Vec<String> = (0..nfile).map(|_| "#include \"defs.h\"\n\n".to_string()).collect();
    for (i, ty) in gtypes.iter().enumerate() {
        let init = if nconst > 0 && rng.random_bool(0.5) { format!("C{}", rng.random_range(0..nconst)) } else { i.to_string() };
        files[0].push_str(&format!("{ty} G{i} = {init};\n"));
    }
    files[0].push('\n');
    for k in 0..nfun {
        let mut body = String::from("    int acc = x;\n");
        if ntype > 0 && rng.random_bool(0.4) {
            let j = rng.random_range(0..ntype);
            body.push_str(&format!("    T{j} t{j} = x;\n    acc += t{j};\n"));
        }
        if nconst > 0 && rng.random_bool(0.4) {
            body.push_str(&format!("    acc += C{};\n", rng.random_range(0..nconst)));
        }
        if nglob > 0 && rng.random_bool(0.4) {
            body.push_str(&format!("    acc += G{};\n", rng.random_range(0..nglob)));
        }
        for c in &calls[k] {
            body.push_str(&format!("    if (x > 0) {{\n        acc += f{c}(x - 1);\n    }}\n"));
        }
        files[k % nfile].push_str(&format!("int f{k}(int x)\n{{\n{body}    return acc;\n}}\n\n"));
    }
    let entry = rng.random_range(0..nfun);
    files[0].push_str(&format!("int main(void)\n{{\n    return f{entry}(2);\n}}\n"));

    let mut out = vec![("defs.h".to_string(), header)];
    out.extend(files.into_iter().enumerate().map(|(i, t)| (format!("m{i}.c"), t)));
    let mut functions: Vec<String> = (0..nfun).map(|k| format!("f{k}")).collect();
    functions.push("main".into());
    SliceFixture { files: out, functions }
}

fn identifiers(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_alphabetic() || bytes[i] == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(&text[start..i]);
        } else if bytes[i].is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Top-level items of a file with the name each one defines.
fn top_level_items(text: &str) -> Vec<(String, String)> {
    let mut items = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let flush = |cur: &mut String, items: &mut Vec<String>| {
        if !cur.trim().is_empty() {
            items.push(std::mem::take(cur));
        }
        cur.clear();
    };
    let mut raw = Vec::new();
    for line in text.lines() {
        if depth == 0 && line.trim().is_empty() {
            flush(&mut cur, &mut raw);
            continue;
        }
        if depth == 0 && line.trim_start().starts_with('#') {
            flush(&mut cur, &mut raw);
            raw.push(line.to_string());
            continue;
        }
        cur.push_str(line);
        cur.push('\n');
        depth += line.matches('{').count() as i32 - line.matches('}').count() as i32;
        if depth == 0 && (line.trim_end().ends_with(';') || line.trim() == "}") {
            flush(&mut cur, &mut raw);
        }
    }
    flush(&mut cur, &mut raw);
    for item in raw {
        let t = item.trim_start();
        let name = if let Some(rest) = t.strip_prefix("#define") {
            identifiers(rest).first().map(|s| s.to_string())
        } else if t.starts_with('#') {
            None
        } else {
            let cut = t.find(|c| c == '=' || c == '(' || c == ';' || c == '{').unwrap_or(t.len());
            identifiers(&t[..cut]).last().map(|s| s.to_string())
        };
        if let Some(name) = name {
            items.push((name, item));
        }
    }
    items
}

/// Names reachable from `entry` by identifier references between
/// top-level items.
fn oracle_slice(files: &[(String, String)], entry: &str) -> BTreeSet<String> {
    let items: Vec<(String, String)> = files.iter().flat_map(|(_, t)| top_level_items(t)).collect();
    let names: BTreeSet<&str> = items.iter().map(|(n, _)| n.as_str()).collect();
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (name, text) in &items {
        let refs = edges.entry(name.as_str()).or_default();
        for id in identifiers(text) {
            if id != name && names.contains(id) {
                refs.insert(id);
            }
        }
    }
    let mut seen = BTreeSet::from([entry.to_string()]);
    let mut stack = vec![entry];
    while let Some(n) = stack.pop() {
        for &m in edges.get(n).into_iter().flatten() {
            if seen.insert(m.to_string()) {
                stack.push(m);
            }
        }
    }
    seen
}

fn criterion_slicing() -> Outcome {
    let fixtures: Vec<SliceFixture> = (0..24).map(slicing_fixture).collect();
    let mut slices = 0;
    let mut with_data = 0;
    let mut elapsed = Duration::ZERO;
    for (i, f) in fixtures.iter().enumerate() {
        let loc: usize = f.files.iter().map(|(_, t)| t.lines().count()).sum();
        check(loc <= 300 && f.functions.len() <= 12, || format!("fixture {i} too large: {loc} lines"))?;
        let p = project(&f.files);
        let start = Instant::now();
        let sdg = build_sdg(&p).map_err(|e| format!("fixture {i}: {e}"))?;
        let mut got = Vec::new();
        for entry in &f.functions {
            got.push(sdg.names(&sdg.forward_slice(entry).map_err(|e| e.to_string())?));
        }
        elapsed += start.elapsed();
        for (entry, got) in f.functions.iter().zip(got) {
            let want = oracle_slice(&f.files, entry);
            check(got == want, || format!("fixture {i}, entry {entry}: slice {got:?}, oracle {want:?}"))?;
            slices += 1;
            if got.iter().any(|n| n.starts_with(['G', 'T', 'C'])) {
                with_data += 1;
            }
        }
    }
    check(elapsed < Duration::from_secs(5), || format!("slicing took {elapsed:?}"))?;
    check(with_data > slices / 4, || format!("only {with_data} slices reach globals, types or constants"))?;
    Ok(format!(
        "{} fixtures, {slices} slices equal the oracle ({with_data} reach data elements), {:.2}s",
        fixtures.len(),
        elapsed.as_secs_f64()
    ))
}

// 2. Reconfigurator against the system preprocessor.

fn conditional_fixture(seed: u64) -> String {
    fn block(rng: &mut ChaCha8Rng, depth: usize, n: &mut usize, out: &mut String) {
        for _ in 0..rng.random_range(1..=4) {
            match rng.random_range(0..10) {
                0..=4 if depth < 3 => {
                    let f = rng.random_range(0..5);
                    let word = if rng.random_bool(0.5) { "ifdef" } else { "ifndef" };
                    out.push_str(&format!("#{word} F{f}\n"));
                    block(rng, depth + 1, n, out);
                    if rng.random_bool(0.5) {
                        out.push_str("#else\n");
                        block(rng, depth + 1, n, out);
                    }
                    out.push_str("#endif\n");
                }
                5 => {
                    out.push_str(&format!("#define LIMIT_{n} {n}\n"));
                    *n += 1;
                }
                _ => {
                    out.push_str(&format!("int v{n};\n"));
                    *n += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let mut out = String::new();
    let mut n = 0;
    while out.matches("#endif").count() < 3 {
        block(&mut rng, 0, &mut n, &mut out);
    }
    out
}

fn code_lines(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect()
}

fn cpp(text: &str, defined: &BTreeSet<String>) -> Result<Vec<String>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("f.c");
    fs::write(&path, text).map_err(|e| e.to_string())?;
    let mut cmd = Command::new("cpp");
    cmd.args(["-P", "-undef", "-nostdinc"]);
    for d in defined {
        cmd.arg(format!("-D{d}"));
    }
    let out = cmd.arg(&path).output().map_err(|e| format!("cpp: {e}"))?;
    check(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    Ok(code_lines(&String::from_utf8_lossy(&out.stdout)))
}

fn criterion_reconfigurator() -> Outcome {
    let all: BTreeSet<String> = (0..5).map(|i| format!("F{i}")).collect();
    let mut comparisons = 0;
    let n = 12;
    for seed in 0..n {
        let text = conditional_fixture(seed);
        let p = project(&[("f.c".into(), text.clone())]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut configs: Vec<BTreeSet<String>> = vec![BTreeSet::new(), all.clone()];
        for _ in 0..3 {
            configs.push(all.iter().filter(|_| rng.random_bool(0.5)).cloned().collect());
        }
        for enabled in &configs {
            let ours = strip_dead_directives(&p, enabled).map_err(|e| e.to_string())?;
            let got = code_lines(ours.text("f.c").unwrap());
            let want = cpp(&text, enabled)?;
            check(got == want, || format!("fixture {seed}, enabled {enabled:?}:\n{text}\nours {got:?}\ncpp  {want:?}"))?;
            comparisons += 1;
        }
        // removing every feature is the preprocessor with nothing defined,
        // keeping every feature's code is the preprocessor with all defined
        for (mode, defined) in [(RemovalMode::DeleteGuardedCode, BTreeSet::new()), (RemovalMode::KeepCodeStripGuards, all.clone())] {
            let list = FeatureDirectiveList::new(all.iter().cloned(), mode).unwrap();
            let ours = remove_features(&p, &list).map_err(|e| e.to_string())?.project;
            let got = code_lines(ours.text("f.c").unwrap());
            let want = cpp(&text, &defined)?;
            check(got == want, || format!("fixture {seed}, removal {mode:?}: ours {got:?}, cpp {want:?}"))?;
            comparisons += 1;
        }
    }
    Ok(format!("{n} fixtures, {comparisons} configurations match cpp"))
}

// 3, 6, 7. End-to-end runs through the binary.

fn transplant_run(ws: &Path, seed: u64, extra: &[&str]) -> (i32, Duration) {
    let fx = wordcount();
    let seeds = ws.with_extension("seeds");
    fs::write(&seeds, format!("{seed}\n")).unwrap();
    let start = Instant::now();
    let status = Command::new(BIN)
        .args(["transplant", "--donor_folder"])
        .arg(fx.join("donor"))
        .arg("--host_project")
        .arg(fx.join("notes"))
        .args(["--core_function_target", "report_words", "--host_target"])
        .arg(fx.join("notes/main.c"))
        .arg("--features_file")
        .arg(fx.join("features.txt"))
        .arg("--seeds_file")
        .arg(&seeds)
        .arg("--workspace")
        .arg(ws)
        .args(extra)
        .output()
        .expect("binary runs");
    (status.status.code().unwrap_or(-1), start.elapsed())
}

fn suite_counts(report: &Value) -> BTreeMap<String, (u64, u64)> {
    report["suites"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|s| (s["kind"].as_str().unwrap_or("").to_string(), (s["passed"].as_u64().unwrap_or(0), s["total"].as_u64().unwrap_or(0))))
        .collect()
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn criterion_end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut ok = 0;
    let mut slowest = Duration::ZERO;
    let mut failures = Vec::new();
    for seed in 1..=20u64 {
        let ws = tmp.path().join(format!("w{seed}"));
        let (code, took) = transplant_run(&ws, seed, &[]);
        slowest = slowest.max(took);
        let counts = read_json(&ws.join("validation-report.json")).map(|r| suite_counts(&r)).unwrap_or_default();
        let expected = BTreeMap::from([
            ("regression".to_string(), (22, 22)),
            ("regression++".to_string(), (4, 4)),
            ("acceptance".to_string(), (3, 3)),
        ]);
        if code == 0 && counts == expected && took < Duration::from_secs(120) {
            ok += 1;
        } else {
            failures.push(format!("seed {seed}: exit {code}, {counts:?}"));
        }
    }
    check(ok >= 19, || format!("{ok}/20 runs ok: {failures:?}"))?;
    Ok(format!("{ok}/20 seeded runs pass 22/22, 4/4, 3/3; slowest {:.1}s", slowest.as_secs_f64()))
}

fn symbols(binary: &Path) -> BTreeSet<String> {
    let out = Command::new("nm").arg(binary).output().expect("nm runs");
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts.as_slice() {
                [_, kind, name] if "TtDdBb".contains(*kind) => Some(name.to_string()),
                _ => None,
            }
        })
        .collect()
}

fn compile(dir: &Path, out: &Path, defines: &[&str]) -> Result<(), String> {
    let mut cmd = Command::new("cc");
    cmd.arg("-o").arg(out);
    for d in defines {
        cmd.arg(format!("-D{d}"));
    }
    let mut sources: Vec<PathBuf> = walk(dir).into_iter().filter(|p| p.extension().is_some_and(|e| e == "c")).collect();
    sources.sort();
    let o = cmd.args(&sources).output().map_err(|e| e.to_string())?;
    check(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn criterion_flagged() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("w");
    let (code, _) = transplant_run(&ws, 3, &["--flag", "WC"]);
    check(code == 0, || format!("flagged transplant exited {code}"))?;
    let organ = ["report_words", "count_words", "is_word_char"];
    let off = tmp.path().join("off");
    let on = tmp.path().join("on");
    compile(&ws.join("postop"), &off, &[])?;
    compile(&ws.join("postop"), &on, &["FEATURE_WC"])?;
    let off_syms = symbols(&off);
    let on_syms = symbols(&on);
    let leaked: Vec<&&str> = organ.iter().filter(|s| off_syms.contains(**s)).collect();
    check(leaked.is_empty(), || format!("organ symbols without the flag: {leaked:?}"))?;
    check(organ.iter().all(|s| on_syms.contains(*s)), || format!("organ symbols missing with the flag: {on_syms:?}"))?;
    let run = |bin: &Path| String::from_utf8_lossy(&Command::new(bin).args(["--stats", "a b"]).output().unwrap().stdout).into_owned();
    check(run(&off) == "note: a b\nlength: 3\n", || format!("unflagged output {:?}", run(&off)))?;
    check(run(&on) == "note: a b\nlength: 3\nwords: 2\n", || format!("flagged output {:?}", run(&on)))?;
    Ok("compiles with and without -DFEATURE_WC; no organ symbol without it".into())
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("duration_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walk(dir).into_iter().map(|p| (p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap())).collect()
}

fn criterion_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for ws in [&a, &b] {
        let (code, _) = transplant_run(ws, 5, &[]);
        check(code == 0, || format!("run exited {code}"))?;
    }
    let (ta, tb) = (tree(&a.join("postop")), tree(&b.join("postop")));
    check(!ta.is_empty() && ta == tb, || "postoperative trees differ".into())?;
    let mut ra = read_json(&a.join("validation-report.json"))?;
    let mut rb = read_json(&b.join("validation-report.json"))?;
    strip_timing(&mut ra);
    strip_timing(&mut rb);
    check(ra == rb, || format!("reports differ:\n{ra}\n{rb}"))?;
    Ok(format!("{} files byte-identical; reports equal without timings", ta.len()))
}

// 4. Dead-statement removal by the genetic search.

struct Scenario {
    over: OverOrgan,
    host: PostoperativeProject,
    ctx: HostContext,
    icebox: TestSuite,
}

fn wordcount_scenario() -> Scenario {
    let fx = wordcount();
    let donor = load_prepared(&fx.join("donor"), &BTreeSet::new()).unwrap();
    let sdg = build_sdg(&donor).unwrap();
    let over = extract_over_organ(&donor, &sdg, "report_words", None, "report_words", "donor").unwrap();
    let units = project_units(&fx.join("notes")).unwrap();
    let list = FeatureDirectiveList::new(["TRACE"], RemovalMode::DeleteGuardedCode).unwrap();
    let (units, _) = remove_features_units(&units, &list).unwrap();
    let host = ProjectModel::from_units(&fx.join("notes"), units).unwrap();
    let ctx = HostContext::new(&host, "notes", "report_words", BuildCommand::default()).unwrap();
    let icebox = TestSuite::load(&fx.join("tests/icebox")).unwrap();
    Scenario { over, host: PostoperativeProject::new(host), ctx, icebox }
}

fn icebox_passes(s: &Scenario, organ: &Organ) -> Result<bool, String> {
    let post = implant(organ, &s.host, &s.ctx, None, None).map_err(|e| e.to_string())?;
    let opts = RunOptions { defines: post.defines(), ..Default::default() };
    let r = run_suite(&post.project, &s.icebox, &opts).map_err(|e| e.to_string())?;
    Ok(r.ok())
}

fn criterion_reduction() -> Outcome {
    let base = wordcount_scenario();
    let mut lines = Vec::new();
    for k in [1usize, 3, 5] {
        let dead: Vec<String> = (0..k).map(|i| format!("int __dead{i} = {i};")).collect();
        let refs: Vec<&str> = dead.iter().map(String::as_str).collect();
        let mut over = base.over.clone();
        over.inject_statements(&refs).map_err(|e| e.to_string())?;
        let s = Scenario { over, ..wordcount_scenario() };
        let (mut clean, mut found) = (0, 0);
        for seed in 1..=20u64 {
            let config = GpConfig { seeds: vec![seed], ..GpConfig::default() };
            match evolve(&s.over, &s.host, &s.ctx, &s.icebox, &config) {
                Ok(organ) => {
                    found += 1;
                    check(icebox_passes(&s, &organ)?, || format!("k={k} seed {seed}: returned organ fails the ice-box suite"))?;
                    if organ.wrapper.iter().all(|l| !l.contains("__dead")) {
                        clean += 1;
                    }
                }
                Err(AdaptError::NoViableOrganFound { .. }) => {}
                Err(e) => return Err(format!("k={k} seed {seed}: {e}")),
            }
        }
        check(clean >= 18, || format!("k={k}: dead statements removed in {clean}/20 runs"))?;
        lines.push(format!("k={k} {clean}/20 clean, {found}/{found} pass"));
    }
    Ok(lines.join("; "))
}

// 5. Organs sharing code are implanted once.

fn collision_donor(tag: &str, m: usize) -> Vec<(String, String)> {
    let util: String = (0..4).map(|k| format!("int h{k}(int x)\n{{\n    return x + {};\n}}\n\n", k + 1)).collect();
    let protos: String = (0..m).map(|k| format!("int h{k}(int x);\n")).collect();
    let calls: String = (0..m).map(|k| format!("    r = h{k}(r);\n")).collect();
    let main = format!(
        "#include <stdio.h>\n\n{protos}\nint feat_{tag}(int n)\n{{\n    int r = n;\n{calls}    printf(\"{tag} %d\\n\", r);\n    return r;\n}}\n\nint main(void)\n{{\n    feat_{tag}(1);\n    return 0;\n}}\n"
    );
    vec![("util.c".into(), util), ("main.c".into(), main)]
}

fn full_organ(files: &[(String, String)], tag: &str, host: &ProjectModel) -> Result<(Organ, HostContext), String> {
    let donor = project(files);
    let sdg = build_sdg(&donor).map_err(|e| e.to_string())?;
    let entry = format!("feat_{tag}");
    let over = extract_over_organ(&donor, &sdg, &entry, None, tag, tag).map_err(|e| e.to_string())?;
    let ctx = HostContext::new(host, "host", tag, BuildCommand::default()).map_err(|e| e.to_string())?;
    let wrapper = synthesize_wrapper(&over, host, &ctx).map_err(|e| e.to_string())?;
    let organ = materialize(&over, &wrapper, &GpIndividual::full(&over, &wrapper, 0)).map_err(|e| format!("{e:?}"))?;
    Ok((organ, ctx))
}

fn criterion_collision() -> Outcome {
    let host = project(&[(
        "main.c".into(),
        "#include <stdio.h>\n\nint main(void)\n{\n    /*@transplant:a*/\n    /*@transplant:b*/\n    return 0;\n}\n".into(),
    )]);
    let tmp = tempfile::tempdir().unwrap();
    let build = BuildCommand::default();
    let mut checked = 0;
    for m in [1usize, 2, 4] {
        let a = full_organ(&collision_donor("a", m), "a", &host)?;
        let b = full_organ(&collision_donor("b", m), "b", &host)?;
        for (order, pair) in [("a,b", [&a, &b]), ("b,a", [&b, &a])] {
            let mut post = PostoperativeProject::new(host.clone());
            for (organ, ctx) in pair {
                post = implant(organ, &post, ctx, None, Some(&build)).map_err(|e| format!("m={m} {order}: {e}"))?;
            }
            let dir = tmp.path().join(format!("m{m}-{}", order.replace(',', "")));
            post.write_to(&dir.join("src")).unwrap();
            let bin = dir.join("product");
            compile(&dir.join("src"), &bin, &post.defines().iter().map(String::as_str).collect::<Vec<_>>())?;
            let nm = Command::new("nm").arg(&bin).output().unwrap();
            let nm = String::from_utf8_lossy(&nm.stdout).into_owned();
            for k in 0..m {
                let name = format!("h{k}");
                let defs = post.project.function_definitions(&name).len();
                let syms = nm.lines().filter(|l| l.split_whitespace().last() == Some(name.as_str()) && l.contains(" T ")).count();
                check(defs == 1 && syms == 1, || format!("m={m} {order}: {name} has {defs} definitions, {syms} symbols"))?;
                checked += 1;
            }
            let out = Command::new(&bin).output().unwrap();
            let want = format!("a {}\nb {}\n", 1 + m * (m + 1) / 2, 1 + m * (m + 1) / 2);
            check(out.stdout == want.as_bytes(), || format!("m={m} {order}: output {:?}", String::from_utf8_lossy(&out.stdout)))?;
        }
    }
    Ok(format!("m in {{1,2,4}}, both orders: {checked} shared functions defined once in source and symbol table"))
}

// 8. Multi-file organ keeps donor file placement.

fn criterion_placement() -> Outcome {
    let donor = fixtures().join("fourfile/donor");
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("w");
    let init = Command::new(BIN).args(["init", "--workspace"]).arg(&ws).status().unwrap();
    check(init.success(), || "init failed".into())?;
    let out = Command::new(BIN)
        .args(["extract", "--core_function_target", "render", "--workspace"])
        .arg(&ws)
        .arg("--donor_folder")
        .arg(&donor)
        .output()
        .unwrap();
    check(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let dir = ws.join("platform/over-organs/render");
    let organ = read_json(&dir.join("over-organ.json"))?;
    let file_map: Vec<String> = organ["file_map"].as_array().into_iter().flatten().filter_map(|v| v.as_str().map(String::from)).collect();
    let expected = ["include/buf.h", "src/buf.c", "include/render.h", "src/render.c"];
    let as_set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>();
    check(file_map.len() == 4 && file_map.iter().cloned().collect::<BTreeSet<_>>() == as_set(&expected), || format!("file map {file_map:?}"))?;
    let emitted: BTreeSet<String> = tree(&dir)
        .into_keys()
        .map(|p| p.to_string_lossy().into_owned())
        .filter(|p| p != "manifest.json" && p != "over-organ.json")
        .collect();
    check(emitted == as_set(&expected), || format!("emitted files {emitted:?}"))?;
    for rel in &expected {
        let got = fs::read_to_string(dir.join(rel)).unwrap();
        let src = fs::read_to_string(donor.join(rel)).unwrap();
        // every emitted line comes from the same donor file, in order
        let mut donor_lines = src.lines();
        for line in got.lines().filter(|l| !l.trim().is_empty()) {
            check(donor_lines.any(|d| d == line), || format!("{rel}: {line:?} not in donor order"))?;
        }
    }
    Ok(format!("file map and emitted tree match the donor: {}", expected.join(", ")))
}

// 9. Configuration validation against exhaustive enumeration.

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> FeatureModel {
    let kinds = [FeatureKind::Mandatory, FeatureKind::Optional, FeatureKind::Alternative];
    let mut features = vec![Feature { id: "x0".into(), parent: None, kind: FeatureKind::Mandatory }];
    for i in 1..n {
        features.push(Feature {
            id: format!("x{i}"),
            parent: Some(format!("x{}", rng.random_range(0..i))),
            kind: kinds[rng.random_range(0..3)],
        });
    }
    let mut cross_tree = Vec::new();
    if n > 1 {
        for _ in 0..rng.random_range(0..=3) {
            let a = rng.random_range(0..n);
            let b = (a + rng.random_range(1..n)) % n;
            cross_tree.push(if rng.random_bool(0.5) {
                Constraint::Requires { from: format!("x{a}"), to: format!("x{b}") }
            } else {
                Constraint::Excludes { a: format!("x{a}"), b: format!("x{b}") }
            });
        }
    }
    FeatureModel { features, cross_tree, annotations: BTreeMap::new() }
}

/// Violations of the selection `mask`, evaluated bit by bit.
fn oracle_violations(parents: &[Option<usize>], kinds: &[FeatureKind], cross: &[(bool, usize, usize)], mask: u32) -> Vec<Violation> {
    let on = |i: usize| mask & (1 << i) != 0;
    let id = |i: usize| format!("x{i}");
    let mut out = Vec::new();
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            if kinds[i] == FeatureKind::Mandatory && on(p) && !on(i) {
                out.push(Violation::MandatoryMissing { parent: id(p), child: id(i) });
            }
        }
    }
    for p in 0..parents.len() {
        let mut chosen: Vec<String> =
            (0..parents.len()).filter(|&c| parents[c] == Some(p) && kinds[c] == FeatureKind::Alternative && on(c)).map(id).collect();
        if chosen.len() > 1 {
            chosen.sort();
            out.push(Violation::MultipleAlternatives { parent: id(p), selected: chosen });
        }
    }
    for &(requires, a, b) in cross {
        if requires && on(a) && !on(b) {
            out.push(Violation::Requires { from: id(a), to: id(b) });
        }
        if !requires && on(a) && on(b) {
            out.push(Violation::Excludes { a: id(a), b: id(b) });
        }
    }
    out.sort();
    out.dedup();
    out
}

fn criterion_feature_model() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut models, mut selections) = (0, 0u64);
    for n in 1..=10usize {
        for _ in 0..10 {
            let model = random_model(&mut rng, n);
            model.check().map_err(|e| e.to_string())?;
            let index = |s: &str| s[1..].parse::<usize>().unwrap();
            let parents: Vec<Option<usize>> = model.features.iter().map(|f| f.parent.as_deref().map(index)).collect();
            let kinds: Vec<FeatureKind> = model.features.iter().map(|f| f.kind).collect();
            let cross: Vec<(bool, usize, usize)> = model
                .cross_tree
                .iter()
                .map(|c| match c {
                    Constraint::Requires { from, to } => (true, index(from), index(to)),
                    Constraint::Excludes { a, b } => (false, index(a), index(b)),
                })
                .collect();
            for mask in 0..(1u32 << n) {
                let selected: BTreeSet<String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| format!("x{i}")).collect();
                let got = model.validate_configuration(&selected).map_err(|e| e.to_string())?;
                let want = oracle_violations(&parents, &kinds, &cross, mask);
                check(got == want, || format!("n={n} mask {mask:b}: {got:?} vs {want:?}"))?;
                selections += 1;
            }
            models += 1;
        }
    }
    Ok(format!("{models} models up to 10 features, {selections} selections agree"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("slicing oracle equivalence", criterion_slicing),
        ("reconfigurator equivalence", criterion_reconfigurator),
        ("end-to-end transplant", criterion_end_to_end),
        ("GP reduction", criterion_reduction),
        ("organ collision", criterion_collision),
        ("flagged implantation", criterion_flagged),
        ("determinism", criterion_determinism),
        ("multi-file structure", criterion_placement),
        ("feature-model validation", criterion_feature_model),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
