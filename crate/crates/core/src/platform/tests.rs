use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use super::*;
use crate::depgraph::build_sdg;
use crate::extractor::extract_over_organ;
use crate::frontend::SourceUnit;
use crate::suite::{SuiteKind, TestCase};

const UTIL: &str = "int add(int a, int b)\n{\n    return a + b;\n}\n";
const MAIN: &str = "#include <stdio.h>\n\nint add(int a, int b);\n\nint feat_sum(int n)\n{\n    int s = add(n, n);\n    printf(\"%d\\n\", s);\n    return s;\n}\n\nint main(void)\n{\n    feat_sum(3);\n    return 0;\n}\n";

fn d1() -> (ProjectModel, OverOrgan) {
    let units = vec![SourceUnit::new("util.c", UTIL), SourceUnit::new("main.c", MAIN)];
    let p = ProjectModel::from_units(Path::new("."), units).unwrap();
    let sdg = build_sdg(&p).unwrap();
    let o = extract_over_organ(&p, &sdg, "feat_sum", None, "sum", "d1").unwrap();
    (p, o)
}

#[test]
fn over_organ_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let plat = Platform::init(&dir.path().join("platform")).unwrap();
    let (_, o) = d1();
    let manifest = plat.store_over_organ(&o, None, false).unwrap();
    let root = dir.path().join("platform/over-organs/sum");
    assert_eq!(manifest, root.join("manifest.json"));
    assert!(root.join("main.c").is_file() && root.join("util.c").is_file());
    let back = plat.load_over_organ("sum").unwrap();
    assert_eq!(back, o);
    assert_eq!(back.statement_array.len(), o.statement_array.len());
    // store twice without force
    assert!(matches!(plat.store_over_organ(&o, None, false), Err(PlatformError::DuplicateFeatureId(_))));
    plat.store_over_organ(&o, None, true).unwrap();
    // re-store under a new id: identical sources
    let mut renamed = back.clone();
    renamed.feature_id = "sum2".into();
    plat.store_over_organ(&renamed, None, false).unwrap();
    for f in ["main.c", "util.c"] {
        let a = fs::read(root.join(f)).unwrap();
        let b = fs::read(dir.path().join("platform/over-organs/sum2").join(f)).unwrap();
        assert_eq!(a, b);
    }
    let m = plat.over_organ_manifest("sum").unwrap();
    assert_eq!(m.entry_point, "feat_sum");
    assert_eq!(m.boundary_symbols, ["printf"]);
}

#[test]
fn manifest_keys_are_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let plat = Platform::init(dir.path()).unwrap();
    let (_, o) = d1();
    let path = plat.store_over_organ(&o, None, false).unwrap();
    let text = fs::read_to_string(path).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn corruption_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let plat = Platform::init(dir.path()).unwrap();
    let (_, o) = d1();
    plat.store_over_organ(&o, None, false).unwrap();
    let f = dir.path().join("over-organs/sum/util.c");
    let mut bytes = fs::read(&f).unwrap();
    bytes[0] ^= 1;
    fs::write(&f, bytes).unwrap();
    match plat.load_over_organ("sum") {
        Err(PlatformError::DigestMismatch(p)) => assert!(p.ends_with("util.c"), "{p}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(plat.load_over_organ("nope"), Err(PlatformError::MissingArtifact(_))));
}

#[test]
fn interrupted_store_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let plat = Platform::init(dir.path()).unwrap();
    let (_, o) = d1();
    let mut crash = |i: usize| if i == 1 { Err(io::Error::other("killed")) } else { Ok(()) };
    assert!(plat.store_over_organ_with(&o, None, false, &mut crash).is_err());
    assert!(matches!(plat.load_over_organ("sum"), Err(PlatformError::MissingArtifact(_))));
    assert!(plat.list().unwrap().is_empty());
    // the leftover temp directory does not block a later store
    plat.store_over_organ(&o, None, false).unwrap();
    assert_eq!(plat.load_over_organ("sum").unwrap(), o);
    // an interrupted forced replace keeps the old artifact intact
    let mut renamed = o.clone();
    renamed.entry_point = "changed".into();
    assert!(plat.store_over_organ_with(&renamed, None, true, &mut crash).is_err());
    assert_eq!(plat.load_over_organ("sum").unwrap(), o);
}

#[test]
fn product_base_round_trip_compiles() {
    let dir = tempfile::tempdir().unwrap();
    let plat = Platform::init(dir.path()).unwrap();
    let (p, _) = d1();
    plat.store_product_base("base", &p, false).unwrap();
    let back = plat.load_product_base("base").unwrap();
    assert_eq!(back.units, p.units);
    let scratch = tempfile::tempdir().unwrap();
    crate::sandbox::BuildCommand::default().build_project(&back, scratch.path(), &[]).unwrap();
}

#[test]
fn icebox_round_trip_and_listing() {
    let dir = tempfile::tempdir().unwrap();
    let plat = Platform::init(dir.path()).unwrap();
    let sdir = tempfile::tempdir().unwrap();
    fs::write(sdir.path().join("o.txt"), "6\n").unwrap();
    let mut suite = TestSuite::new(SuiteKind::Icebox, sdir.path());
    suite.tests.push(TestCase { name: "six".into(), args: vec![], stdin: None, expected_exit: 0, expected_stdout: Some("o.txt".into()) });
    plat.store_icebox("sum", &suite, false).unwrap();
    let back = plat.load_icebox("sum").unwrap();
    assert_eq!(back.tests.len(), 1);
    assert_eq!(back.expected_stdout(&back.tests[0]).unwrap().unwrap(), b"6\n");
    let (_, o) = d1();
    plat.store_over_organ(&o, Some("sum"), false).unwrap();
    assert_eq!(plat.over_organ_manifest("sum").unwrap().icebox_suite_ref.as_deref(), Some("icebox/sum"));
    assert!(matches!(plat.store_over_organ(&o, Some("missing"), true), Err(PlatformError::MissingArtifact(_))));
    let kinds: BTreeSet<(String, String)> = plat.list().unwrap().into_iter().map(|r| (r.kind, r.id)).collect();
    assert_eq!(kinds, BTreeSet::from([("icebox".into(), "sum".into()), ("over-organs".into(), "sum".into())]));
}

#[test]
fn feature_model_persists() {
    let dir = tempfile::tempdir().unwrap();
    let plat = Platform::init(dir.path()).unwrap();
    let mut m = plat.feature_model().unwrap();
    assert!(m.features.is_empty());
    m.features.push(Feature { id: "editor".into(), parent: None, kind: FeatureKind::Mandatory });
    m.features.push(Feature { id: "sum".into(), parent: Some("editor".into()), kind: FeatureKind::Optional });
    m.annotations.insert("sum".into(), Annotation { donor: "d1".into(), entry_point: "feat_sum".into() });
    plat.save_feature_model(&m).unwrap();
    assert_eq!(Platform::open(dir.path()).unwrap().feature_model().unwrap(), m);
    assert!(matches!(Platform::open(&dir.path().join("x")), Err(PlatformError::NotInitialized(_))));
}
