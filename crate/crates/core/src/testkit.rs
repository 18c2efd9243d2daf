//! Helpers shared by unit tests.

use std::fs;
use std::path::Path;
use std::process::Command;

use crate::adaptation::{materialize, synthesize_wrapper, GpIndividual, HostContext, Organ};
use crate::depgraph::build_sdg;
use crate::extractor::{extract_over_organ, OverOrgan};
use crate::frontend::{ProjectModel, SourceUnit};
use crate::sandbox::BuildCommand;
use crate::suite::{SuiteKind, TestCase, TestSuite};

pub const D1_UTIL: &str = "int add(int a, int b)\n{\n    return a + b;\n}\n\nint twice(int x)\n{\n    return add(x, x);\n}\n";
pub const D1_MAIN: &str = "#include <stdio.h>\n\nint add(int a, int b);\n\nint feat_sum(int n)\n{\n    int s = add(n, n);\n    printf(\"%d\\n\", s);\n    return s;\n}\n\nint main(void)\n{\n    printf(\"start\\n\");\n    feat_sum(3);\n    return 0;\n}\n";
pub const HOST_MAIN: &str = "#include <stdio.h>\n\nint main(int argc, char **argv)\n{\n    int count = 3;\n    printf(\"host %d\\n\", argc);\n    /*@transplant:sum*/\n    return 0;\n}\n";

pub fn project(files: &[(&str, &str)]) -> ProjectModel {
    let units = files.iter().map(|(p, t)| SourceUnit::new(*p, t)).collect();
    ProjectModel::from_units(Path::new("."), units).unwrap()
}

pub fn extract(files: &[(&str, &str)], entry: &str, feature: &str) -> OverOrgan {
    let p = project(files);
    let sdg = build_sdg(&p).unwrap();
    extract_over_organ(&p, &sdg, entry, None, feature, "donor").unwrap()
}

pub fn context(host: &ProjectModel, marker: &str) -> HostContext {
    HostContext::new(host, "host", marker, BuildCommand::default()).unwrap()
}

/// The unreduced organ with every slot on its first candidate.
pub fn full_organ(over: &OverOrgan, host: &ProjectModel, ctx: &HostContext) -> Organ {
    let w = synthesize_wrapper(over, host, ctx).unwrap();
    materialize(over, &w, &GpIndividual::full(over, &w, 0)).unwrap()
}

/// An ice-box suite of stdout-checked tests written below `dir`.
pub fn suite(dir: &Path, kind: SuiteKind, tests: &[(&str, &[&str], &str)]) -> TestSuite {
    fs::create_dir_all(dir).unwrap();
    let mut s = TestSuite::new(kind, dir);
    for (name, args, out) in tests {
        let file = format!("{name}.out");
        fs::write(dir.join(&file), out).unwrap();
        s.tests.push(TestCase {
            name: name.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
            stdin: None,
            expected_exit: 0,
            expected_stdout: Some(file),
        });
    }
    s
}

/// Builds the project and returns the binary's output for `args`.
pub fn run(p: &ProjectModel, defines: &[String], args: &[&str]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let bin = BuildCommand::default().build_project(p, dir.path(), defines).unwrap();
    let out = Command::new(bin).args(args).output().unwrap();
    String::from_utf8(out.stdout).unwrap()
}

/// Defined text symbols of the built binary.
pub fn symbols(p: &ProjectModel, defines: &[String]) -> Vec<String> {
    let dir = tempfile::tempdir().unwrap();
    let bin = BuildCommand::default().build_project(p, dir.path(), defines).unwrap();
    let out = Command::new("nm").arg(bin).output().unwrap();
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .filter_map(|l| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            (parts.len() == 3 && matches!(parts[1], "T" | "t" | "D" | "d" | "B" | "b")).then(|| parts[2].to_string())
        })
        .collect()
}

pub fn four_file_donor() -> Vec<(&'static str, &'static str)> {
    vec![
        ("include/buf.h", "#define CAP 16\n\ntypedef struct buf\n{\n    int len;\n    char data[CAP];\n} buf_t;\n\nvoid buf_put(buf_t *b, char c);\n"),
        ("src/buf.c", "#include \"../include/buf.h\"\n\nvoid buf_put(buf_t *b, char c)\n{\n    if (b->len < CAP)\n        b->data[b->len++] = c;\n}\n"),
        ("include/render.h", "#include \"buf.h\"\n\nint render(const char *s);\n"),
        ("src/render.c", "#include <stdio.h>\n#include \"../include/render.h\"\n\nstatic int width = 8;\n\nint render(const char *s)\n{\n    buf_t b;\n    b.len = 0;\n    while (*s)\n        buf_put(&b, *s++);\n    printf(\"%.*s|%d\\n\", b.len, b.data, width);\n    return b.len;\n}\n"),
        ("src/main.c", "#include \"../include/render.h\"\n\nint main(int argc, char **argv)\n{\n    if (argc > 1)\n        render(argv[1]);\n    return 0;\n}\n"),
    ]
}
