//! Synthetic inputs for the benchmarks.

use std::fmt::Write;
use std::path::Path;

use transplant_core::frontend::{ProjectModel, SourceUnit};

/// A donor of `files` units with `per_file` functions each. Every function
/// calls its predecessor, reads a file-level global and carries one
/// `#ifdef OPT_<i>` block, so slices and feature removal have work to do.
pub fn synthetic_donor(files: usize, per_file: usize) -> ProjectModel {
    let mut units = Vec::new();
    let mut prev: Option<String> = None;
    let mut protos = String::new();
    for f in 0..files {
        let mut text = String::from("#include <stdio.h>\n\n");
        text.push_str(&protos);
        writeln!(text, "static int total_{f} = 0;\n").unwrap();
        for i in 0..per_file {
            let name = format!("step_{f}_{i}");
            writeln!(text, "int {name}(int x)\n{{\n    int y = x + {i};").unwrap();
            if let Some(p) = &prev {
                writeln!(text, "    y = {p}(y);").unwrap();
            }
            writeln!(text, "#ifdef OPT_{}\n    y = y * 2;\n#endif", i % 4).unwrap();
            writeln!(text, "    total_{f} += y;\n    return y;\n}}\n").unwrap();
            writeln!(protos, "int {name}(int x);").unwrap();
            prev = Some(name);
        }
        units.push(SourceUnit::new(&format!("u{f}.c"), &text));
    }
    let last = prev.unwrap_or_else(|| "abs".into());
    let main = format!(
        "#include <stdio.h>\n\n{protos}\nint entry(int n)\n{{\n    int r = {last}(n);\n    printf(\"%d\\n\", r);\n    return r;\n}}\n\nint main(void)\n{{\n    entry(1);\n    return 0;\n}}\n"
    );
    units.push(SourceUnit::new("main.c", &main));
    ProjectModel::from_units(Path::new("."), units).unwrap()
}
