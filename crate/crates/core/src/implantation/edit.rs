use std::collections::{BTreeMap, BTreeSet};

use super::{feature_macro, host_qualified, locate_marker, CloneReport, ImplantError, PostoperativeProject, Verdict};
use crate::adaptation::{HostContext, Organ};
use crate::depgraph::libc;
use crate::frontend::ast::{called_names, referenced_names, referenced_tags};
use crate::frontend::printer::print_stmts;
use crate::frontend::{element_text, join_tokens, Detail, Element, ElementKind, ProjectModel, Tok};

const INDENT: &str = "    ";

struct Edit {
    start: usize,
    end: usize,
    text: String,
}

#[derive(Default)]
struct Edits(BTreeMap<String, Vec<Edit>>);

impl Edits {
    fn add(&mut self, file: &str, start: usize, end: usize, text: String) {
        self.0.entry(file.to_string()).or_default().push(Edit { start, end, text });
    }

    /// Applies the edits of each file; edits at the same offset keep the
    /// order they were added in.
    fn apply(self, project: &mut ProjectModel) -> Result<Vec<String>, ImplantError> {
        let mut touched = Vec::new();
        for (file, mut edits) in self.0 {
            let mut text = project.text(&file).unwrap_or_default().to_string();
            let order: Vec<usize> = (0..edits.len()).collect();
            let mut keyed: Vec<(usize, usize)> = order.into_iter().map(|i| (edits[i].start, i)).collect();
            keyed.sort();
            for &(_, i) in keyed.iter().rev() {
                let e = &mut edits[i];
                text.replace_range(e.start..e.end, &std::mem::take(&mut e.text));
            }
            project.set_text(&file, &text)?;
            touched.push(file);
        }
        Ok(touched)
    }
}

fn guarded(guard: Option<&str>, body: &str) -> String {
    match guard {
        Some(g) => format!("#ifdef {g}\n{body}\n#endif"),
        None => body.to_string(),
    }
}

/// Offset at which declarations are inserted: before the first top-level
/// function definition, inside an include guard, or at the end.
fn forward_offset(project: &ProjectModel, file: &str) -> (usize, bool) {
    let ast = project.ast(file).expect("file parsed");
    let text = project.text(file).unwrap_or_default();
    if let [only] = ast.elements.as_slice() {
        if let Detail::Conditional { negated: true, branches, .. } = &only.detail {
            if branches.len() == 1 {
                let src = &text[only.span.start..only.span.end];
                if let Some(at) = src.rfind("#endif") {
                    return (only.span.start + at, true);
                }
            }
        }
    }
    match ast.elements.iter().position(|e| e.kind() == ElementKind::FunctionDefinition) {
        Some(0) => (0, false),
        Some(i) => {
            let end = ast.elements[i - 1].span.end;
            let eol = text[end..].find('\n').map(|n| end + n + 1).unwrap_or(text.len());
            (eol, false)
        }
        None => (text.len(), false),
    }
}

fn insert_forward(edits: &mut Edits, project: &ProjectModel, file: &str, items: &[String], guard: Option<&str>) {
    if items.is_empty() {
        return;
    }
    let body = guarded(guard, &items.join("\n"));
    let text = project.text(file).unwrap_or_default();
    let (at, in_guard) = forward_offset(project, file);
    let block = if in_guard {
        format!("{body}\n")
    } else if at == text.len() {
        let sep = if text.is_empty() || text.ends_with('\n') { "" } else { "\n" };
        format!("{sep}\n{body}\n")
    } else if at == 0 {
        format!("{body}\n\n")
    } else {
        format!("\n{body}\n")
    };
    edits.add(file, at, at, block);
}

fn append_definitions(edits: &mut Edits, project: &ProjectModel, file: &str, defs: &[String], guard: Option<&str>) {
    if defs.is_empty() {
        return;
    }
    let text = project.text(file).unwrap_or_default();
    let sep = if text.is_empty() || text.ends_with('\n') { "" } else { "\n" };
    let body = guarded(guard, &defs.join("\n\n"));
    edits.add(file, text.len(), text.len(), format!("{sep}\n{body}\n"));
}

fn merged_function(host: &Element, organ: &Element, guard: &str) -> String {
    let f = host.function().expect("function");
    let mut out = join_tokens(&f.header);
    out.push_str("\n{\n");
    out.push_str(&format!("#ifdef {guard}\n"));
    out.push_str(&print_stmts(organ.body().unwrap_or_default(), INDENT, 1));
    out.push_str("#else\n");
    out.push_str(&print_stmts(host.body().unwrap_or_default(), INDENT, 1));
    out.push_str("#endif\n}");
    out
}

fn find_host<'p>(project: &'p ProjectModel, qualified: &str) -> Option<(&'p str, &'p Element)> {
    project.elements().into_iter().find(|(f, e)| host_qualified(f, e) == qualified)
}

/// Builds the implanted project text. Returns the project, the host names
/// of grafted elements and the macros merged code needs.
pub(super) fn apply(
    organ: &Organ,
    host: &PostoperativeProject,
    ctx: &HostContext,
    report: &CloneReport,
    flag: Option<&str>,
) -> Result<(ProjectModel, Vec<String>, Vec<String>), ImplantError> {
    let mut project = host.project.clone();
    let guard = flag.map(feature_macro);
    let merge_guard = guard.clone().unwrap_or_else(|| feature_macro(&organ.feature_id));
    let mut defines = Vec::new();
    let mut edits = Edits::default();
    // file → (declarations, definitions), in organ order
    let mut grafts: BTreeMap<&str, (Vec<String>, Vec<String>)> = BTreeMap::new();
    let mut file_order: Vec<&str> = Vec::new();
    let mut grafted = Vec::new();
    let mut fresh: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for (oe, d) in organ.elements.iter().zip(&report.decisions) {
        match d.verdict {
            Verdict::Discard => {}
            Verdict::Graft => {
                if !file_order.contains(&oe.file.as_str()) {
                    file_order.push(&oe.file);
                }
                let slot = grafts.entry(&oe.file).or_default();
                let text = element_text(&oe.element);
                if oe.element.kind() == ElementKind::FunctionDefinition {
                    slot.1.push(text);
                    fresh.entry(oe.file.clone()).or_default().extend(oe.element.name.clone());
                } else {
                    slot.0.push(text);
                }
                grafted.push(host_qualified(&oe.file, &oe.element));
            }
            Verdict::Merge => {
                let q = d.host_element.as_deref().expect("merge names a host element");
                let (file, h) = find_host(&project, q).expect("merged host element exists");
                edits.add(file, h.span.start, h.span.end, merged_function(h, &oe.element, &merge_guard));
                fresh.entry(file.to_string()).or_default().extend(h.name.clone());
                if guard.is_none() && !defines.contains(&merge_guard) {
                    defines.push(merge_guard.clone());
                }
            }
        }
    }

    let site = locate_marker(&project, &ctx.marker)?;
    let mut wrapper = String::new();
    for line in &organ.wrapper {
        wrapper.push_str(&site.indent);
        wrapper.push_str(line);
        wrapper.push('\n');
    }
    if let Some(g) = &guard {
        wrapper = format!("#ifdef {g}\n{wrapper}#endif\n");
    }
    edits.add(&site.file, site.start, site.end, wrapper);
    if let Some(f) = enclosing_function(&project, &site.file, site.line) {
        fresh.entry(site.file.clone()).or_default().insert(f);
    }

    let mut new_files = Vec::new();
    for file in &file_order {
        let (decls, defs) = &grafts[file];
        if project.index_of(file).is_some() {
            insert_forward(&mut edits, &project, file, decls, guard.as_deref());
            append_definitions(&mut edits, &project, file, defs, guard.as_deref());
        } else {
            let mut body = decls.join("\n");
            if !defs.is_empty() {
                if !body.is_empty() {
                    body.push_str("\n\n");
                }
                body.push_str(&defs.join("\n\n"));
            }
            new_files.push((file.to_string(), format!("{}\n", guarded(guard.as_deref(), &body))));
        }
    }
    edits.apply(&mut project)?;
    for (file, text) in new_files {
        project.set_text(&file, &text)?;
    }

    for (file, names) in &fresh {
        add_support(&mut project, file, names, guard.as_deref())?;
    }
    Ok((project, grafted, defines))
}

/// The function definition whose span covers `line`.
pub fn enclosing_function(project: &ProjectModel, file: &str, line: u32) -> Option<String> {
    let ast = project.ast(file)?;
    ast.all_elements()
        .into_iter()
        .find(|e| e.kind() == ElementKind::FunctionDefinition && e.span.contains_line(line))
        .and_then(|e| e.name.clone())
}

/// Adds the prototypes, includes and type definitions the given functions
/// of `file` need but cannot see, until nothing is missing.
fn add_support(
    project: &mut ProjectModel,
    file: &str,
    functions: &BTreeSet<String>,
    guard: Option<&str>,
) -> Result<(), ImplantError> {
    for _ in 0..4 {
        let items = missing_support(project, file, functions);
        if items.is_empty() {
            break;
        }
        let mut edits = Edits::default();
        insert_forward(&mut edits, project, file, &items, guard);
        edits.apply(project)?;
    }
    Ok(())
}

fn missing_support(project: &ProjectModel, file: &str, functions: &BTreeSet<String>) -> Vec<String> {
    let Some(ast) = project.ast(file) else { return Vec::new() };
    let headers = project.included_headers(file);
    let mut in_headers: BTreeSet<String> = BTreeSet::new();
    let mut system: Vec<String> = Vec::new();
    for h in &headers {
        for e in project.ast(h).map(|a| a.all_elements()).unwrap_or_default() {
            in_headers.extend(e.defines());
            in_headers.extend(e.tags().iter().cloned());
            if let Detail::Include { target, system: true } = &e.detail {
                system.push(target.clone());
            }
        }
    }
    let own = ast.all_elements();
    for e in &own {
        if let Detail::Include { target, system: true } = &e.detail {
            system.push(target.clone());
        }
    }
    let visible_before = |name: &str, pos: usize| {
        in_headers.contains(name)
            || own.iter().any(|e| e.span.start < pos && (e.defines().iter().any(|n| n == name) || e.tags().iter().any(|t| t == name)))
    };
    let mut items: Vec<String> = Vec::new();
    let push = |s: String, items: &mut Vec<String>| {
        if !items.contains(&s) {
            items.push(s);
        }
    };
    for f in own.iter().filter(|e| e.kind() == ElementKind::FunctionDefinition) {
        if !f.name.as_ref().is_some_and(|n| functions.contains(n)) {
            continue;
        }
        let func = f.function().expect("function");
        let mut tokens: Vec<Tok> = func.header.clone();
        let mut locals: BTreeSet<String> = func.params.iter().filter_map(|p| p.name.clone()).collect();
        for s in func.body.as_deref().unwrap_or_default() {
            tokens.extend(s.all_tokens().into_iter().cloned());
            locals.extend(s.declared().into_iter().map(|d| d.name));
        }
        let calls: BTreeSet<String> = called_names(&tokens).into_iter().collect();
        let mut names: Vec<String> = referenced_names(&tokens).into_iter().filter(|n| !locals.contains(n)).collect();
        names.extend(referenced_tags(&tokens));
        names.dedup();
        for name in names {
            if f.name.as_deref() == Some(name.as_str()) || visible_before(&name, f.span.start) {
                continue;
            }
            if let Some(item) = provider(project, file, &name, calls.contains(&name)) {
                push(item, &mut items);
            } else if let Some(h) = libc::header_of(&name) {
                if !libc::declared_by(&system, &name) {
                    push(format!("#include <{h}>"), &mut items);
                }
            }
        }
    }
    items
}

/// Text that makes `name` visible in `file`, from wherever the project
/// defines it.
fn provider(project: &ProjectModel, file: &str, name: &str, called: bool) -> Option<String> {
    let defines = |e: &Element| e.defines().iter().any(|n| n == name) || e.tags().iter().any(|t| t == name);
    let mut fallback = None;
    for (path, e) in project.elements() {
        if !defines(e) {
            continue;
        }
        match e.kind() {
            ElementKind::FunctionDefinition | ElementKind::FunctionDeclaration => {
                if !called || (e.is_static() && path != file) {
                    continue;
                }
                let f = e.function().expect("function");
                return Some(format!("{};", join_tokens(&f.header)));
            }
            ElementKind::TypeDefinition | ElementKind::ConstantDefinition => {
                if path == file {
                    continue;
                }
                if path.ends_with(".h") {
                    return Some(format!("#include \"{}\"", relative(file, path)));
                }
                fallback.get_or_insert_with(|| element_text(e));
            }
            ElementKind::GlobalVariable => {
                if path == file || e.is_static() {
                    continue;
                }
                if path.ends_with(".h") {
                    return Some(format!("#include \"{}\"", relative(file, path)));
                }
                if let Detail::Variable(v) = &e.detail {
                    if v.declarators.len() == 1 && v.declarators[0].init.is_none() && !v.is_extern {
                        fallback.get_or_insert_with(|| format!("extern {};", join_tokens(&v.tokens)));
                    }
                }
            }
            _ => {}
        }
    }
    fallback
}

/// Path of `target` relative to the directory of `from`.
fn relative(from: &str, target: &str) -> String {
    let from_dir: Vec<&str> = from.split('/').collect::<Vec<_>>().split_last().map(|(_, d)| d.to_vec()).unwrap_or_default();
    let to: Vec<&str> = target.split('/').collect();
    let common = from_dir.iter().zip(&to).take_while(|(a, b)| a == b).count();
    let mut parts: Vec<&str> = vec![".."; from_dir.len() - common];
    parts.extend(&to[common..]);
    parts.join("/")
}
