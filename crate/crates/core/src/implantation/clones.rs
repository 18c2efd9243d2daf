use std::collections::BTreeSet;

use super::{CloneDecision, CloneReport, ImplantError, Phase, PostoperativeProject, Verdict};
use crate::adaptation::Organ;
use crate::frontend::printer::{line_normalize, normalize, print_stmts};
use crate::frontend::{element_text, Detail, Element, ElementKind, ProjectModel};

/// Stable name of a host element: `file::kind:name`.
pub fn host_qualified(file: &str, e: &Element) -> String {
    let label = match &e.detail {
        Detail::Include { target, system: true } => format!("<{target}>"),
        Detail::Include { target, system: false } => format!("\"{target}\""),
        _ => e.name.clone().unwrap_or_default(),
    };
    format!("{file}::{}:{label}", e.kind().as_str())
}

/// Host elements an organ element placed in `file` could collide with:
/// everything in the file and the headers it includes, plus external
/// definitions of the same name anywhere in the project.
fn candidates<'p>(host: &'p ProjectModel, file: &str, e: &Element) -> Vec<(&'p str, &'p Element)> {
    let mut scope: Vec<String> = Vec::new();
    if host.index_of(file).is_some() {
        scope.push(file.to_string());
        scope.extend(host.included_headers(file));
    }
    let mut out: Vec<(&str, &Element)> = Vec::new();
    for path in &scope {
        if let Some(ast) = host.ast(path) {
            out.extend(ast.all_elements().into_iter().map(|x| (ast.path.as_str(), x)));
        }
    }
    let external = matches!(e.kind(), ElementKind::FunctionDefinition | ElementKind::GlobalVariable)
        && e.is_definition()
        && !e.is_static();
    if external {
        for (path, x) in host.elements() {
            if scope.iter().any(|s| s == path) || x.is_static() || !x.is_definition() {
                continue;
            }
            if x.kind() == e.kind() && x.name == e.name {
                out.push((path, x));
            }
        }
    }
    out
}

fn shares_name(a: &Element, b: &Element) -> bool {
    let na: BTreeSet<String> = a.defines().into_iter().chain(a.tags().iter().cloned()).collect();
    b.defines().iter().chain(b.tags()).any(|n| na.contains(n))
}

fn variable_types(e: &Element) -> Vec<(String, String)> {
    match &e.detail {
        Detail::Variable(v) => v.declarators.iter().map(|d| (d.name.clone(), d.ty.clone())).collect(),
        _ => Vec::new(),
    }
}

/// Statement-level diff of two bodies, by longest common subsequence.
fn body_diff(host: &Element, organ: &Element) -> Vec<String> {
    let lines = |e: &Element| -> Vec<String> {
        e.body().map(|b| print_stmts(b, "", 0).lines().map(str::to_string).collect()).unwrap_or_default()
    };
    let (a, b) = (lines(host), lines(organ));
    let mut lcs = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            lcs[i][j] = if a[i] == b[j] { lcs[i + 1][j + 1] + 1 } else { lcs[i + 1][j].max(lcs[i][j + 1]) };
        }
    }
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() || j < b.len() {
        if i < a.len() && j < b.len() && a[i] == b[j] {
            i += 1;
            j += 1;
        } else if j < b.len() && (i == a.len() || lcs[i][j + 1] >= lcs[i + 1][j]) {
            out.push(format!("+ {}", b[j]));
            j += 1;
        } else {
            out.push(format!("- {}", a[i]));
            i += 1;
        }
    }
    out
}

/// Decides graft, discard or merge for every organ element.
///
/// Phase 1 compares line-normalized text (comments kept); phase 2 compares
/// same-named elements structurally, ignoring comments and layout.
pub fn detect_clones(organ: &Organ, host: &PostoperativeProject) -> Result<CloneReport, ImplantError> {
    let project = &host.project;
    let grafted = host.grafted();
    let mut report = CloneReport::default();
    for oe in &organ.elements {
        let e = &oe.element;
        let cands = candidates(project, &oe.file, e);
        let mut decision = CloneDecision {
            organ_element: oe.qualified.clone(),
            file: oe.file.clone(),
            host_element: None,
            verdict: Verdict::Graft,
            phase: None,
            diff: Vec::new(),
        };
        let text = line_normalize(&element_text(e));
        if let Some((f, h)) = cands.iter().find(|(_, h)| h.kind() == e.kind() && line_normalize(&element_text(h)) == text)
        {
            decision.host_element = Some(host_qualified(f, h));
            decision.verdict = Verdict::Discard;
            decision.phase = Some(Phase::Line);
        } else if let Some((verdict, f, h)) = structural(e, &cands)? {
            decision.host_element = Some(host_qualified(f, h));
            decision.verdict = verdict;
            decision.phase = Some(Phase::Ast);
            if verdict == Verdict::Merge {
                decision.diff = body_diff(h, e);
            }
        }
        if let Some(h) = &decision.host_element {
            if grafted.contains(h.as_str()) && !report.connection_points.contains(h) {
                report.connection_points.push(h.clone());
            }
        }
        report.decisions.push(decision);
    }
    report.connection_points.sort();
    Ok(report)
}

type Match<'p> = Option<(Verdict, &'p str, &'p Element)>;

fn structural<'p>(e: &Element, cands: &[(&'p str, &'p Element)]) -> Result<Match<'p>, ImplantError> {
    let conflict = |h: &Element, organ_sig: String, host_sig: String| ImplantError::SignatureConflict {
        name: e.name.clone().or_else(|| h.name.clone()).unwrap_or_default(),
        organ: organ_sig,
        host: host_sig,
    };
    let named: Vec<&(&str, &Element)> = cands.iter().filter(|(_, h)| shares_name(e, h)).collect();
    match e.kind() {
        ElementKind::FunctionDefinition | ElementKind::FunctionDeclaration => {
            let sig = e.function().expect("function").signature();
            for &&(_, h) in &named {
                match h.function() {
                    None => return Err(conflict(h, sig, h.kind().as_str().to_string())),
                    Some(hf) if hf.signature() != sig => return Err(conflict(h, sig, hf.signature())),
                    Some(_) => {}
                }
            }
            let def = named.iter().find(|(_, h)| h.kind() == ElementKind::FunctionDefinition);
            if e.kind() == ElementKind::FunctionDeclaration {
                // the host already declares or defines it
                return Ok(def.or(named.first()).map(|&&(f, h)| (Verdict::Discard, f, h)));
            }
            // a host prototype alone does not provide the code
            Ok(def.map(|&&(f, h)| {
                let verdict = if normalize(e) == normalize(h) { Verdict::Discard } else { Verdict::Merge };
                (verdict, f, h)
            }))
        }
        ElementKind::GlobalVariable => {
            let types = variable_types(e);
            for &&(f, h) in &named {
                let ht = variable_types(h);
                if h.kind() != ElementKind::GlobalVariable || ht != types {
                    let show = |t: &[(String, String)]| t.iter().map(|(n, t)| format!("{t} {n}")).collect::<Vec<_>>().join(", ");
                    return Err(conflict(h, show(&types), show(&ht)));
                }
                // an extern declaration in scope does not provide storage
                if e.is_definition() && !h.is_definition() {
                    continue;
                }
                return Ok(Some((Verdict::Discard, f, h)));
            }
            Ok(None)
        }
        ElementKind::TypeDefinition | ElementKind::ConstantDefinition => {
            for &&(f, h) in &named {
                if h.kind() == e.kind() && normalize(h) == normalize(e) {
                    return Ok(Some((Verdict::Discard, f, h)));
                }
                return Err(conflict(h, normalize(e), normalize(h)));
            }
            Ok(None)
        }
        ElementKind::IncludeDirective | ElementKind::ConditionalDirectiveBlock => Ok(None),
    }
}
