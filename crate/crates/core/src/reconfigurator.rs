//! Removal of preprocessor-guarded features.
//!
//! Works line by line on raw text so that every byte outside the resolved
//! conditional regions is kept as is. A resolved region loses its guard
//! lines and its untaken branch, newline included.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::parser::directive_parts;
use crate::frontend::{lexer, ParseError, ProjectModel, SourceUnit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconfigError {
    #[error("{file}:{line}: unbalanced preprocessor directive")]
    UnbalancedDirective { file: String, line: u32 },
    #[error("{file}:{line}: #elif inside a resolved feature block")]
    UnsupportedElif { file: String, line: u32 },
    #[error("invalid feature identifier {0:?}")]
    InvalidIdentifier(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Warning {
    UnknownFeature(String),
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::UnknownFeature(id) => write!(f, "feature {id} does not guard any code"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalMode {
    /// Treat listed features as undefined: guarded code goes, `#else` stays.
    #[default]
    DeleteGuardedCode,
    /// Treat listed features as defined: guard lines go, code stays.
    KeepCodeStripGuards,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureDirectiveList {
    pub removals: Vec<String>,
    pub mode: RemovalMode,
}

impl FeatureDirectiveList {
    pub fn new<I, S>(ids: I, mode: RemovalMode) -> Result<Self, ReconfigError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut removals: Vec<String> = Vec::new();
        for id in ids {
            let id = id.into();
            if !lexer::is_identifier(&id) {
                return Err(ReconfigError::InvalidIdentifier(id));
            }
            if !removals.contains(&id) {
                removals.push(id);
            }
        }
        Ok(FeatureDirectiveList { removals, mode })
    }

    /// Parses the features file: one identifier per line, `#` comments.
    pub fn parse(text: &str, mode: RemovalMode) -> Result<Self, ReconfigError> {
        let ids = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string);
        Self::new(ids, mode)
    }
}

#[derive(Debug, Clone)]
pub struct Reconfigured {
    pub project: ProjectModel,
    pub warnings: Vec<Warning>,
}

/// How a conditional block on a given identifier is handled.
#[derive(Clone, Copy)]
enum Decision {
    /// Leave guard lines in place.
    Keep,
    /// Resolve with the identifier defined or not.
    Resolve { defined: bool },
}

struct Frame {
    decision: Decision,
    /// Whether the first branch is the one retained (for resolved blocks).
    first_taken: bool,
    in_else: bool,
    line: u32,
}

impl Frame {
    fn branch_active(&self) -> bool {
        match self.decision {
            Decision::Keep => true,
            Decision::Resolve { .. } => self.first_taken != self.in_else,
        }
    }
}

/// Rewrites one file. Returns the new text and the identifiers of every
/// conditional block encountered.
fn rewrite(
    file: &str,
    text: &str,
    decide: &dyn Fn(&str) -> Decision,
) -> Result<(String, BTreeSet<String>), ReconfigError> {
    let mut out = String::with_capacity(text.len());
    let mut stack: Vec<Frame> = Vec::new();
    let mut seen = BTreeSet::new();
    let unbalanced = |line| ReconfigError::UnbalancedDirective { file: file.to_string(), line };

    for (idx, line) in text.split_inclusive('\n').enumerate() {
        let lineno = idx as u32 + 1;
        let active = stack.iter().all(Frame::branch_active);
        let trimmed = line.trim_start();
        if !trimmed.starts_with('#') {
            if active {
                out.push_str(line);
            }
            continue;
        }
        let (word, rest) = directive_parts(trimmed);
        match word.as_str() {
            "ifdef" | "ifndef" => {
                let id = rest.split_whitespace().next().unwrap_or("").to_string();
                seen.insert(id.clone());
                let decision = decide(&id);
                let first_taken = match decision {
                    Decision::Keep => true,
                    Decision::Resolve { defined } => defined == (word == "ifdef"),
                };
                if active && matches!(decision, Decision::Keep) {
                    out.push_str(line);
                }
                stack.push(Frame { decision, first_taken, in_else: false, line: lineno });
            }
            "if" => {
                if active {
                    out.push_str(line);
                }
                stack.push(Frame { decision: Decision::Keep, first_taken: true, in_else: false, line: lineno });
            }
            "elif" => {
                let frame = stack.last().ok_or_else(|| unbalanced(lineno))?;
                if !matches!(frame.decision, Decision::Keep) {
                    return Err(ReconfigError::UnsupportedElif { file: file.to_string(), line: lineno });
                }
                if stack[..stack.len() - 1].iter().all(Frame::branch_active) {
                    out.push_str(line);
                }
            }
            "else" => {
                let frame = stack.last_mut().ok_or_else(|| unbalanced(lineno))?;
                if frame.in_else {
                    return Err(unbalanced(lineno));
                }
                frame.in_else = true;
                let keep_line = matches!(frame.decision, Decision::Keep);
                if keep_line && stack[..stack.len() - 1].iter().all(Frame::branch_active) {
                    out.push_str(line);
                }
            }
            "endif" => {
                let frame = stack.pop().ok_or_else(|| unbalanced(lineno))?;
                if matches!(frame.decision, Decision::Keep) && stack.iter().all(Frame::branch_active) {
                    out.push_str(line);
                }
            }
            _ => {
                if active {
                    out.push_str(line);
                }
            }
        }
    }
    if let Some(frame) = stack.first() {
        return Err(unbalanced(frame.line));
    }
    Ok((out, seen))
}

/// Removes the listed features from raw units, before parsing.
pub fn remove_features_units(
    units: &[SourceUnit],
    list: &FeatureDirectiveList,
) -> Result<(Vec<SourceUnit>, Vec<Warning>), ReconfigError> {
    let defined = list.mode == RemovalMode::KeepCodeStripGuards;
    let decide = |id: &str| {
        if list.removals.iter().any(|r| r == id) {
            Decision::Resolve { defined }
        } else {
            Decision::Keep
        }
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(units.len());
    for u in units {
        let (text, ids) = rewrite(&u.path, &u.text, &decide)?;
        seen.extend(ids);
        out.push(SourceUnit { text, ..u.clone() });
    }
    let warnings = list
        .removals
        .iter()
        .filter(|id| !seen.contains(*id))
        .map(|id| Warning::UnknownFeature(id.clone()))
        .collect();
    Ok((out, warnings))
}

/// Resolves every conditional block on raw units: blocks on `enabled`
/// identifiers keep their code, all others lose it.
pub fn strip_dead_directives_units(
    units: &[SourceUnit],
    enabled: &BTreeSet<String>,
) -> Result<Vec<SourceUnit>, ReconfigError> {
    let decide = |id: &str| Decision::Resolve { defined: enabled.contains(id) };
    units
        .iter()
        .map(|u| {
            let (text, _) = rewrite(&u.path, &u.text, &decide)?;
            Ok(SourceUnit { text, ..u.clone() })
        })
        .collect()
}

pub fn remove_features(project: &ProjectModel, list: &FeatureDirectiveList) -> Result<Reconfigured, ReconfigError> {
    let (units, warnings) = remove_features_units(&project.units, list)?;
    let project = ProjectModel::from_units(&project.root, units)?;
    Ok(Reconfigured { project, warnings })
}

pub fn strip_dead_directives(project: &ProjectModel, enabled: &BTreeSet<String>) -> Result<ProjectModel, ReconfigError> {
    let units = strip_dead_directives_units(&project.units, enabled)?;
    Ok(ProjectModel::from_units(&project.root, units)?)
}

/// Loads a directory, strips conditional directives, then parses.
pub fn load_prepared(root: &Path, enabled: &BTreeSet<String>) -> Result<ProjectModel, crate::Error> {
    let units = crate::frontend::project_units(root)?;
    let units = strip_dead_directives_units(&units, enabled)?;
    Ok(ProjectModel::from_units(root, units)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ElementKind;
    use proptest::prelude::*;

    fn project(text: &str) -> ProjectModel {
        ProjectModel::from_units(Path::new("."), vec![SourceUnit::new("a.c", text)]).unwrap()
    }

    fn remove(text: &str, ids: &[&str]) -> (String, Vec<Warning>) {
        let list = FeatureDirectiveList::new(ids.iter().copied(), RemovalMode::DeleteGuardedCode).unwrap();
        let r = remove_features(&project(text), &list).unwrap();
        (r.project.units[0].text.clone(), r.warnings)
    }

    #[test]
    fn single_guard_deletion() {
        assert_eq!(remove("#ifdef FEAT_A\nint a;\n#endif\nint b;", &["FEAT_A"]).0, "int b;");
    }

    #[test]
    fn empty_list_is_identity() {
        let src = "#ifdef FEAT_A\nint a;\n#endif\nint b;";
        assert_eq!(remove(src, &[]).0, src);
    }

    #[test]
    fn else_branch_is_retained() {
        assert_eq!(remove("#ifdef FEAT_A\nint a;\n#else\nint c;\n#endif", &["FEAT_A"]).0, "int c;\n");
    }

    #[test]
    fn ifndef_keeps_its_branch_when_removed() {
        assert_eq!(remove("#ifndef FEAT_A\nint a;\n#else\nint c;\n#endif\n", &["FEAT_A"]).0, "int a;\n");
    }

    #[test]
    fn keep_code_mode_strips_guard_lines() {
        let list = FeatureDirectiveList::new(["A"], RemovalMode::KeepCodeStripGuards).unwrap();
        let r = remove_features(&project("#ifdef A\nint a;\n#else\nint b;\n#endif\nint c;\n"), &list).unwrap();
        assert_eq!(r.project.units[0].text, "int a;\nint c;\n");
    }

    #[test]
    fn unknown_feature_is_a_warning() {
        let (text, warnings) = remove("int b;\n", &["NOPE"]);
        assert_eq!(text, "int b;\n");
        assert_eq!(warnings, vec![Warning::UnknownFeature("NOPE".into())]);
    }

    #[test]
    fn untouched_blocks_keep_guards_but_nested_removals_apply() {
        let src = "#ifdef KEEP\nint k;\n#ifdef DROP\nint d;\n#endif\n#endif\n";
        assert_eq!(remove(src, &["DROP"]).0, "#ifdef KEEP\nint k;\n#endif\n");
    }

    #[test]
    fn strip_all_enabled() {
        let src = "#ifdef A\nint a;\n#endif\n#ifdef B\nint b;\n#endif\n#ifdef C\nint c;\n#endif\n";
        let enabled: BTreeSet<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let p = strip_dead_directives(&project(src), &enabled).unwrap();
        assert_eq!(p.units[0].text, "int a;\nint b;\nint c;\n");
        assert!(p.asts[0].elements.iter().all(|e| e.kind() != ElementKind::ConditionalDirectiveBlock));
    }

    #[test]
    fn strip_nested_inner_disabled() {
        let src = "#ifdef B\nint b1;\n#ifdef A\nint a;\n#endif\nint b2;\n#endif\n";
        let enabled: BTreeSet<String> = ["B".to_string()].into();
        let p = strip_dead_directives(&project(src), &enabled).unwrap();
        assert_eq!(p.units[0].text, "int b1;\nint b2;\n");
    }

    #[test]
    fn strip_on_guard_free_file_is_identity() {
        let src = "int x = 1;\n/* c */\nint f(void) { return x; }\n";
        let p = strip_dead_directives(&project(src), &BTreeSet::new()).unwrap();
        assert_eq!(p.units[0].text, src);
    }

    #[test]
    fn unbalanced_input_is_reported() {
        let units = vec![SourceUnit::new("x.c", "int a;\n#endif\n")];
        let err = strip_dead_directives_units(&units, &BTreeSet::new()).unwrap_err();
        assert_eq!(err, ReconfigError::UnbalancedDirective { file: "x.c".into(), line: 2 });
        let units = vec![SourceUnit::new("x.c", "#ifdef A\nint a;\n")];
        let err = strip_dead_directives_units(&units, &BTreeSet::new()).unwrap_err();
        assert_eq!(err, ReconfigError::UnbalancedDirective { file: "x.c".into(), line: 1 });
    }

    #[test]
    fn features_file_format() {
        let list = FeatureDirectiveList::parse("# features\nFEAT_A\n\nFEAT_B # trailing\nFEAT_A\n", RemovalMode::DeleteGuardedCode)
            .unwrap();
        assert_eq!(list.removals, ["FEAT_A", "FEAT_B"]);
        assert!(FeatureDirectiveList::parse("9bad\n", RemovalMode::DeleteGuardedCode).is_err());
    }

    fn guarded_source() -> impl Strategy<Value = (String, Vec<String>)> {
        let ids = ["A", "B", "C"];
        let block = (0usize..3, proptest::bool::ANY, proptest::bool::ANY, 0u8..20);
        proptest::collection::vec(block, 0..8).prop_map(move |blocks| {
            let mut text = String::new();
            for (i, (id, neg, with_else, n)) in blocks.iter().enumerate() {
                let kw = if *neg { "ifndef" } else { "ifdef" };
                text.push_str(&format!("#{kw} {}\nint v{i}_{n};\n", ids[*id]));
                if *with_else {
                    text.push_str(&format!("#else\nint w{i};\n"));
                }
                text.push_str("#endif\nint plain");
                text.push_str(&i.to_string());
                text.push_str(";\n");
            }
            (text, ids.iter().map(|s| s.to_string()).collect())
        })
    }

    proptest! {
        #[test]
        fn removal_never_grows_and_reparses((src, ids) in guarded_source(), mask in 0u8..8) {
            let chosen: Vec<&String> = ids.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| s).collect();
            for mode in [RemovalMode::DeleteGuardedCode, RemovalMode::KeepCodeStripGuards] {
                let list = FeatureDirectiveList::new(chosen.iter().map(|s| s.as_str()), mode).unwrap();
                let r = remove_features(&project(&src), &list).unwrap();
                prop_assert!(r.project.units[0].text.len() <= src.len());
            }
            let enabled: BTreeSet<String> = chosen.iter().map(|s| s.to_string()).collect();
            let p = strip_dead_directives(&project(&src), &enabled).unwrap();
            prop_assert!(p.units[0].text.len() <= src.len());
            prop_assert!(!p.units[0].text.contains('#'));
        }
    }
}
