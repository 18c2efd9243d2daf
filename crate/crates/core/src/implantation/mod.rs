//! Implanting an adapted organ into a product base.
//!
//! Each organ element is compared against the host elements visible from
//! the file it is placed in. Elements the host already has are discarded,
//! same-signature functions with differing bodies are merged behind a
//! feature guard, everything else is grafted. Edits are made on the text so
//! untouched host bytes stay as they were.

mod clones;
mod edit;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clones::{detect_clones, host_qualified};

use crate::adaptation::{HostContext, Organ};
use crate::frontend::{ParseError, ProjectModel};
use crate::sandbox::{BuildCommand, BuildError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Graft,
    Discard,
    Merge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Line,
    Ast,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneDecision {
    pub organ_element: String,
    /// Host file the element is placed in.
    pub file: String,
    pub host_element: Option<String>,
    pub verdict: Verdict,
    pub phase: Option<Phase>,
    /// For merges: `-` host statements, `+` organ statements.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diff: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneReport {
    pub decisions: Vec<CloneDecision>,
    /// Host elements, grafted by earlier implants, that this organ shares.
    pub connection_points: Vec<String>,
}

impl CloneReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.decisions.iter().filter(|d| d.verdict == verdict).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplantRecord {
    pub feature_id: String,
    pub report: CloneReport,
    pub flag: Option<String>,
    /// Host elements this implant added.
    pub grafted: Vec<String>,
    /// Macros that must be defined for merged organ bodies to be active.
    pub defines: Vec<String>,
}

/// A product base together with the log of implants applied to it.
#[derive(Debug, Clone)]
pub struct PostoperativeProject {
    pub project: ProjectModel,
    pub implant_log: Vec<ImplantRecord>,
}

impl PostoperativeProject {
    pub fn new(project: ProjectModel) -> Self {
        PostoperativeProject { project, implant_log: Vec::new() }
    }

    /// Macros the product is built with: guards of unflagged merges.
    pub fn defines(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.implant_log.iter().flat_map(|r| &r.defines).collect();
        set.into_iter().cloned().collect()
    }

    /// Every element this project received from implants.
    pub fn grafted(&self) -> BTreeSet<&str> {
        self.implant_log.iter().flat_map(|r| r.grafted.iter().map(String::as_str)).collect()
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        self.project.write_to(dir)
    }
}

#[derive(Debug, Error)]
pub enum ImplantError {
    #[error("signature conflict on `{name}`: organ {organ} vs host {host}")]
    SignatureConflict { name: String, organ: String, host: String },
    #[error("insertion marker /*@transplant:{0}*/ not found")]
    MarkerNotFound(String),
    #[error("insertion marker /*@transplant:{marker}*/ occurs {count} times")]
    MarkerAmbiguous { marker: String, count: usize },
    #[error("product does not build after implant:\n{0}")]
    BuildFailedAfterImplant(String),
    #[error("implanted code does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Build(BuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The text of an insertion marker.
pub fn marker_text(id: &str) -> String {
    format!("/*@transplant:{id}*/")
}

/// Macro guarding implanted code: `FEATURE_<id>` with non-identifier
/// characters replaced.
pub fn feature_macro(id: &str) -> String {
    let clean: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    format!("FEATURE_{clean}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerSite {
    pub file: String,
    /// 1-based line of the marker.
    pub line: u32,
    /// Byte range of the whole line, newline included.
    pub start: usize,
    pub end: usize,
    pub indent: String,
}

/// Lines consisting of the marker alone, across all files.
pub fn find_markers(project: &ProjectModel, id: &str) -> Vec<MarkerSite> {
    let marker = marker_text(id);
    let mut out = Vec::new();
    for unit in &project.units {
        let mut offset = 0;
        for (i, line) in unit.text.split_inclusive('\n').enumerate() {
            if line.trim() == marker {
                let indent: String = line.chars().take_while(|c| *c == ' ' || *c == '\t').collect();
                out.push(MarkerSite {
                    file: unit.path.clone(),
                    line: i as u32 + 1,
                    start: offset,
                    end: offset + line.len(),
                    indent,
                });
            }
            offset += line.len();
        }
    }
    out
}

pub fn locate_marker(project: &ProjectModel, id: &str) -> Result<MarkerSite, ImplantError> {
    let mut sites = find_markers(project, id);
    match sites.len() {
        0 => Err(ImplantError::MarkerNotFound(id.to_string())),
        1 => Ok(sites.remove(0)),
        count => Err(ImplantError::MarkerAmbiguous { marker: id.to_string(), count }),
    }
}

/// Implants `organ` at the context's marker. With a flag, all implanted
/// code is guarded by `FEATURE_<flag>`.
///
/// When `build` is given the result must compile (with and without the
/// flag); otherwise `host` is returned to the caller untouched, since the
/// new project is assembled on a copy.
pub fn implant(
    organ: &Organ,
    host: &PostoperativeProject,
    ctx: &HostContext,
    flag: Option<&str>,
    build: Option<&BuildCommand>,
) -> Result<PostoperativeProject, ImplantError> {
    let report = detect_clones(organ, host)?;
    let (project, grafted, defines) = edit::apply(organ, host, ctx, &report, flag)?;
    let mut out = PostoperativeProject { project, implant_log: host.implant_log.clone() };
    out.implant_log.push(ImplantRecord {
        feature_id: organ.feature_id.clone(),
        report,
        flag: flag.map(str::to_string),
        grafted,
        defines,
    });
    if let Some(cmd) = build {
        check_builds(&out, cmd, flag)?;
    }
    Ok(out)
}

/// Builds the product in a scratch directory, once per flag state.
pub fn check_builds(post: &PostoperativeProject, cmd: &BuildCommand, flag: Option<&str>) -> Result<(), ImplantError> {
    let base = post.defines();
    let mut variants = vec![base.clone()];
    if let Some(f) = flag {
        let mut with = base;
        with.push(feature_macro(f));
        variants.push(with);
    }
    for defines in variants {
        let dir = tempfile::tempdir()?;
        match cmd.build_project(&post.project, dir.path(), &defines) {
            Ok(_) => {}
            Err(BuildError::Failed(msg)) => return Err(ImplantError::BuildFailedAfterImplant(msg)),
            Err(e) => return Err(ImplantError::Build(e)),
        }
    }
    Ok(())
}
