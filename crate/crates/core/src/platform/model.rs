use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::PlatformError;
use crate::frontend::lexer::is_identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Mandatory,
    Optional,
    /// Member of the alternative group formed by its siblings of this kind.
    Alternative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub id: String,
    pub parent: Option<String>,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Constraint {
    Requires { from: String, to: String },
    Excludes { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub donor: String,
    pub entry_point: String,
}

/// Feature tree with cross-tree constraints, annotated with the donor
/// entry point implementing each transplantable feature.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub features: Vec<Feature>,
    #[serde(default)]
    pub cross_tree: Vec<Constraint>,
    #[serde(default)]
    pub annotations: BTreeMap<String, Annotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum Violation {
    MandatoryMissing { parent: String, child: String },
    Requires { from: String, to: String },
    Excludes { a: String, b: String },
    MultipleAlternatives { parent: String, selected: Vec<String> },
}

impl FeatureModel {
    pub fn feature(&self, id: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.id == id)
    }

    /// Checks the structural invariants: unique ids, one root, parents
    /// exist and form a tree, constraints and annotations name known
    /// features, entry points are identifiers.
    pub fn check(&self) -> Result<(), PlatformError> {
        let bad = |m: String| Err(PlatformError::InvalidModel(m));
        let ids: BTreeSet<&str> = self.features.iter().map(|f| f.id.as_str()).collect();
        if ids.len() != self.features.len() {
            return bad("duplicate feature id".into());
        }
        let roots = self.features.iter().filter(|f| f.parent.is_none()).count();
        if !self.features.is_empty() && roots != 1 {
            return bad(format!("expected one root, found {roots}"));
        }
        for f in &self.features {
            let mut seen = BTreeSet::from([f.id.as_str()]);
            let mut cur = f.parent.as_deref();
            while let Some(p) = cur {
                if !ids.contains(p) {
                    return bad(format!("{}: unknown parent {p}", f.id));
                }
                if !seen.insert(p) {
                    return bad(format!("{}: parent cycle", f.id));
                }
                cur = self.feature(p).and_then(|x| x.parent.as_deref());
            }
        }
        for c in &self.cross_tree {
            let (x, y) = match c {
                Constraint::Requires { from, to } => (from, to),
                Constraint::Excludes { a, b } => (a, b),
            };
            for id in [x, y] {
                if !ids.contains(id.as_str()) {
                    return Err(PlatformError::UnknownFeature(id.clone()));
                }
            }
        }
        for (id, a) in &self.annotations {
            if !ids.contains(id.as_str()) {
                return Err(PlatformError::UnknownFeature(id.clone()));
            }
            if !is_identifier(&a.entry_point) {
                return bad(format!("{id}: entry point {:?} is not an identifier", a.entry_point));
            }
        }
        Ok(())
    }

    /// Every constraint the selection violates, in a canonical order.
    pub fn validate_configuration(&self, selected: &BTreeSet<String>) -> Result<Vec<Violation>, PlatformError> {
        for id in selected {
            if self.feature(id).is_none() {
                return Err(PlatformError::UnknownFeature(id.clone()));
            }
        }
        let mut out = Vec::new();
        let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for f in &self.features {
            let Some(parent) = &f.parent else { continue };
            match f.kind {
                FeatureKind::Mandatory if selected.contains(parent) && !selected.contains(&f.id) => {
                    out.push(Violation::MandatoryMissing { parent: parent.clone(), child: f.id.clone() });
                }
                FeatureKind::Alternative if selected.contains(&f.id) => {
                    groups.entry(parent.as_str()).or_default().push(f.id.clone());
                }
                _ => {}
            }
        }
        for (parent, mut members) in groups {
            if members.len() > 1 {
                members.sort();
                out.push(Violation::MultipleAlternatives { parent: parent.to_string(), selected: members });
            }
        }
        for c in &self.cross_tree {
            match c {
                Constraint::Requires { from, to } if selected.contains(from) && !selected.contains(to) => {
                    out.push(Violation::Requires { from: from.clone(), to: to.clone() });
                }
                Constraint::Excludes { a, b } if selected.contains(a) && selected.contains(b) => {
                    out.push(Violation::Excludes { a: a.clone(), b: b.clone() });
                }
                _ => {}
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}
