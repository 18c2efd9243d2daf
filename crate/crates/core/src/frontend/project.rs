use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{parse_file, Ast, Element, ElementKind, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Header,
    Implementation,
}

/// Raw text of one project file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    /// Relative, forward-slash separated.
    pub path: String,
    pub text: String,
    pub kind: UnitKind,
}

impl SourceUnit {
    /// Builds a unit, normalizing CRLF line endings to LF.
    pub fn new(path: impl Into<String>, text: &str) -> Self {
        let path = path.into().replace('\\', "/");
        let kind = if path.ends_with(".h") { UnitKind::Header } else { UnitKind::Implementation };
        SourceUnit { path, text: text.replace("\r\n", "\n"), kind }
    }
}

/// A parsed multi-file codebase. Units are kept sorted by path and
/// `asts[i]` is the parse of `units[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectModel {
    pub root: PathBuf,
    pub units: Vec<SourceUnit>,
    pub asts: Vec<Ast>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Reads every `.c`/`.h` file under `root`, sorted by relative path.
pub fn read_units(root: &Path) -> Result<Vec<SourceUnit>, LoadError> {
    let mut units = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| LoadError::Io {
            path: root.to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| io::Error::other("walk error")),
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str());
        if !matches!(ext, Some("c") | Some("h")) {
            continue;
        }
        let bytes = fs::read(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
        let text = String::from_utf8(bytes).map_err(|e| LoadError::Io {
            path: path.to_path_buf(),
            source: io::Error::new(io::ErrorKind::InvalidData, e),
        })?;
        let rel = path.strip_prefix(root).unwrap_or(path);
        let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        units.push(SourceUnit::new(rel.join("/"), &text));
    }
    units.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(units)
}

impl ProjectModel {
    pub fn load(root: &Path) -> Result<Self, LoadError> {
        let units = read_units(root)?;
        Ok(Self::from_units(root, units)?)
    }

    /// Parses units in parallel. Units are re-sorted by path.
    pub fn from_units(root: &Path, mut units: Vec<SourceUnit>) -> Result<Self, ParseError> {
        units.sort_by(|a, b| a.path.cmp(&b.path));
        units.dedup_by(|a, b| a.path == b.path);
        let asts = units.par_iter().map(|u| parse_file(&u.path, &u.text)).collect::<Result<Vec<_>, _>>()?;
        Ok(ProjectModel { root: root.to_path_buf(), units, asts })
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.units.iter().map(|u| u.path.as_str())
    }

    pub fn index_of(&self, path: &str) -> Option<usize> {
        self.units.binary_search_by(|u| u.path.as_str().cmp(path)).ok()
    }

    pub fn ast(&self, path: &str) -> Option<&Ast> {
        self.index_of(path).map(|i| &self.asts[i])
    }

    pub fn text(&self, path: &str) -> Option<&str> {
        self.index_of(path).map(|i| self.units[i].text.as_str())
    }

    /// Replaces (or adds) a file's text and re-parses it.
    pub fn set_text(&mut self, path: &str, text: &str) -> Result<(), ParseError> {
        let unit = SourceUnit::new(path, text);
        let ast = parse_file(&unit.path, &unit.text)?;
        match self.units.binary_search_by(|u| u.path.as_str().cmp(&unit.path)) {
            Ok(i) => {
                self.units[i] = unit;
                self.asts[i] = ast;
            }
            Err(i) => {
                self.units.insert(i, unit);
                self.asts.insert(i, ast);
            }
        }
        Ok(())
    }

    /// Re-prints every AST into its unit text.
    pub fn sync_text(&mut self) {
        for (unit, ast) in self.units.iter_mut().zip(&self.asts) {
            unit.text = ast.print();
        }
    }

    /// Writes all units below `dir`, creating directories as needed.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        for (unit, ast) in self.units.iter().zip(&self.asts) {
            let dest = dir.join(&unit.path);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(dest, ast.print())?;
        }
        Ok(())
    }

    /// Relative paths of implementation files, sorted.
    pub fn c_files(&self) -> Vec<String> {
        self.units.iter().filter(|u| u.kind == UnitKind::Implementation).map(|u| u.path.clone()).collect()
    }

    /// All (file, element) pairs, including elements nested in conditionals.
    pub fn elements(&self) -> Vec<(&str, &Element)> {
        self.asts.iter().flat_map(|a| a.all_elements().into_iter().map(move |e| (a.path.as_str(), e))).collect()
    }

    /// Function definitions by name, in path order.
    pub fn function_definitions(&self, name: &str) -> Vec<(&str, &Element)> {
        self.elements()
            .into_iter()
            .filter(|(_, e)| e.kind() == ElementKind::FunctionDefinition && e.name.as_deref() == Some(name))
            .collect()
    }

    /// Typedef name → aliased type, across the whole project.
    pub fn typedefs(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for (_, e) in self.elements() {
            if let super::Detail::Type(t) = &e.detail {
                for (name, ty) in &t.aliases {
                    out.insert(name.clone(), ty.clone());
                }
            }
        }
        out
    }

    /// Headers a file includes, transitively, restricted to project files.
    pub fn included_headers(&self, path: &str) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        let mut stack = vec![path.to_string()];
        while let Some(p) = stack.pop() {
            let Some(ast) = self.ast(&p) else { continue };
            for e in ast.all_elements() {
                if let super::Detail::Include { target, system: false } = &e.detail {
                    if let Some(resolved) = self.resolve_include(&p, target) {
                        if !seen.contains(&resolved) && resolved != path {
                            seen.push(resolved.clone());
                            stack.push(resolved);
                        }
                    }
                }
            }
        }
        seen.sort();
        seen
    }

    /// Resolves a quoted include relative to the including file, then to
    /// the project root.
    pub fn resolve_include(&self, from: &str, target: &str) -> Option<String> {
        let dir = from.rsplit_once('/').map(|(d, _)| d).unwrap_or("");
        let candidate = if dir.is_empty() { target.to_string() } else { format!("{dir}/{target}") };
        let candidate = normalize_path(&candidate);
        if self.index_of(&candidate).is_some() {
            return Some(candidate);
        }
        let rooted = normalize_path(target);
        self.index_of(&rooted).map(|_| rooted)
    }

    /// Resolves a type spelling through typedefs until it stops changing.
    pub fn resolve_type(&self, ty: &str) -> String {
        resolve_type_with(&self.typedefs(), ty)
    }
}

/// Resolves the leading type name of `ty` through `typedefs`.
pub fn resolve_type_with(typedefs: &BTreeMap<String, String>, ty: &str) -> String {
    let mut current = ty.to_string();
    for _ in 0..16 {
        let head_len = current.find(['*', '[']).unwrap_or(current.len());
        let (head, tail) = current.split_at(head_len);
        let words: Vec<&str> = head.split(' ').collect();
        let Some(last) = words.last() else { break };
        match typedefs.get(*last) {
            Some(target) if target != *last => {
                let mut prefix: Vec<&str> = words[..words.len() - 1].to_vec();
                prefix.push(target);
                current = format!("{}{}", prefix.join(" "), tail);
            }
            _ => break,
        }
    }
    current
}

fn normalize_path(p: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for seg in p.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    parts.join("/")
}
