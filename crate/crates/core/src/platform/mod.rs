//! The transplantation platform: an on-disk repository of over-organs,
//! product bases, ice-box suites and the annotated feature model.
//!
//! ```text
//! platform/
//!   feature-model.json
//!   over-organs/<id>/    manifest.json, over-organ.json, donor-relative sources
//!   product-bases/<id>/  manifest.json, src/..., tests/...
//!   icebox/<id>/         manifest.json, suite.json, data/...
//! ```
//!
//! Every artifact is written to a temporary sibling directory and renamed
//! into place, so a crash leaves either nothing or a complete artifact.

mod model;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::extractor::OverOrgan;
use crate::frontend::{ProjectModel, SourceUnit};
use crate::suite::TestSuite;

pub use model::{Annotation, Constraint, Feature, FeatureKind, FeatureModel, Violation};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum PlatformError {
    #[error("platform not initialized at {0}")]
    NotInitialized(PathBuf),
    #[error("digest mismatch in {0}")]
    DigestMismatch(String),
    #[error("missing artifact {0}")]
    MissingArtifact(String),
    #[error("feature {0} already stored (use --force to replace)")]
    DuplicateFeatureId(String),
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("invalid feature model: {0}")]
    InvalidModel(String),
    #[error("corrupt artifact {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> PlatformError + '_ {
    move |source| PlatformError::Io { path: path.to_path_buf(), source }
}

/// Serializes with sorted object keys and a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> io::Result<String> {
    let v = serde_json::to_value(value).map_err(io::Error::other)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(io::Error::other)?;
    s.push('\n');
    Ok(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransplantManifest {
    pub feature_id: String,
    pub donor_id: String,
    pub entry_point: String,
    pub files: Vec<FileDigest>,
    pub boundary_symbols: Vec<String>,
    pub icebox_suite_ref: Option<String>,
    pub created_at: String,
    pub tool_version: String,
}

/// Manifest of a product base or ice-box suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub id: String,
    pub kind: String,
    pub files: Vec<FileDigest>,
    #[serde(default)]
    pub insertion_points: Vec<InsertionPoint>,
    pub created_at: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertionPoint {
    pub feature: String,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRow {
    pub kind: String,
    pub id: String,
    pub files: usize,
    pub created_at: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    OverOrgan,
    ProductBase,
    Icebox,
}

impl Kind {
    fn dir(self) -> &'static str {
        match self {
            Kind::OverOrgan => "over-organs",
            Kind::ProductBase => "product-bases",
            Kind::Icebox => "icebox",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Platform {
    root: PathBuf,
}

/// Exclusive advisory lock on one artifact directory, released on drop.
struct Lock(File);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

impl Platform {
    /// Creates the layout if missing and returns the opened platform.
    pub fn init(root: &Path) -> Result<Self, PlatformError> {
        for k in [Kind::OverOrgan, Kind::ProductBase, Kind::Icebox] {
            let d = root.join(k.dir());
            fs::create_dir_all(&d).map_err(io_at(&d))?;
        }
        let p = Platform { root: root.to_path_buf() };
        if !p.model_path().exists() {
            p.save_feature_model(&FeatureModel::default())?;
        }
        Ok(p)
    }

    pub fn open(root: &Path) -> Result<Self, PlatformError> {
        if !root.join("feature-model.json").is_file() {
            return Err(PlatformError::NotInitialized(root.to_path_buf()));
        }
        Ok(Platform { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn model_path(&self) -> PathBuf {
        self.root.join("feature-model.json")
    }

    pub fn feature_model(&self) -> Result<FeatureModel, PlatformError> {
        let path = self.model_path();
        let text = fs::read_to_string(&path).map_err(io_at(&path))?;
        serde_json::from_str(&text)
            .map_err(|e| PlatformError::Corrupt { path: "feature-model.json".into(), message: e.to_string() })
    }

    pub fn save_feature_model(&self, model: &FeatureModel) -> Result<(), PlatformError> {
        model.check()?;
        let path = self.model_path();
        let text = to_sorted_json(model).map_err(io_at(&path))?;
        let tmp = self.root.join(".feature-model.json.tmp");
        fs::write(&tmp, text).map_err(io_at(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_at(&path))
    }

    fn artifact_dir(&self, kind: Kind, id: &str) -> PathBuf {
        self.root.join(kind.dir()).join(id)
    }

    fn lock(&self, kind: Kind, id: &str) -> Result<Lock, PlatformError> {
        let path = self.root.join(kind.dir()).join(format!(".{id}.lock"));
        let f = File::create(&path).map_err(io_at(&path))?;
        f.lock().map_err(io_at(&path))?;
        Ok(Lock(f))
    }

    /// Writes `files` (plus a manifest built from their digests) as the
    /// artifact `id`. `hook` is called before each file is written and may
    /// abort the store.
    fn store<M: Serialize>(
        &self,
        kind: Kind,
        id: &str,
        files: &[(String, Vec<u8>)],
        force: bool,
        manifest: impl FnOnce(Vec<FileDigest>) -> M,
        hook: &mut dyn FnMut(usize) -> io::Result<()>,
    ) -> Result<PathBuf, PlatformError> {
        let base = self.root.join(kind.dir());
        if !base.is_dir() {
            return Err(PlatformError::NotInitialized(self.root.clone()));
        }
        let _lock = self.lock(kind, id)?;
        let dest = self.artifact_dir(kind, id);
        if dest.exists() && !force {
            return Err(PlatformError::DuplicateFeatureId(id.to_string()));
        }
        // leftovers of an interrupted store
        let tmp = base.join(format!(".tmp-{id}"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(io_at(&tmp))?;
        }
        fs::create_dir_all(&tmp).map_err(io_at(&tmp))?;
        let mut digests = Vec::new();
        for (i, (rel, bytes)) in files.iter().enumerate() {
            hook(i).map_err(io_at(&tmp))?;
            let path = tmp.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io_at(parent))?;
            }
            fs::write(&path, bytes).map_err(io_at(&path))?;
            digests.push(FileDigest { path: rel.clone(), sha256: sha256_hex(bytes) });
        }
        let m = manifest(digests);
        let mpath = tmp.join("manifest.json");
        fs::write(&mpath, to_sorted_json(&m).map_err(io_at(&mpath))?).map_err(io_at(&mpath))?;
        if dest.exists() {
            let old = base.join(format!(".old-{id}"));
            if old.exists() {
                fs::remove_dir_all(&old).map_err(io_at(&old))?;
            }
            fs::rename(&dest, &old).map_err(io_at(&dest))?;
            fs::rename(&tmp, &dest).map_err(io_at(&dest))?;
            fs::remove_dir_all(&old).map_err(io_at(&old))?;
        } else {
            fs::rename(&tmp, &dest).map_err(io_at(&dest))?;
        }
        Ok(dest.join("manifest.json"))
    }

    fn read_manifest<M: for<'de> Deserialize<'de>>(&self, kind: Kind, id: &str) -> Result<M, PlatformError> {
        let dir = self.artifact_dir(kind, id);
        let path = dir.join("manifest.json");
        if !path.is_file() {
            return Err(PlatformError::MissingArtifact(format!("{}/{id}", kind.dir())));
        }
        let text = fs::read_to_string(&path).map_err(io_at(&path))?;
        serde_json::from_str(&text).map_err(|e| PlatformError::Corrupt {
            path: format!("{}/{id}/manifest.json", kind.dir()),
            message: e.to_string(),
        })
    }

    /// Reads every listed file, checking its digest.
    fn read_verified(&self, kind: Kind, id: &str, files: &[FileDigest]) -> Result<BTreeMap<String, Vec<u8>>, PlatformError> {
        let dir = self.artifact_dir(kind, id);
        let mut out = BTreeMap::new();
        for f in files {
            let path = dir.join(&f.path);
            let bytes = fs::read(&path).map_err(|_| PlatformError::MissingArtifact(format!("{}/{id}/{}", kind.dir(), f.path)))?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(PlatformError::DigestMismatch(format!("{}/{id}/{}", kind.dir(), f.path)));
            }
            out.insert(f.path.clone(), bytes);
        }
        Ok(out)
    }

    pub fn has_over_organ(&self, id: &str) -> bool {
        self.artifact_dir(Kind::OverOrgan, id).join("manifest.json").is_file()
    }

    /// Stores an over-organ: its files under the donor-relative paths,
    /// `over-organ.json`, and the manifest.
    pub fn store_over_organ(
        &self,
        organ: &OverOrgan,
        icebox_ref: Option<&str>,
        force: bool,
    ) -> Result<PathBuf, PlatformError> {
        self.store_over_organ_with(organ, icebox_ref, force, &mut |_| Ok(()))
    }

    pub(crate) fn store_over_organ_with(
        &self,
        organ: &OverOrgan,
        icebox_ref: Option<&str>,
        force: bool,
        hook: &mut dyn FnMut(usize) -> io::Result<()>,
    ) -> Result<PathBuf, PlatformError> {
        if let Some(r) = icebox_ref {
            self.read_manifest::<ArtifactManifest>(Kind::Icebox, r)?;
        }
        let mut files: Vec<(String, Vec<u8>)> =
            organ.render_files().into_iter().map(|(p, t)| (p, t.into_bytes())).collect();
        let json = to_sorted_json(organ).map_err(io_at(&self.root))?;
        files.push(("over-organ.json".into(), json.into_bytes()));
        let manifest = |digests| TransplantManifest {
            feature_id: organ.feature_id.clone(),
            donor_id: organ.donor_id.clone(),
            entry_point: organ.entry_point.clone(),
            files: digests,
            boundary_symbols: organ.boundary_symbols.clone(),
            icebox_suite_ref: icebox_ref.map(|r| format!("icebox/{r}")),
            created_at: now(),
            tool_version: TOOL_VERSION.into(),
        };
        self.store(Kind::OverOrgan, &organ.feature_id, &files, force, manifest, hook)
    }

    pub fn over_organ_manifest(&self, id: &str) -> Result<TransplantManifest, PlatformError> {
        self.read_manifest(Kind::OverOrgan, id)
    }

    pub fn load_over_organ(&self, id: &str) -> Result<OverOrgan, PlatformError> {
        let m = self.over_organ_manifest(id)?;
        let files = self.read_verified(Kind::OverOrgan, id, &m.files)?;
        let json = files.get("over-organ.json").ok_or_else(|| PlatformError::MissingArtifact(format!("over-organs/{id}/over-organ.json")))?;
        let organ: OverOrgan = serde_json::from_slice(json).map_err(|e| PlatformError::Corrupt {
            path: format!("over-organs/{id}/over-organ.json"),
            message: e.to_string(),
        })?;
        // the printed sources must agree with the structured form
        for (path, text) in organ.render_files() {
            if files.get(&path).map(Vec::as_slice) != Some(text.as_bytes()) {
                return Err(PlatformError::DigestMismatch(format!("over-organs/{id}/{path}")));
            }
        }
        Ok(organ)
    }

    pub fn store_product_base(&self, id: &str, project: &ProjectModel, force: bool) -> Result<PathBuf, PlatformError> {
        let files: Vec<(String, Vec<u8>)> =
            project.units.iter().map(|u| (format!("src/{}", u.path), u.text.clone().into_bytes())).collect();
        let points = insertion_points(project);
        let manifest = |digests| ArtifactManifest {
            id: id.to_string(),
            kind: "product-base".into(),
            files: digests,
            insertion_points: points,
            created_at: now(),
            tool_version: TOOL_VERSION.into(),
        };
        self.store(Kind::ProductBase, id, &files, force, manifest, &mut |_| Ok(()))
    }

    pub fn product_base_manifest(&self, id: &str) -> Result<ArtifactManifest, PlatformError> {
        self.read_manifest(Kind::ProductBase, id)
    }

    pub fn load_product_base(&self, id: &str) -> Result<ProjectModel, PlatformError> {
        let m = self.product_base_manifest(id)?;
        let files = self.read_verified(Kind::ProductBase, id, &m.files)?;
        let dir = self.artifact_dir(Kind::ProductBase, id).join("src");
        let mut units = Vec::new();
        for (path, bytes) in files {
            let Some(rel) = path.strip_prefix("src/") else { continue };
            let text = String::from_utf8(bytes)
                .map_err(|e| PlatformError::Corrupt { path: path.clone(), message: e.to_string() })?;
            units.push(SourceUnit::new(rel, &text));
        }
        ProjectModel::from_units(&dir, units)
            .map_err(|e| PlatformError::Corrupt { path: format!("product-bases/{id}"), message: e.to_string() })
    }

    /// Directory of the regression suite persisted with a product base.
    pub fn product_base_tests(&self, id: &str) -> PathBuf {
        self.artifact_dir(Kind::ProductBase, id).join("tests")
    }

    pub fn store_icebox(&self, id: &str, suite: &TestSuite, force: bool) -> Result<PathBuf, PlatformError> {
        // normalize file layout through a scratch copy
        let scratch = tempfile::tempdir().map_err(io_at(&self.root))?;
        let saved = suite.save(scratch.path()).map_err(io_at(&suite.dir))?;
        let mut files = Vec::new();
        for rel in saved.files().into_iter().chain(["suite.json".to_string()]) {
            let path = scratch.path().join(&rel);
            files.push((rel, fs::read(&path).map_err(io_at(&path))?));
        }
        let manifest = |digests| ArtifactManifest {
            id: id.to_string(),
            kind: "icebox".into(),
            files: digests,
            insertion_points: Vec::new(),
            created_at: now(),
            tool_version: TOOL_VERSION.into(),
        };
        self.store(Kind::Icebox, id, &files, force, manifest, &mut |_| Ok(()))
    }

    pub fn load_icebox(&self, id: &str) -> Result<TestSuite, PlatformError> {
        let m: ArtifactManifest = self.read_manifest(Kind::Icebox, id)?;
        self.read_verified(Kind::Icebox, id, &m.files)?;
        let dir = self.artifact_dir(Kind::Icebox, id);
        TestSuite::load(&dir).map_err(|e| PlatformError::Corrupt { path: format!("icebox/{id}"), message: e.to_string() })
    }

    /// All stored artifacts, by kind then id.
    pub fn list(&self) -> Result<Vec<ArtifactRow>, PlatformError> {
        let mut rows = Vec::new();
        for kind in [Kind::OverOrgan, Kind::ProductBase, Kind::Icebox] {
            let base = self.root.join(kind.dir());
            let Ok(entries) = fs::read_dir(&base) else { continue };
            let mut ids: Vec<String> = entries
                .filter_map(|e| e.ok())
                .filter(|e| e.path().is_dir())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| !n.starts_with('.'))
                .collect();
            ids.sort();
            for id in ids {
                let (files, created_at) = if kind == Kind::OverOrgan {
                    let m: TransplantManifest = self.read_manifest(kind, &id)?;
                    (m.files.len(), m.created_at)
                } else {
                    let m: ArtifactManifest = self.read_manifest(kind, &id)?;
                    (m.files.len(), m.created_at)
                };
                rows.push(ArtifactRow { kind: kind.dir().to_string(), id, files, created_at });
            }
        }
        Ok(rows)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Marker comments `/*@transplant:<id>*/` in a project, by file and line.
pub fn insertion_points(project: &ProjectModel) -> Vec<InsertionPoint> {
    let mut out = Vec::new();
    for u in &project.units {
        for (i, line) in u.text.lines().enumerate() {
            let mut rest = line;
            while let Some(pos) = rest.find("/*@transplant:") {
                let tail = &rest[pos + "/*@transplant:".len()..];
                if let Some(end) = tail.find("*/") {
                    out.push(InsertionPoint { feature: tail[..end].trim().to_string(), file: u.path.clone(), line: i as u32 + 1 });
                    rest = &tail[end..];
                } else {
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
