//! Cross-file system dependency graph and slicing.
//!
//! Nodes are top-level elements, the top-level statements of function
//! bodies, and boundary symbols supplied by the C library. Forward slices
//! give the organ closure of an entry point; backward slices give the vein
//! that sets up its execution environment.

mod build;
pub mod libc;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::ElementKind;

pub use build::build_sdg;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SdgError {
    #[error("{file}:{line}: call to undefined function {name}")]
    UnresolvedSymbol { name: String, file: String, line: u32 },
    #[error("unknown entry point {0}")]
    UnknownEntryPoint(String),
    #[error("{0} is not reachable from main")]
    NoPathFromMain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Element(ElementKind),
    Statement,
    /// A symbol provided by the C library.
    Boundary,
}

/// Local-variable effects of a function-body statement.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmtEffects {
    /// Locals declared by the statement.
    pub defines: Vec<String>,
    /// Locals and parameters read or written.
    pub uses: Vec<String>,
    /// Project functions called.
    pub calls: Vec<NodeId>,
    /// Global variable nodes referenced.
    pub globals: Vec<NodeId>,
    pub writes_global: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdgNode {
    pub id: NodeId,
    pub file: String,
    /// Element name; for statements, the enclosing function's name.
    pub name: Option<String>,
    pub qualified: String,
    pub kind: NodeKind,
    /// For statement nodes, the index within the function body.
    pub statement_index: Option<usize>,
    /// For statement nodes, the node of the enclosing function.
    pub parent: Option<NodeId>,
    pub start_line: u32,
    pub end_line: u32,
    pub effects: Option<StmtEffects>,
}

impl SdgNode {
    pub fn is_element(&self) -> bool {
        matches!(self.kind, NodeKind::Element(_))
    }

    pub fn element_kind(&self) -> Option<ElementKind> {
        match self.kind {
            NodeKind::Element(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Call,
    Data,
    Control,
    Declares,
    Includes,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Call => "call",
            EdgeKind::Data => "data",
            EdgeKind::Control => "control",
            EdgeKind::Declares => "declares",
            EdgeKind::Includes => "includes",
        }
    }

    /// Edge kinds followed by forward slicing.
    pub fn is_dependence(self) -> bool {
        matches!(self, EdgeKind::Call | EdgeKind::Data | EdgeKind::Declares)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SdgEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sdg {
    pub nodes: Vec<SdgNode>,
    /// Sorted and duplicate-free.
    pub edges: Vec<SdgEdge>,
    pub name_index: BTreeMap<String, NodeId>,
    #[serde(skip)]
    out: Vec<Vec<usize>>,
}

impl Sdg {
    fn new(nodes: Vec<SdgNode>, mut edges: Vec<SdgEdge>) -> Self {
        edges.sort();
        edges.dedup();
        let name_index = nodes.iter().map(|n| (n.qualified.clone(), n.id)).collect();
        let mut sdg = Sdg { nodes, edges, name_index, out: Vec::new() };
        sdg.reindex();
        sdg
    }

    fn reindex(&mut self) {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.from.index()].push(i);
        }
        self.out = out;
    }

    pub fn node(&self, id: NodeId) -> &SdgNode {
        &self.nodes[id.index()]
    }

    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &SdgEdge> {
        self.out[id.index()].iter().map(move |&i| &self.edges[i])
    }

    pub fn element_nodes(&self) -> impl Iterator<Item = &SdgNode> {
        self.nodes.iter().filter(|n| n.is_element())
    }

    pub fn statement_nodes(&self, function: NodeId) -> Vec<&SdgNode> {
        self.nodes.iter().filter(|n| n.parent == Some(function) && n.kind == NodeKind::Statement).collect()
    }

    /// Function definitions named `name`, or the node named by a qualified
    /// `file::name`.
    pub fn resolve_function(&self, name: &str) -> Result<NodeId, SdgError> {
        if let Some(id) = self.name_index.get(name) {
            if self.node(*id).element_kind() == Some(ElementKind::FunctionDefinition) {
                return Ok(*id);
            }
        }
        let defs: Vec<&SdgNode> = self
            .element_nodes()
            .filter(|n| n.element_kind() == Some(ElementKind::FunctionDefinition) && n.name.as_deref() == Some(name))
            .collect();
        defs.first().map(|n| n.id).ok_or_else(|| SdgError::UnknownEntryPoint(name.to_string()))
    }

    /// Resolves `name` restricted to definitions in `file`, falling back to
    /// [`Sdg::resolve_function`].
    pub fn resolve_function_in(&self, name: &str, file: Option<&str>) -> Result<NodeId, SdgError> {
        if let Some(file) = file {
            if let Some(n) = self.element_nodes().find(|n| {
                n.file == file
                    && n.element_kind() == Some(ElementKind::FunctionDefinition)
                    && n.name.as_deref() == Some(name)
            }) {
                return Ok(n.id);
            }
        }
        self.resolve_function(name)
    }

    /// Element nodes reachable from the entry function over call, data and
    /// declares edges. Boundary nodes are never included.
    pub fn forward_slice(&self, entry: &str) -> Result<BTreeSet<NodeId>, SdgError> {
        let start = self.resolve_function(entry)?;
        Ok(self.closure([start]))
    }

    /// Forward closure of a set of element nodes.
    pub fn closure(&self, start: impl IntoIterator<Item = NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<NodeId> = VecDeque::new();
        for s in start {
            if seen.insert(s) {
                queue.push_back(s);
            }
        }
        while let Some(n) = queue.pop_front() {
            for e in self.out_edges(n) {
                if !e.kind.is_dependence() {
                    continue;
                }
                let target = self.node(e.to);
                if !target.is_element() {
                    continue;
                }
                if seen.insert(e.to) {
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }

    /// Boundary symbols referenced from any node in `nodes`.
    pub fn boundary_of(&self, nodes: &BTreeSet<NodeId>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for &n in nodes {
            for e in self.out_edges(n) {
                let t = self.node(e.to);
                if t.kind == NodeKind::Boundary {
                    out.insert(t.name.clone().unwrap_or_default());
                }
            }
        }
        out
    }

    /// Shortest call path from `from` to `to` over function definitions,
    /// choosing the lowest node id among equal-length alternatives.
    pub fn call_path(&self, from: NodeId, to: NodeId) -> Option<Vec<NodeId>> {
        let mut prev: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                let mut path = vec![to];
                let mut cur = to;
                while let Some(&p) = prev.get(&cur) {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            let mut next: Vec<NodeId> = self
                .out_edges(n)
                .filter(|e| e.kind == EdgeKind::Call)
                .map(|e| e.to)
                .filter(|t| self.node(*t).element_kind() == Some(ElementKind::FunctionDefinition))
                .collect();
            next.sort();
            for t in next {
                if seen.insert(t) {
                    prev.insert(t, n);
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// The vein of `entry`: globals read by the vein, then, for each
    /// function on the call path from `main`, the statements that set up
    /// values reaching the next call, ending with that call. Execution order.
    pub fn backward_slice(&self, entry: &str) -> Result<Vec<NodeId>, SdgError> {
        let target = self.resolve_function(entry)?;
        let main = self.resolve_function("main").map_err(|_| SdgError::NoPathFromMain(entry.to_string()))?;
        if target == main {
            return Ok(Vec::new());
        }
        let path = self.call_path(main, target).ok_or_else(|| SdgError::NoPathFromMain(entry.to_string()))?;
        let mut stmts = Vec::new();
        for pair in path.windows(2) {
            stmts.extend(self.vein_statements(pair[0], pair[1]));
        }
        let mut globals = BTreeSet::new();
        for &s in &stmts {
            if let Some(fx) = &self.node(s).effects {
                globals.extend(fx.globals.iter().copied());
            }
        }
        let mut out: Vec<NodeId> = globals.into_iter().collect();
        out.extend(stmts);
        Ok(out)
    }

    /// Statements of `function` up to its first call of `callee` that the
    /// call depends on, by local def-use, global writes or project calls.
    pub fn vein_statements(&self, function: NodeId, callee: NodeId) -> Vec<NodeId> {
        let body = self.statement_nodes(function);
        let calls = |s: &SdgNode, t: NodeId| s.effects.as_ref().is_some_and(|fx| fx.calls.contains(&t));
        let Some(site) = body.iter().position(|s| calls(s, callee)) else { return Vec::new() };
        let mut needed: BTreeSet<String> = body[site].effects.iter().flat_map(|e| e.uses.iter().cloned()).collect();
        let mut keep = vec![site];
        for j in (0..site).rev() {
            let s = body[j];
            let fx = s.effects.clone().unwrap_or_default();
            let defines_needed = fx.defines.iter().any(|d| needed.contains(d));
            let calls_project = !fx.calls.is_empty();
            if defines_needed || fx.writes_global || calls_project {
                keep.push(j);
                needed.extend(fx.uses.iter().cloned());
            }
        }
        keep.sort();
        keep.into_iter().map(|j| body[j].id).collect()
    }

    /// Graphviz rendering: node label = qualified name, edge label = kind.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph sdg {\n");
        for n in &self.nodes {
            let shape = match n.kind {
                NodeKind::Element(_) => "box",
                NodeKind::Statement => "ellipse",
                NodeKind::Boundary => "diamond",
            };
            let _ = writeln!(out, "  n{} [label=\"{}\", shape={}];", n.id.0, n.qualified.replace('"', "\\\""), shape);
        }
        for e in &self.edges {
            let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.from.0, e.to.0, e.kind.as_str());
        }
        out.push_str("}\n");
        out
    }

    /// Names of the given nodes, for display and comparison.
    pub fn names(&self, ids: &BTreeSet<NodeId>) -> BTreeSet<String> {
        ids.iter().filter_map(|id| self.node(*id).name.clone()).collect()
    }
}
