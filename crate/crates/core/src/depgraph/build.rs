use std::collections::{BTreeMap, BTreeSet};

use super::{libc, EdgeKind, NodeId, NodeKind, Sdg, SdgEdge, SdgError, SdgNode, StmtEffects};
use crate::frontend::ast::{assigned_names, called_names, referenced_names, referenced_tags};
use crate::frontend::{Detail, Element, ElementKind, ProjectModel, Stmt, Tok};

/// A project element that introduces a name.
#[derive(Clone, Copy)]
struct Def {
    node: NodeId,
    kind: ElementKind,
    is_static: bool,
    file: usize,
}

struct Builder<'p> {
    project: &'p ProjectModel,
    nodes: Vec<SdgNode>,
    edges: Vec<SdgEdge>,
    /// Ordinary names → defining elements.
    names: BTreeMap<String, Vec<Def>>,
    /// Struct, union and enum tags → defining elements.
    tags: BTreeMap<String, Vec<Def>>,
    boundary: BTreeMap<String, NodeId>,
    /// System headers visible from each file, by file index.
    system: Vec<Vec<String>>,
}

/// Builds the dependency graph of a parsed project.
///
/// Node ids follow (file, position) order: each element is followed by the
/// top-level statements of its body. Boundary nodes come last, by name.
pub fn build_sdg(project: &ProjectModel) -> Result<Sdg, SdgError> {
    let mut b = Builder {
        project,
        nodes: Vec::new(),
        edges: Vec::new(),
        names: BTreeMap::new(),
        tags: BTreeMap::new(),
        boundary: BTreeMap::new(),
        system: Vec::new(),
    };
    let placed = b.place_nodes();
    b.system = (0..project.asts.len()).map(|i| b.system_headers(i)).collect();
    let mut pending_boundary: BTreeMap<String, Vec<(NodeId, EdgeKind)>> = BTreeMap::new();
    for (node, file, element) in &placed {
        b.element_edges(*node, *file, element, &mut pending_boundary)?;
    }
    for (name, users) in pending_boundary {
        let id = NodeId(b.nodes.len() as u32);
        b.nodes.push(SdgNode {
            id,
            file: "<libc>".into(),
            name: Some(name.clone()),
            qualified: format!("<libc>::{name}"),
            kind: NodeKind::Boundary,
            statement_index: None,
            parent: None,
            start_line: 0,
            end_line: 0,
            effects: None,
        });
        b.boundary.insert(name, id);
        for (from, kind) in users {
            b.edges.push(SdgEdge { from, to: id, kind });
        }
    }
    Ok(Sdg::new(b.nodes, b.edges))
}

impl<'p> Builder<'p> {
    fn place_nodes(&mut self) -> Vec<(NodeId, usize, &'p Element)> {
        let project = self.project;
        let mut placed = Vec::new();
        let mut seen_names: BTreeMap<String, usize> = BTreeMap::new();
        for (fi, ast) in project.asts.iter().enumerate() {
            let mut elements = ast.all_elements();
            elements.sort_by_key(|e| (e.span.start_line, e.span.start));
            for e in elements {
                let id = NodeId(self.nodes.len() as u32);
                let base = match (&e.detail, &e.name) {
                    (Detail::Include { target, system }, _) => {
                        if *system {
                            format!("{}::#include<{target}>", ast.path)
                        } else {
                            format!("{}::#include\"{target}\"", ast.path)
                        }
                    }
                    (Detail::Conditional { condition, .. }, _) => format!("{}::#if:{condition}", ast.path),
                    (_, Some(n)) => format!("{}::{n}", ast.path),
                    (_, None) => format!("{}::{}", ast.path, e.kind().as_str()),
                };
                let count = seen_names.entry(base.clone()).or_insert(0);
                *count += 1;
                let qualified = if *count == 1 { base } else { format!("{base}#{count}") };
                self.nodes.push(SdgNode {
                    id,
                    file: ast.path.clone(),
                    name: e.name.clone(),
                    qualified: qualified.clone(),
                    kind: NodeKind::Element(e.kind()),
                    statement_index: None,
                    parent: None,
                    start_line: e.span.start_line,
                    end_line: e.span.end_line,
                    effects: None,
                });
                let def = Def { node: id, kind: e.kind(), is_static: e.is_static(), file: fi };
                for n in e.defines() {
                    self.names.entry(n).or_default().push(def);
                }
                for t in e.tags() {
                    self.tags.entry(t.clone()).or_default().push(def);
                }
                placed.push((id, fi, e));
                if let Some(body) = e.body() {
                    for (si, s) in body.iter().enumerate() {
                        let sid = NodeId(self.nodes.len() as u32);
                        self.nodes.push(SdgNode {
                            id: sid,
                            file: ast.path.clone(),
                            name: e.name.clone(),
                            qualified: format!("{qualified}#s{si}"),
                            kind: NodeKind::Statement,
                            statement_index: Some(si),
                            parent: Some(id),
                            start_line: s.start_line,
                            end_line: s.end_line,
                            effects: None,
                        });
                        self.edges.push(SdgEdge { from: id, to: sid, kind: EdgeKind::Control });
                    }
                }
            }
        }
        placed
    }

    /// System headers included by a file or by the project headers it
    /// includes.
    fn system_headers(&self, file: usize) -> Vec<String> {
        let project = self.project;
        let path = &project.asts[file].path;
        let mut files = vec![path.clone()];
        files.extend(project.included_headers(path));
        let mut out = BTreeSet::new();
        for f in files {
            if let Some(ast) = project.ast(&f) {
                for e in ast.all_elements() {
                    if let Detail::Include { target, system: true } = &e.detail {
                        out.insert(target.clone());
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Definitions of `name` visible from `file`: a same-file definition
    /// wins; otherwise every non-static definition in the project.
    fn visible(&self, table: &BTreeMap<String, Vec<Def>>, name: &str, file: usize, want: impl Fn(&Def) -> bool) -> Vec<Def> {
        let Some(defs) = table.get(name) else { return Vec::new() };
        let defs: Vec<Def> = defs.iter().copied().filter(|d| want(d)).collect();
        let local: Vec<Def> = defs.iter().copied().filter(|d| d.file == file).collect();
        if !local.is_empty() {
            return local;
        }
        defs.into_iter().filter(|d| !d.is_static).collect()
    }

    fn function_defs(&self, name: &str, file: usize) -> Vec<Def> {
        self.visible(&self.names, name, file, |d| d.kind == ElementKind::FunctionDefinition)
    }

    fn globals(&self, name: &str, file: usize) -> Vec<Def> {
        self.visible(&self.names, name, file, |d| d.kind == ElementKind::GlobalVariable)
    }

    fn declarations(&self, name: &str, file: usize) -> Vec<Def> {
        self.visible(&self.names, name, file, |d| {
            matches!(d.kind, ElementKind::TypeDefinition | ElementKind::ConstantDefinition)
        })
    }

    fn element_edges(
        &mut self,
        node: NodeId,
        file: usize,
        element: &Element,
        pending: &mut BTreeMap<String, Vec<(NodeId, EdgeKind)>>,
    ) -> Result<(), SdgError> {
        let path = self.project.asts[file].path.clone();
        let mut tokens: Vec<&Tok> = Vec::new();
        let mut locals: BTreeSet<String> = BTreeSet::new();
        let mut calls: Vec<(String, u32)> = Vec::new();
        match &element.detail {
            Detail::Function(f) => {
                tokens.extend(f.header.iter());
                locals.extend(f.params.iter().filter_map(|p| p.name.clone()));
                if let Some(body) = &f.body {
                    for s in body {
                        locals.extend(s.declared().into_iter().map(|d| d.name));
                        let toks: Vec<Tok> = s.all_tokens().into_iter().cloned().collect();
                        calls.extend(called_names(&toks).into_iter().map(|c| (c, s.start_line)));
                        tokens.extend(s.all_tokens());
                    }
                }
            }
            Detail::Variable(v) => tokens.extend(v.tokens.iter()),
            Detail::Type(t) => tokens.extend(t.tokens.iter()),
            Detail::Constant { value } => tokens.extend(value.iter()),
            Detail::Include { target, system: false } => {
                if let Some(header) = self.project.resolve_include(&path, target) {
                    if let Some(ast) = self.project.ast(&header) {
                        let targets: Vec<NodeId> = self
                            .nodes
                            .iter()
                            .filter(|n| n.file == header && n.is_element())
                            .map(|n| n.id)
                            .collect();
                        debug_assert!(targets.len() >= ast.all_elements().len());
                        for t in targets {
                            self.edges.push(SdgEdge { from: node, to: t, kind: EdgeKind::Includes });
                        }
                    }
                }
            }
            Detail::Include { .. } => {}
            Detail::Conditional { .. } => {
                let span = &element.span;
                let nested: Vec<NodeId> = self
                    .nodes
                    .iter()
                    .filter(|n| {
                        n.is_element()
                            && n.file == path
                            && n.id != node
                            && n.start_line >= span.start_line
                            && n.end_line <= span.end_line
                    })
                    .map(|n| n.id)
                    .collect();
                for t in nested {
                    self.edges.push(SdgEdge { from: node, to: t, kind: EdgeKind::Control });
                }
            }
        }
        let owned: Vec<Tok> = tokens.into_iter().cloned().collect();
        let own_names: BTreeSet<String> = element.defines().into_iter().collect();
        let is_function = matches!(element.detail, Detail::Function(_));

        // calls
        let called: BTreeSet<String> = calls.iter().map(|c| c.0.clone()).collect();
        for (name, line) in &calls {
            if locals.contains(name) {
                continue;
            }
            let defs = self.function_defs(name, file);
            if !defs.is_empty() {
                for d in defs {
                    self.edges.push(SdgEdge { from: node, to: d.node, kind: EdgeKind::Call });
                }
                continue;
            }
            if libc::declared_by(&self.system[file], name) {
                let users = pending.entry(name.clone()).or_default();
                if !users.contains(&(node, EdgeKind::Call)) {
                    users.push((node, EdgeKind::Call));
                }
                continue;
            }
            return Err(SdgError::UnresolvedSymbol { name: name.clone(), file: path, line: *line });
        }

        // identifiers other than calls
        let mut referenced: BTreeSet<String> = referenced_names(&owned).into_iter().collect();
        for n in &own_names {
            // a definition does not depend on itself, but a recursive
            // function keeps its self-call edge above
            referenced.remove(n);
        }
        for name in referenced {
            if locals.contains(&name) || called.contains(&name) {
                continue;
            }
            let globals = self.globals(&name, file);
            for d in &globals {
                self.edges.push(SdgEdge { from: node, to: d.node, kind: EdgeKind::Data });
            }
            let decls = self.declarations(&name, file);
            for d in &decls {
                self.edges.push(SdgEdge { from: node, to: d.node, kind: EdgeKind::Declares });
            }
            if globals.is_empty() && decls.is_empty() {
                if is_function {
                    // a function named without being called
                    for d in self.function_defs(&name, file) {
                        self.edges.push(SdgEdge { from: node, to: d.node, kind: EdgeKind::Call });
                    }
                }
                let known = self.system[file]
                    .iter()
                    .any(|h| libc::header_names(h).is_some_and(|names| names.contains(&name.as_str())));
                if known && self.names.get(&name).is_none() {
                    let users = pending.entry(name.clone()).or_default();
                    if !users.contains(&(node, EdgeKind::Data)) {
                        users.push((node, EdgeKind::Data));
                    }
                }
            }
        }
        for tag in referenced_tags(&owned) {
            let own = element.tags().contains(&tag);
            if own {
                continue;
            }
            for d in self.visible(&self.tags, &tag, file, |_| true) {
                if d.node != node {
                    self.edges.push(SdgEdge { from: node, to: d.node, kind: EdgeKind::Declares });
                }
            }
        }

        // a definition depends on the prototypes announcing it
        if element.kind() == ElementKind::FunctionDefinition {
            if let Some(name) = &element.name {
                let protos: Vec<Def> = self
                    .names
                    .get(name)
                    .map(|v| {
                        v.iter()
                            .copied()
                            .filter(|d| d.kind == ElementKind::FunctionDeclaration)
                            .filter(|d| !element.is_static() || d.file == file)
                            .collect()
                    })
                    .unwrap_or_default();
                for d in protos {
                    self.edges.push(SdgEdge { from: node, to: d.node, kind: EdgeKind::Declares });
                }
            }
        }

        if let Some(body) = element.body() {
            let params: Vec<String> =
                element.function().map(|f| f.params.iter().filter_map(|p| p.name.clone()).collect()).unwrap_or_default();
            let stmt_nodes: Vec<NodeId> =
                self.nodes.iter().filter(|n| n.parent == Some(node)).map(|n| n.id).collect();
            for (s, sid) in body.iter().zip(stmt_nodes) {
                let fx = self.effects(s, file, &locals, &params);
                self.nodes[sid.index()].effects = Some(fx);
            }
        }
        Ok(())
    }

    fn effects(&self, s: &Stmt, file: usize, locals: &BTreeSet<String>, params: &[String]) -> StmtEffects {
        let toks: Vec<Tok> = s.all_tokens().into_iter().cloned().collect();
        let defines: Vec<String> = s.declared().into_iter().map(|d| d.name).collect();
        let mut uses = BTreeSet::new();
        let mut globals = BTreeSet::new();
        for n in referenced_names(&toks) {
            if locals.contains(&n) || params.contains(&n) {
                uses.insert(n);
            } else {
                globals.extend(self.globals(&n, file).into_iter().map(|d| d.node));
            }
        }
        let writes_global = assigned_names(&toks).iter().any(|n| !locals.contains(n) && !self.globals(n, file).is_empty());
        let mut calls = BTreeSet::new();
        for c in called_names(&toks) {
            if !locals.contains(&c) {
                calls.extend(self.function_defs(&c, file).into_iter().map(|d| d.node));
            }
        }
        StmtEffects {
            defines,
            uses: uses.into_iter().collect(),
            calls: calls.into_iter().collect(),
            globals: globals.into_iter().collect(),
            writes_global,
        }
    }
}
