//! Over-organ extraction.
//!
//! The organ is the forward slice of the entry point, materialized as whole
//! top-level elements. The vein is the backward slice: statements of the
//! functions on the call path from `main`, inlined into one flat list of
//! statements whose locals are renamed `__v<depth>_name`. Together with a
//! synthesized call of the entry point and the removable organ elements,
//! the vein forms the statement array that adaptation searches over.

mod inline;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::depgraph::{EdgeKind, NodeId, Sdg, SdgError};
use crate::frontend::{
    parse_statements, printer, Ast, Detail, Element, ElementKind, Param, ParseError, ProjectModel, Stmt, StmtKind,
    Tok,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganElement {
    /// Donor-relative path.
    pub file: String,
    pub qualified: String,
    pub element: Element,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VeinStatement {
    pub file: String,
    pub function: String,
    pub index: usize,
    pub stmt: Stmt,
}

/// Where a statement-array entry came from. Unique per entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StmtRef {
    /// Binding of an inlined function's parameter to its argument.
    Param { function: String, instance: usize, param: usize },
    /// A statement of an inlined function body.
    Body { function: String, instance: usize, index: usize },
    /// A statement added after extraction (used to test reduction).
    Injected { n: usize },
    EntryCall,
    /// A removable top-level organ element.
    Element { qualified: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gene", rename_all = "kebab-case")]
pub enum GeneKind {
    Statement { stmt: Stmt },
    EntryCall,
    /// Index into [`OverOrgan::organ_elements`].
    Element { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gene {
    pub provenance: StmtRef,
    pub kind: GeneKind,
}

impl Gene {
    pub fn stmt(&self) -> Option<&Stmt> {
        match &self.kind {
            GeneKind::Statement { stmt } => Some(stmt),
            _ => None,
        }
    }
}

/// The synthesized call of the entry point. `args` are the (renamed)
/// argument expressions of the original call site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryCall {
    pub function: String,
    pub return_type: String,
    pub params: Vec<Param>,
    pub args: Vec<Vec<Tok>>,
}

/// A variable used by the vein but defined outside it, such as the
/// parameters of `main`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VeinVariable {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VeinInlineRecord {
    /// Deepest stack of functions active during inlining.
    pub function_stack: Vec<String>,
    /// Functions inlined, in order.
    pub inlined: Vec<String>,
    /// Calls left in place because the callee was already being inlined.
    pub recursive_calls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverOrgan {
    pub feature_id: String,
    pub donor_id: String,
    pub entry_point: String,
    pub entry_file: String,
    /// Grouped by file in `file_map` order, donor order within a file.
    pub organ_elements: Vec<OrganElement>,
    pub vein_statements: Vec<VeinStatement>,
    pub statement_array: Vec<Gene>,
    /// Donor-relative paths of the extracted files, in donor order.
    pub file_map: Vec<String>,
    pub boundary_symbols: Vec<String>,
    pub entry_call: EntryCall,
    pub free_variables: Vec<VeinVariable>,
    pub inline_record: VeinInlineRecord,
}

impl OverOrgan {
    /// Printed files of the organ, keyed by donor-relative path.
    pub fn render_files(&self) -> BTreeMap<String, String> {
        let mut asts: BTreeMap<String, Ast> = BTreeMap::new();
        for oe in &self.organ_elements {
            asts.entry(oe.file.clone()).or_insert_with(|| Ast::new(&oe.file)).push(oe.element.clone());
        }
        asts.into_iter().map(|(p, a)| (p, a.print())).collect()
    }

    pub fn entry_element(&self) -> Option<&OrganElement> {
        self.organ_elements.iter().find(|oe| {
            oe.file == self.entry_file
                && oe.element.kind() == ElementKind::FunctionDefinition
                && oe.element.name.as_deref() == Some(self.entry_point.as_str())
        })
    }

    /// Genes that are vein statements (including injected ones).
    pub fn vein_genes(&self) -> impl Iterator<Item = (usize, &Gene)> {
        self.statement_array.iter().enumerate().filter(|(_, g)| matches!(g.kind, GeneKind::Statement { .. }))
    }

    /// Variables declared by vein genes, with their types.
    pub fn vein_variables(&self) -> Vec<VeinVariable> {
        let mut out = Vec::new();
        for (_, g) in self.vein_genes() {
            for d in g.stmt().map(|s| s.declared()).unwrap_or_default() {
                out.push(VeinVariable { name: d.name, ty: d.ty });
            }
        }
        out
    }

    /// Adds statements to the vein just before the entry call.
    pub fn inject_statements(&mut self, sources: &[&str]) -> Result<(), ParseError> {
        let at = self
            .statement_array
            .iter()
            .position(|g| g.kind == GeneKind::EntryCall)
            .unwrap_or(self.statement_array.len());
        let mut n = self.statement_array.iter().filter(|g| matches!(g.provenance, StmtRef::Injected { .. })).count();
        let mut genes = Vec::new();
        for src in sources {
            for stmt in parse_statements("<injected>", src)? {
                genes.push(Gene { provenance: StmtRef::Injected { n }, kind: GeneKind::Statement { stmt } });
                n += 1;
            }
        }
        self.statement_array.splice(at..at, genes);
        Ok(())
    }
}

/// Element nodes of the graph paired with the elements they stand for.
pub fn node_elements<'p>(project: &'p ProjectModel, sdg: &Sdg) -> BTreeMap<NodeId, (&'p str, &'p Element)> {
    let mut by_file: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
    for n in sdg.element_nodes() {
        by_file.entry(n.file.as_str()).or_default().push(n.id);
    }
    let mut out = BTreeMap::new();
    for ast in &project.asts {
        let mut elements = ast.all_elements();
        elements.sort_by_key(|e| (e.span.start_line, e.span.start));
        let ids = by_file.get(ast.path.as_str()).cloned().unwrap_or_default();
        for (id, e) in ids.into_iter().zip(elements) {
            out.insert(id, (ast.path.as_str(), e));
        }
    }
    out
}

/// Extracts the over-organ of `entry` from a prepared donor.
///
/// `entry_file` disambiguates same-named static functions.
pub fn extract_over_organ(
    project: &ProjectModel,
    sdg: &Sdg,
    entry: &str,
    entry_file: Option<&str>,
    feature_id: &str,
    donor_id: &str,
) -> Result<OverOrgan, SdgError> {
    let entry_id = sdg.resolve_function_in(entry, entry_file)?;
    let main = sdg.resolve_function("main").map_err(|_| SdgError::NoPathFromMain(entry.to_string()))?;
    let path = sdg.call_path(main, entry_id).ok_or_else(|| SdgError::NoPathFromMain(entry.to_string()))?;
    let elements = node_elements(project, sdg);

    // vein statements per path hop
    let mut hops: Vec<Vec<NodeId>> = Vec::new();
    let mut vein_statements = Vec::new();
    for pair in path.windows(2) {
        let stmts = sdg.vein_statements(pair[0], pair[1]);
        for &s in &stmts {
            let node = sdg.node(s);
            let (_, func) = elements[&pair[0]];
            let index = node.statement_index.expect("statement node");
            vein_statements.push(VeinStatement {
                file: node.file.clone(),
                function: func.name.clone().unwrap_or_default(),
                index,
                stmt: func.body().expect("function body")[index].clone(),
            });
        }
        hops.push(stmts);
    }

    // organ: closure of the entry, the vein's callees and globals, and the
    // types and constants the vein functions use
    let mut seeds: BTreeSet<NodeId> = BTreeSet::from([entry_id]);
    for (d, hop) in hops.iter().enumerate() {
        for (i, &s) in hop.iter().enumerate() {
            if let Some(fx) = &sdg.node(s).effects {
                // the hop's own call is inlined, not kept
                let site = i + 1 == hop.len();
                seeds.extend(fx.calls.iter().copied().filter(|c| !(site && *c == path[d + 1] && *c != entry_id)));
                seeds.extend(fx.globals.iter().copied());
            }
        }
    }
    for &f in &path[..path.len() - 1] {
        for e in sdg.out_edges(f) {
            let kind = sdg.node(e.to).element_kind();
            if e.kind == EdgeKind::Declares
                && matches!(kind, Some(ElementKind::TypeDefinition | ElementKind::ConstantDefinition))
            {
                seeds.insert(e.to);
            }
        }
    }
    let mut organ_nodes = sdg.closure(seeds);
    add_includes(project, sdg, &elements, &mut organ_nodes);

    let mut boundary_scope = organ_nodes.clone();
    boundary_scope.extend(path.iter().copied());
    let boundary_symbols: Vec<String> = sdg.boundary_of(&boundary_scope).into_iter().collect();

    let organ_elements: Vec<OrganElement> = organ_nodes
        .iter()
        .map(|id| {
            let (file, e) = elements[id];
            OrganElement { file: file.to_string(), qualified: sdg.node(*id).qualified.clone(), element: e.clone() }
        })
        .collect();
    let mut file_map: Vec<String> = organ_elements.iter().map(|oe| oe.file.clone()).collect();
    file_map.dedup();

    let (_, entry_el) = elements[&entry_id];
    let entry_fn = entry_el.function().expect("entry is a function");
    let mut inliner = inline::Inliner::new(project, sdg, &elements);
    let (mut genes, args) = inliner.vein(&path, &hops);
    let free_variables = inliner.free_variables(&genes, &args);
    let inline_record = inliner.record;
    genes.push(Gene { provenance: StmtRef::EntryCall, kind: GeneKind::EntryCall });
    for (index, oe) in organ_elements.iter().enumerate() {
        let removable = match oe.element.kind() {
            ElementKind::FunctionDefinition => oe.qualified != sdg.node(entry_id).qualified,
            ElementKind::FunctionDeclaration | ElementKind::GlobalVariable => true,
            _ => false,
        };
        if removable {
            genes.push(Gene {
                provenance: StmtRef::Element { qualified: oe.qualified.clone() },
                kind: GeneKind::Element { index },
            });
        }
    }

    Ok(OverOrgan {
        feature_id: feature_id.to_string(),
        donor_id: donor_id.to_string(),
        entry_point: entry.to_string(),
        entry_file: sdg.node(entry_id).file.clone(),
        organ_elements,
        vein_statements,
        statement_array: genes,
        file_map,
        boundary_symbols,
        entry_call: EntryCall {
            function: entry.to_string(),
            return_type: entry_fn.return_type.clone(),
            params: entry_fn.params.clone(),
            args,
        },
        free_variables,
        inline_record,
    })
}

/// Adds the include directives the organ files need: system headers always,
/// project headers when they (transitively) lead to organ elements.
fn add_includes(
    project: &ProjectModel,
    sdg: &Sdg,
    elements: &BTreeMap<NodeId, (&str, &Element)>,
    organ: &mut BTreeSet<NodeId>,
) {
    let organ_files: BTreeSet<String> = organ.iter().map(|id| sdg.node(*id).file.clone()).collect();
    let needed_header = |h: &str| -> bool {
        organ_files.contains(h) || project.included_headers(h).iter().any(|x| organ_files.contains(x))
    };
    let mut files: BTreeSet<String> = organ_files.clone();
    for f in &organ_files {
        for h in project.included_headers(f) {
            if needed_header(&h) {
                files.insert(h);
            }
        }
    }
    for (id, (file, e)) in elements {
        if !files.contains(*file) {
            continue;
        }
        if let Detail::Include { target, system } = &e.detail {
            let keep = *system || project.resolve_include(file, target).is_some_and(|h| needed_header(&h));
            if keep {
                organ.insert(*id);
            }
        }
    }
}

/// Stores an over-organ in the platform under its feature id, as copies of
/// its donor files plus a manifest.
pub fn store_slices(
    organ: &OverOrgan,
    platform: &crate::platform::Platform,
    icebox_ref: Option<&str>,
    force: bool,
) -> Result<std::path::PathBuf, crate::platform::PlatformError> {
    platform.store_over_organ(organ, icebox_ref, force)
}

/// Argument lists of the first call to `name` in `tokens`.
pub fn call_args(tokens: &[Tok], name: &str) -> Option<Vec<Vec<Tok>>> {
    let start = (0..tokens.len()).find(|&i| {
        tokens[i].is_ident()
            && tokens[i].text == name
            && tokens.get(i + 1).is_some_and(|t| t.is("("))
            && !(i > 0 && (tokens[i - 1].is(".") || tokens[i - 1].is("->")))
    })?;
    let mut args = Vec::new();
    let mut cur = Vec::new();
    let mut depth = 0;
    for t in &tokens[start + 2..] {
        if t.is("(") || t.is("[") || t.is("{") {
            depth += 1;
        } else if t.is(")") || t.is("]") || t.is("}") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if t.is(",") && depth == 0 {
            args.push(std::mem::take(&mut cur));
            continue;
        }
        cur.push(t.clone());
    }
    if !cur.is_empty() || !args.is_empty() {
        args.push(cur);
    }
    Some(args)
}

/// Whether a statement tree contains a `return`.
pub fn has_return(s: &Stmt) -> bool {
    let mut found = false;
    s.walk(&mut |x| found |= matches!(x.kind, StmtKind::Return(_)));
    found
}

/// Text of the statement array entries, for display.
pub fn gene_text(organ: &OverOrgan, gene: &Gene) -> String {
    match &gene.kind {
        GeneKind::Statement { stmt } => printer::stmt_text(stmt, 0).trim_end().to_string(),
        GeneKind::EntryCall => {
            let args: Vec<String> = organ.entry_call.args.iter().map(|a| printer::join_tokens(a)).collect();
            format!("{}({});", organ.entry_call.function, args.join(", "))
        }
        GeneKind::Element { index } => {
            let oe = &organ.organ_elements[*index];
            format!("{} [{}]", oe.qualified, oe.element.kind().as_str())
        }
    }
}
