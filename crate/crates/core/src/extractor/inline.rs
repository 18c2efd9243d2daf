use std::collections::{BTreeMap, BTreeSet};

use super::{call_args, has_return, Gene, GeneKind, StmtRef, VeinInlineRecord, VeinVariable};
use crate::depgraph::{NodeId, Sdg};
use crate::frontend::ast::referenced_names;
use crate::frontend::{join_tokens, parse_statements, Element, Function, ProjectModel, Stmt, StmtKind, Tok};

/// One inlined function instance: its renamed locals and parameters.
struct Frame {
    function: String,
    file: String,
    depth: usize,
    instance: usize,
    renames: BTreeMap<String, String>,
}

pub(super) struct Inliner<'a> {
    sdg: &'a Sdg,
    elements: &'a BTreeMap<NodeId, (&'a str, &'a Element)>,
    per_depth: BTreeMap<usize, usize>,
    next_instance: usize,
    stack: Vec<String>,
    /// Renamed variable → declared type, over all frames.
    types: BTreeMap<String, String>,
    pub record: VeinInlineRecord,
}

impl<'a> Inliner<'a> {
    pub fn new(_project: &'a ProjectModel, sdg: &'a Sdg, elements: &'a BTreeMap<NodeId, (&'a str, &'a Element)>) -> Self {
        Inliner {
            sdg,
            elements,
            per_depth: BTreeMap::new(),
            next_instance: 0,
            stack: Vec::new(),
            types: BTreeMap::new(),
            record: VeinInlineRecord::default(),
        }
    }

    fn frame(&mut self, node: NodeId, depth: usize) -> Frame {
        let (file, e) = self.elements[&node];
        let f = e.function().expect("function node");
        let n = self.per_depth.entry(depth).or_insert(0);
        *n += 1;
        let prefix = if *n == 1 { format!("__v{depth}_") } else { format!("__v{depth}_{n}_") };
        let mut renames = BTreeMap::new();
        for p in &f.params {
            if let Some(name) = &p.name {
                let new = format!("{prefix}{name}");
                self.types.insert(new.clone(), p.ty.clone());
                renames.insert(name.clone(), new);
            }
        }
        for s in f.body.as_deref().unwrap_or_default() {
            for d in s.declared() {
                let new = format!("{prefix}{}", d.name);
                self.types.insert(new.clone(), d.ty.clone());
                renames.insert(d.name, new);
            }
        }
        let instance = self.next_instance;
        self.next_instance += 1;
        Frame { function: e.name.clone().unwrap_or_default(), file: file.to_string(), depth, instance, renames }
    }

    fn push(&mut self, name: &str) {
        self.stack.push(name.to_string());
        if self.stack.len() > self.record.function_stack.len() {
            self.record.function_stack = self.stack.clone();
        }
    }

    /// Inlines the path from `main` to the entry. Returns the vein genes
    /// and the renamed arguments of the entry call.
    pub fn vein(&mut self, path: &[NodeId], hops: &[Vec<NodeId>]) -> (Vec<Gene>, Vec<Vec<Tok>>) {
        let mut genes = Vec::new();
        if path.len() < 2 {
            return (genes, Vec::new());
        }
        let mut frame = self.frame(path[0], 0);
        self.push(&frame.function);
        let mut args = Vec::new();
        for (d, hop) in hops.iter().enumerate() {
            let (_, fe) = self.elements[&path[d]];
            let body = fe.body().expect("function body");
            let (next_file, next) = self.elements[&path[d + 1]];
            let next_name = next.name.clone().unwrap_or_default();
            let Some((site, before)) = hop.split_last() else { break };
            for s in before {
                let idx = self.sdg.node(*s).statement_index.expect("statement node");
                self.emit(&body[idx], &frame, idx, &mut genes);
            }
            let site_stmt = &body[self.sdg.node(*site).statement_index.expect("statement node")];
            let toks: Vec<Tok> = site_stmt.all_tokens().into_iter().cloned().collect();
            args = call_args(&toks, &next_name).unwrap_or_default().iter().map(|a| rename_tokens(a, &frame.renames)).collect();
            if d + 1 == hops.len() {
                break;
            }
            let _ = next_file;
            let nf = self.frame(path[d + 1], d + 1);
            self.bind_params(next.function().expect("function"), &nf, &args, &mut genes);
            self.push(&next_name);
            frame = nf;
        }
        self.stack.clear();
        (genes, args)
    }

    fn bind_params(&mut self, f: &Function, frame: &Frame, args: &[Vec<Tok>], genes: &mut Vec<Gene>) {
        for (i, p) in f.params.iter().enumerate() {
            let (Some(name), Some(arg)) = (&p.name, args.get(i)) else { continue };
            let text = format!("{} {} = {};", p.ty, frame.renames[name], join_tokens(arg));
            let Ok(mut stmts) = parse_statements("<vein>", &text) else { continue };
            if let Some(stmt) = stmts.pop() {
                genes.push(Gene {
                    provenance: StmtRef::Param { function: frame.function.clone(), instance: frame.instance, param: i },
                    kind: GeneKind::Statement { stmt },
                });
            }
        }
    }

    /// Emits one vein statement, inlining a bare call `g(args);` of a
    /// project function unless `g` is already being inlined.
    fn emit(&mut self, stmt: &Stmt, frame: &Frame, index: usize, genes: &mut Vec<Gene>) {
        if has_return(stmt) {
            // would return from the host function once grafted
            return;
        }
        if let Some((callee, callee_id)) = self.bare_call(stmt, frame) {
            if self.stack.contains(&callee) {
                self.record.recursive_calls.push(format!("{}->{}", frame.function, callee));
            } else {
                let (_, ce) = self.elements[&callee_id];
                let f = ce.function().expect("function");
                let StmtKind::Expr(toks) = &stmt.kind else { unreachable!() };
                let args: Vec<Vec<Tok>> = call_args(toks, &callee)
                    .unwrap_or_default()
                    .iter()
                    .map(|a| rename_tokens(a, &frame.renames))
                    .collect();
                let nf = self.frame(callee_id, frame.depth + 1);
                self.bind_params(f, &nf, &args, genes);
                self.push(&callee);
                self.record.inlined.push(callee.clone());
                let body = f.body.as_deref().unwrap_or_default();
                for (j, s) in body.iter().enumerate() {
                    if j + 1 == body.len() && matches!(s.kind, StmtKind::Return(None)) {
                        continue;
                    }
                    self.emit(s, &nf, j, genes);
                }
                self.stack.pop();
                return;
            }
        }
        genes.push(Gene {
            provenance: StmtRef::Body { function: frame.function.clone(), instance: frame.instance, index },
            kind: GeneKind::Statement { stmt: rename_stmt(stmt, &frame.renames) },
        });
    }

    /// `g(args);` where `g` is an inlinable project function.
    fn bare_call(&self, stmt: &Stmt, frame: &Frame) -> Option<(String, NodeId)> {
        let StmtKind::Expr(toks) = &stmt.kind else { return None };
        let name = toks.first().filter(|t| t.is_ident())?.text.clone();
        if !toks.get(1).is_some_and(|t| t.is("(")) || !toks.last().is_some_and(|t| t.is(")")) {
            return None;
        }
        // the call must span the whole statement
        let mut depth = 0;
        for (i, t) in toks.iter().enumerate().skip(1) {
            if t.is("(") {
                depth += 1;
            } else if t.is(")") {
                depth -= 1;
                if depth == 0 && i + 1 != toks.len() {
                    return None;
                }
            }
        }
        if frame.renames.contains_key(&name) {
            return None;
        }
        let id = self.sdg.resolve_function_in(&name, Some(&frame.file)).ok()?;
        let (_, e) = self.elements[&id];
        inlinable(e.function()?).then_some((name, id))
    }

    /// Variables the genes and entry arguments use but never declare.
    pub fn free_variables(&self, genes: &[Gene], args: &[Vec<Tok>]) -> Vec<VeinVariable> {
        let mut declared = BTreeSet::new();
        let mut used = BTreeSet::new();
        for g in genes {
            if let Some(s) = g.stmt() {
                declared.extend(s.declared().into_iter().map(|d| d.name));
                let toks: Vec<Tok> = s.all_tokens().into_iter().cloned().collect();
                used.extend(referenced_names(&toks));
            }
        }
        for a in args {
            used.extend(referenced_names(a));
        }
        used.into_iter()
            .filter(|n| !declared.contains(n))
            .filter_map(|n| self.types.get(&n).map(|ty| VeinVariable { name: n.clone(), ty: ty.clone() }))
            .collect()
    }
}

/// Functions whose body can be spliced in place of a call statement: no
/// `return` other than a trailing valueless one, not variadic.
fn inlinable(f: &Function) -> bool {
    let Some(body) = &f.body else { return false };
    if f.variadic {
        return false;
    }
    body.iter().enumerate().all(|(i, s)| !has_return(s) || (i + 1 == body.len() && matches!(s.kind, StmtKind::Return(None))))
}

pub(super) fn rename_tokens(tokens: &[Tok], renames: &BTreeMap<String, String>) -> Vec<Tok> {
    let mut out = tokens.to_vec();
    rename_in(&mut out, renames);
    out
}

fn rename_in(tokens: &mut [Tok], renames: &BTreeMap<String, String>) {
    for i in 0..tokens.len() {
        if !tokens[i].is_ident() {
            continue;
        }
        if i > 0 {
            let p = &tokens[i - 1];
            if p.is(".") || p.is("->") || p.is("struct") || p.is("union") || p.is("enum") {
                continue;
            }
        }
        if let Some(new) = renames.get(&tokens[i].text) {
            tokens[i].text = new.clone();
        }
    }
}

pub(super) fn rename_stmt(stmt: &Stmt, renames: &BTreeMap<String, String>) -> Stmt {
    let mut s = stmt.clone();
    s.map_tokens(&mut |toks| rename_in(toks, renames));
    s.walk_mut(&mut |x| {
        if let StmtKind::Decl { declarators, .. } = &mut x.kind {
            for d in declarators {
                if let Some(new) = renames.get(&d.name) {
                    d.name = new.clone();
                }
            }
        }
    });
    s
}
