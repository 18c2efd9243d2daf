//! Reduction and adaptation of an over-organ to a host insertion point.
//!
//! An individual is an inclusion bit per statement-array entry plus one
//! binding per wrapper slot. Slots are the entry point's parameters and the
//! vein's free variables; each binds to a type-compatible expression: the
//! original argument, a vein variable or a host variable in scope at the
//! marker. Search is mutation-only, steady-state, and ends with a greedy
//! pass deleting every entry the ice-box tests do not need.

mod context;
mod gp;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::{HostContext, HostVariable};
pub use gp::{evaluate, evolve, mutate, Evaluator, Fitness, GpConfig, GpIndividual, Operator, OperatorRates};

use crate::depgraph::libc;
use crate::extractor::{GeneKind, OrganElement, OverOrgan};
use crate::frontend::printer::stmt_text;
use crate::frontend::{join_tokens, resolve_type_with, Detail, ElementKind, ProjectModel};
use crate::implantation::ImplantError;
use crate::sandbox::BuildError;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("insertion marker /*@transplant:{0}*/ not found")]
    MarkerNotFound(String),
    #[error("insertion marker /*@transplant:{marker}*/ occurs {count} times")]
    MarkerAmbiguous { marker: String, count: usize },
    #[error("boundary symbol `{0}` is provided neither by the C library nor by the host")]
    UnsatisfiedBoundary(String),
    #[error("invalid GP configuration: {0}")]
    InvalidConfig(String),
    #[error("no viable organ found; best fitness {best}")]
    NoViableOrganFound { best: Fitness, trajectory: Vec<Fitness> },
    #[error("sandbox: {0}")]
    Sandbox(#[from] std::io::Error),
    #[error(transparent)]
    Build(BuildError),
    #[error(transparent)]
    Implant(ImplantError),
}

impl From<ImplantError> for AdaptError {
    fn from(e: ImplantError) -> Self {
        match e {
            ImplantError::MarkerNotFound(m) => AdaptError::MarkerNotFound(m),
            ImplantError::MarkerAmbiguous { marker, count } => AdaptError::MarkerAmbiguous { marker, count },
            ImplantError::Io(e) => AdaptError::Sandbox(e),
            other => AdaptError::Implant(other),
        }
    }
}

/// What a wrapper slot is bound to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "kebab-case")]
pub enum Binding {
    /// The argument expression of the donor's call site.
    Original,
    Vein(String),
    Host(String),
    Unbound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SlotKind {
    EntryParam { index: usize },
    FreeVariable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    /// Parameter or variable name.
    pub symbol: String,
    pub kind: SlotKind,
    /// Declared type, and the type after typedef resolution.
    pub ty: String,
    pub resolved: String,
    /// Type-compatible choices, in a fixed order.
    pub candidates: Vec<Binding>,
}

/// The organ-host wrapper: slots, the vein statements it runs and the call
/// of the entry point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wrapper {
    pub slots: Vec<Slot>,
    /// Statement-array indices of the vein statements, all included.
    pub setup: Vec<usize>,
    pub call: String,
    /// Resolved types of every vein variable and host variable.
    #[serde(skip)]
    types: BTreeMap<String, String>,
}

impl Wrapper {
    fn type_of(&self, binding: &Binding) -> Option<&str> {
        match binding {
            Binding::Vein(n) | Binding::Host(n) => self.types.get(n).map(String::as_str),
            _ => None,
        }
    }

    /// Whether `binding` may fill `slot`: the original argument always,
    /// variables only with an identical resolved type.
    pub fn compatible(&self, slot: &Slot, binding: &Binding) -> bool {
        match binding {
            Binding::Original => matches!(slot.kind, SlotKind::EntryParam { .. }),
            Binding::Unbound => false,
            b => self.type_of(b) == Some(slot.resolved.as_str()),
        }
    }
}

/// The adapted organ: the elements to implant and the wrapper code that
/// replaces the insertion marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Organ {
    pub feature_id: String,
    pub donor_id: String,
    pub entry_point: String,
    pub elements: Vec<OrganElement>,
    /// Wrapper lines, indented relative to the marker.
    pub wrapper: Vec<String>,
    pub mask: Vec<bool>,
    pub bindings: Vec<Binding>,
    pub fitness: Option<Fitness>,
}

impl Organ {
    pub fn statement_count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }
}

/// Typedefs declared by organ elements.
fn organ_typedefs(over: &OverOrgan) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for oe in &over.organ_elements {
        if let Detail::Type(t) = &oe.element.detail {
            for (name, ty) in &t.aliases {
                out.insert(name.clone(), ty.clone());
            }
        }
    }
    out
}

/// One slot per entry-point parameter and per free vein variable, all
/// unbound, with the vein fully included.
pub fn synthesize_wrapper(over: &OverOrgan, host: &ProjectModel, ctx: &HostContext) -> Result<Wrapper, AdaptError> {
    for sym in &over.boundary_symbols {
        let provided = libc::header_of(sym).is_some()
            || host.elements().iter().any(|(_, e)| e.defines().contains(sym))
            || over.organ_elements.iter().any(|oe| oe.element.defines().contains(sym));
        if !provided {
            return Err(AdaptError::UnsatisfiedBoundary(sym.clone()));
        }
    }
    let mut typedefs = host.typedefs();
    typedefs.extend(organ_typedefs(over));
    let resolve = |ty: &str| resolve_type_with(&typedefs, ty);
    let mut types = BTreeMap::new();
    let vein_vars = over.vein_variables();
    for v in vein_vars.iter().chain(&over.free_variables) {
        types.insert(v.name.clone(), resolve(&v.ty));
    }
    for v in &ctx.visible_variables {
        types.insert(v.name.clone(), v.resolved.clone());
    }
    let hosts_of = |resolved: &str| -> Vec<Binding> {
        ctx.visible_variables.iter().filter(|v| v.resolved == resolved).map(|v| Binding::Host(v.name.clone())).collect()
    };
    let mut slots = Vec::new();
    for (i, p) in over.entry_call.params.iter().enumerate() {
        let resolved = resolve(&p.ty);
        let mut candidates = Vec::new();
        if over.entry_call.args.get(i).is_some_and(|a| !a.is_empty()) {
            candidates.push(Binding::Original);
        }
        for v in &vein_vars {
            let b = Binding::Vein(v.name.clone());
            if resolve(&v.ty) == resolved && !candidates.contains(&b) {
                candidates.push(b);
            }
        }
        candidates.extend(hosts_of(&resolved));
        let symbol = p.name.clone().unwrap_or_else(|| format!("arg{i}"));
        slots.push(Slot { symbol, kind: SlotKind::EntryParam { index: i }, ty: p.ty.clone(), resolved, candidates });
    }
    for v in &over.free_variables {
        let resolved = resolve(&v.ty);
        let candidates = hosts_of(&resolved);
        slots.push(Slot { symbol: v.name.clone(), kind: SlotKind::FreeVariable, ty: v.ty.clone(), resolved, candidates });
    }
    let setup = over.vein_genes().map(|(i, _)| i).collect();
    let call = format!("{}(...)", over.entry_point);
    Ok(Wrapper { slots, setup, call, types })
}

/// Why an individual cannot be turned into code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    IncompatibleBinding(String),
    UnboundVariable(String),
}

/// Turns an individual into an implantable organ. Type-incompatible or
/// missing bindings are rejected without compiling.
pub fn materialize(over: &OverOrgan, wrapper: &Wrapper, ind: &GpIndividual) -> Result<Organ, Rejection> {
    for (slot, b) in wrapper.slots.iter().zip(&ind.bindings) {
        if *b != Binding::Unbound && !wrapper.compatible(slot, b) {
            return Err(Rejection::IncompatibleBinding(slot.symbol.clone()));
        }
    }
    let mut removable = vec![None; over.organ_elements.len()];
    let mut body: Vec<String> = Vec::new();
    for (i, gene) in over.statement_array.iter().enumerate() {
        match &gene.kind {
            GeneKind::Element { index } => removable[*index] = Some(ind.mask[i]),
            GeneKind::Statement { stmt } if ind.mask[i] => {
                body.extend(stmt_text(stmt, 0).lines().map(str::to_string));
            }
            GeneKind::EntryCall if ind.mask[i] => {
                let mut args = Vec::new();
                for (slot, b) in wrapper.slots.iter().zip(&ind.bindings) {
                    let SlotKind::EntryParam { index } = slot.kind else { continue };
                    args.push(match b {
                        Binding::Original => join_tokens(&over.entry_call.args[index]),
                        Binding::Vein(n) | Binding::Host(n) => n.clone(),
                        Binding::Unbound => return Err(Rejection::UnboundVariable(slot.symbol.clone())),
                    });
                }
                body.push(format!("{}({});", over.entry_point, args.join(", ")));
            }
            _ => {}
        }
    }
    // free variables the included code uses are declared from their bindings
    let text = body.join("\n");
    let used = crate::frontend::lexer::tokenize("", &text)
        .map(|toks| {
            let toks: Vec<_> = toks.into_iter().map(|t| t.tok).collect();
            crate::frontend::ast::referenced_names(&toks)
        })
        .unwrap_or_default();
    let mut decls = Vec::new();
    for (slot, b) in wrapper.slots.iter().zip(&ind.bindings) {
        if slot.kind != SlotKind::FreeVariable || !used.contains(&slot.symbol) {
            continue;
        }
        match b {
            Binding::Host(n) | Binding::Vein(n) => decls.push(declaration(&slot.ty, &slot.symbol, n)),
            _ => return Err(Rejection::UnboundVariable(slot.symbol.clone())),
        }
    }
    let mut lines: Vec<String> = decls.into_iter().chain(body).collect();
    if lines.len() > 1 || lines.first().is_some_and(|l| !is_call_line(l)) {
        let inner: Vec<String> = lines.iter().map(|l| format!("    {l}")).collect();
        lines = std::iter::once("{".to_string()).chain(inner).chain(std::iter::once("}".to_string())).collect();
    }
    let elements = over
        .organ_elements
        .iter()
        .zip(&removable)
        .filter(|(_, keep)| keep.unwrap_or(true))
        .map(|(oe, _)| oe.clone())
        .collect();
    Ok(Organ {
        feature_id: over.feature_id.clone(),
        donor_id: over.donor_id.clone(),
        entry_point: over.entry_point.clone(),
        elements,
        wrapper: lines,
        mask: ind.mask.clone(),
        bindings: ind.bindings.clone(),
        fitness: None,
    })
}

fn is_call_line(line: &str) -> bool {
    line.ends_with(");") && !line.contains('=')
}

/// `T name = value;`, placing array and pointer suffixes of `T` correctly
/// for the spellings the parser produces.
fn declaration(ty: &str, name: &str, value: &str) -> String {
    match ty.find('[') {
        Some(at) => format!("{} {name}{} = {value};", &ty[..at], &ty[at..]),
        None => format!("{ty} {name} = {value};"),
    }
}

/// Removable organ elements are function definitions other than the
/// entry, prototypes and globals.
pub fn removable(e: &OrganElement, over: &OverOrgan) -> bool {
    let entry = e.file == over.entry_file && e.element.name.as_deref() == Some(over.entry_point.as_str());
    match e.element.kind() {
        ElementKind::FunctionDefinition => !entry,
        ElementKind::FunctionDeclaration | ElementKind::GlobalVariable => true,
        _ => false,
    }
}
