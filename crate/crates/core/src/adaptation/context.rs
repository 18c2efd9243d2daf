use serde::{Deserialize, Serialize};

use super::AdaptError;
use crate::frontend::{parser::declarators_in, Detail, ElementKind, ProjectModel, Stmt, StmtKind};
use crate::implantation::{locate_marker, ImplantError};
use crate::sandbox::BuildCommand;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HostVariable {
    pub name: String,
    pub ty: String,
    /// `ty` after typedef resolution.
    pub resolved: String,
}

/// The insertion point in a product base and what is in scope there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostContext {
    pub product_base_id: String,
    pub file: String,
    /// Marker id, normally the feature id.
    pub marker: String,
    pub line: u32,
    pub enclosing_function: Option<String>,
    /// Sorted by name.
    pub visible_variables: Vec<HostVariable>,
    pub build: BuildCommand,
}

impl HostContext {
    /// Locates the marker and derives the variables in scope at it.
    pub fn new(
        project: &ProjectModel,
        product_base_id: &str,
        marker: &str,
        build: BuildCommand,
    ) -> Result<Self, AdaptError> {
        let site = locate_marker(project, marker).map_err(|e| match e {
            ImplantError::MarkerAmbiguous { marker, count } => AdaptError::MarkerAmbiguous { marker, count },
            _ => AdaptError::MarkerNotFound(marker.to_string()),
        })?;
        let typedefs = project.typedefs();
        let resolve = |ty: &str| crate::frontend::resolve_type_with(&typedefs, ty);
        // outermost first, so inner declarations shadow outer ones
        let mut vars: Vec<(String, String)> = Vec::new();
        let ast = project.ast(&site.file).expect("marker file parsed");
        let mut headers = project.included_headers(&site.file);
        headers.sort();
        for h in &headers {
            for e in project.ast(h).map(|a| a.all_elements()).unwrap_or_default() {
                globals(e, &mut vars);
            }
        }
        let mut enclosing = None;
        for e in ast.all_elements() {
            if e.span.end_line < site.line {
                globals(e, &mut vars);
            }
            if e.kind() == ElementKind::FunctionDefinition && e.span.contains_line(site.line) {
                let f = e.function().expect("function");
                enclosing = e.name.clone();
                for p in &f.params {
                    if let Some(n) = &p.name {
                        vars.push((n.clone(), p.ty.clone()));
                    }
                }
                locals_before(f.body.as_deref().unwrap_or_default(), site.line, &mut vars);
            }
        }
        let mut visible: Vec<HostVariable> = Vec::new();
        for (name, ty) in vars.into_iter().rev() {
            if !visible.iter().any(|v| v.name == name) {
                let resolved = resolve(&ty);
                visible.push(HostVariable { name, ty, resolved });
            }
        }
        visible.sort();
        Ok(HostContext {
            product_base_id: product_base_id.to_string(),
            file: site.file,
            marker: marker.to_string(),
            line: site.line,
            enclosing_function: enclosing,
            visible_variables: visible,
            build,
        })
    }

    pub fn variable(&self, name: &str) -> Option<&HostVariable> {
        self.visible_variables.iter().find(|v| v.name == name)
    }
}

fn globals(e: &crate::frontend::Element, out: &mut Vec<(String, String)>) {
    if let Detail::Variable(v) = &e.detail {
        out.extend(v.declarators.iter().map(|d| (d.name.clone(), d.ty.clone())));
    }
}

/// Declarations in scope at `line`: those completed before it in each
/// enclosing block.
fn locals_before(stmts: &[Stmt], line: u32, out: &mut Vec<(String, String)>) {
    for s in stmts {
        if s.end_line < line {
            if let StmtKind::Decl { declarators, .. } = &s.kind {
                out.extend(declarators.iter().map(|d| (d.name.clone(), d.ty.clone())));
            }
            continue;
        }
        if s.start_line > line {
            break;
        }
        match &s.kind {
            StmtKind::Block(inner) => locals_before(inner, line, out),
            StmtKind::If { then, otherwise, .. } => {
                locals_before(std::slice::from_ref(then), line, out);
                if let Some(o) = otherwise {
                    locals_before(std::slice::from_ref(o), line, out);
                }
            }
            StmtKind::For { init, body, .. } => {
                out.extend(declarators_in(init).into_iter().map(|d| (d.name, d.ty)));
                locals_before(std::slice::from_ref(body), line, out);
            }
            StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } | StmtKind::Switch { body, .. } => {
                locals_before(std::slice::from_ref(body), line, out)
            }
            StmtKind::Conditional { branches } => {
                for b in branches {
                    locals_before(&b.body, line, out);
                }
            }
            _ => {}
        }
        break;
    }
}
