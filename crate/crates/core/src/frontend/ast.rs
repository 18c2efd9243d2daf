use serde::{Deserialize, Serialize};

use super::lexer::{Tok, TokKind};

/// Location of an element or statement in its file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub file: String,
    pub start_line: u32,
    pub end_line: u32,
    /// Byte offsets into the file text. Zero-width for synthesized elements.
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn synthetic(file: &str) -> Self {
        Span { file: file.to_string(), start_line: 0, end_line: 0, start: 0, end: 0 }
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start_line <= line && line <= self.end_line
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    FunctionDefinition,
    FunctionDeclaration,
    GlobalVariable,
    TypeDefinition,
    ConstantDefinition,
    IncludeDirective,
    ConditionalDirectiveBlock,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::FunctionDefinition => "function-definition",
            ElementKind::FunctionDeclaration => "function-declaration",
            ElementKind::GlobalVariable => "global-variable",
            ElementKind::TypeDefinition => "type-definition",
            ElementKind::ConstantDefinition => "constant-definition",
            ElementKind::IncludeDirective => "include-directive",
            ElementKind::ConditionalDirectiveBlock => "conditional-directive-block",
        }
    }
}

/// One declarator of a declaration: `*p = &x` in `int *p = &x, y;`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Declarator {
    pub name: String,
    /// Canonical type spelling, e.g. `char*`, `int[16]`, `struct point`.
    pub ty: String,
    pub init: Option<Vec<Tok>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    pub name: Option<String>,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Function {
    /// Tokens of the signature, from the first specifier to the closing `)`.
    pub header: Vec<Tok>,
    pub return_type: String,
    pub params: Vec<Param>,
    pub variadic: bool,
    pub is_static: bool,
    pub body: Option<Vec<Stmt>>,
}

impl Function {
    /// Return type and parameter types; parameter names do not matter.
    pub fn signature(&self) -> String {
        let params: Vec<&str> = self.params.iter().map(|p| p.ty.as_str()).collect();
        let mut sig = format!("{}({}", self.return_type, params.join(","));
        if self.variadic {
            sig.push_str(",...");
        }
        sig.push(')');
        sig
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variable {
    pub tokens: Vec<Tok>,
    pub declarators: Vec<Declarator>,
    pub is_extern: bool,
    pub is_static: bool,
    /// Struct/enum tags whose bodies are defined inline.
    pub tags: Vec<String>,
    pub enumerators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeDef {
    pub tokens: Vec<Tok>,
    /// `typedef` names introduced, each with the type it aliases.
    pub aliases: Vec<(String, String)>,
    pub tags: Vec<String>,
    pub enumerators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    /// The directive line opening this branch (`#ifdef X`, `#else`).
    pub directive: String,
    pub elements: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detail {
    Function(Function),
    Variable(Variable),
    Type(TypeDef),
    Constant { value: Vec<Tok> },
    Include { target: String, system: bool },
    Conditional { condition: String, negated: bool, branches: Vec<Branch> },
}

/// A top-level construct of a source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Element {
    pub name: Option<String>,
    pub span: Span,
    /// Original text of the element; `None` once the element is modified
    /// or synthesized, in which case it is pretty-printed.
    pub source: Option<String>,
    pub detail: Detail,
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match &self.detail {
            Detail::Function(f) if f.body.is_some() => ElementKind::FunctionDefinition,
            Detail::Function(_) => ElementKind::FunctionDeclaration,
            Detail::Variable(_) => ElementKind::GlobalVariable,
            Detail::Type(_) => ElementKind::TypeDefinition,
            Detail::Constant { .. } => ElementKind::ConstantDefinition,
            Detail::Include { .. } => ElementKind::IncludeDirective,
            Detail::Conditional { .. } => ElementKind::ConditionalDirectiveBlock,
        }
    }

    pub fn function(&self) -> Option<&Function> {
        match &self.detail {
            Detail::Function(f) => Some(f),
            _ => None,
        }
    }

    pub fn function_mut(&mut self) -> Option<&mut Function> {
        match &mut self.detail {
            Detail::Function(f) => Some(f),
            _ => None,
        }
    }

    pub fn body(&self) -> Option<&[Stmt]> {
        self.function().and_then(|f| f.body.as_deref())
    }

    pub fn is_static(&self) -> bool {
        match &self.detail {
            Detail::Function(f) => f.is_static,
            Detail::Variable(v) => v.is_static,
            _ => false,
        }
    }

    /// Whether this element provides storage or code (as opposed to only
    /// announcing something defined elsewhere).
    pub fn is_definition(&self) -> bool {
        match &self.detail {
            Detail::Function(f) => f.body.is_some(),
            Detail::Variable(v) => !v.is_extern,
            _ => false,
        }
    }

    /// Names this element introduces in the ordinary identifier namespace.
    pub fn defines(&self) -> Vec<String> {
        match &self.detail {
            Detail::Function(_) => self.name.iter().cloned().collect(),
            Detail::Variable(v) => {
                let mut out: Vec<String> = v.declarators.iter().map(|d| d.name.clone()).collect();
                out.extend(v.enumerators.iter().cloned());
                out
            }
            Detail::Type(t) => {
                let mut out: Vec<String> = t.aliases.iter().map(|a| a.0.clone()).collect();
                out.extend(t.enumerators.iter().cloned());
                out
            }
            Detail::Constant { .. } => self.name.iter().cloned().collect(),
            Detail::Include { .. } | Detail::Conditional { .. } => Vec::new(),
        }
    }

    /// Struct, union and enum tags this element defines.
    pub fn tags(&self) -> &[String] {
        match &self.detail {
            Detail::Type(t) => &t.tags,
            Detail::Variable(v) => &v.tags,
            _ => &[],
        }
    }

    /// Marks the element as modified so it is pretty-printed.
    pub fn touch(&mut self) {
        self.source = None;
    }

    /// Elements nested in conditional branches, depth first, including self.
    pub fn flatten(&self) -> Vec<&Element> {
        let mut out = vec![self];
        if let Detail::Conditional { branches, .. } = &self.detail {
            for b in branches {
                for e in &b.elements {
                    out.extend(e.flatten());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub start_line: u32,
    pub end_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StmtKind {
    Expr(Vec<Tok>),
    Decl { tokens: Vec<Tok>, declarators: Vec<Declarator> },
    Return(Option<Vec<Tok>>),
    If { cond: Vec<Tok>, then: Box<Stmt>, otherwise: Option<Box<Stmt>> },
    While { cond: Vec<Tok>, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Vec<Tok> },
    For { init: Vec<Tok>, cond: Vec<Tok>, step: Vec<Tok>, body: Box<Stmt> },
    Switch { cond: Vec<Tok>, body: Box<Stmt> },
    Case(Vec<Tok>),
    Default,
    Break,
    Continue,
    Block(Vec<Stmt>),
    Empty,
    /// `#ifdef`/`#ifndef` region inside a function body.
    Conditional { branches: Vec<StmtBranch> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StmtBranch {
    pub directive: String,
    pub body: Vec<Stmt>,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { kind, start_line: 0, end_line: 0 }
    }

    /// Visits this statement and every nested statement, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If { then, otherwise, .. } => {
                then.walk(f);
                if let Some(o) = otherwise {
                    o.walk(f);
                }
            }
            StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::For { body, .. }
            | StmtKind::Switch { body, .. } => body.walk(f),
            StmtKind::Block(stmts) => stmts.iter().for_each(|s| s.walk(f)),
            StmtKind::Conditional { branches } => {
                branches.iter().flat_map(|b| &b.body).for_each(|s| s.walk(f))
            }
            _ => {}
        }
    }

    /// Mutable pre-order visit of this statement and every nested one.
    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        f(self);
        match &mut self.kind {
            StmtKind::If { then, otherwise, .. } => {
                then.walk_mut(f);
                if let Some(o) = otherwise {
                    o.walk_mut(f);
                }
            }
            StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::For { body, .. }
            | StmtKind::Switch { body, .. } => body.walk_mut(f),
            StmtKind::Block(stmts) => stmts.iter_mut().for_each(|s| s.walk_mut(f)),
            StmtKind::Conditional { branches } => {
                branches.iter_mut().flat_map(|b| &mut b.body).for_each(|s| s.walk_mut(f))
            }
            _ => {}
        }
    }

    /// Token lists directly owned by this statement (not by nested ones).
    pub fn own_tokens(&self) -> Vec<&[Tok]> {
        match &self.kind {
            StmtKind::Expr(t) | StmtKind::Case(t) => vec![t],
            StmtKind::Decl { tokens, .. } => vec![tokens],
            StmtKind::Return(Some(t)) => vec![t],
            StmtKind::If { cond, .. }
            | StmtKind::While { cond, .. }
            | StmtKind::DoWhile { cond, .. }
            | StmtKind::Switch { cond, .. } => vec![cond],
            StmtKind::For { init, cond, step, .. } => vec![init, cond, step],
            _ => vec![],
        }
    }

    /// All tokens of this statement and its nested statements.
    pub fn all_tokens(&self) -> Vec<&Tok> {
        let mut out = Vec::new();
        self.walk(&mut |s| {
            for list in s.own_tokens() {
                out.extend(list.iter());
            }
        });
        out
    }

    /// Applies `f` to every token list in this statement tree.
    pub fn map_tokens(&mut self, f: &mut dyn FnMut(&mut Vec<Tok>)) {
        match &mut self.kind {
            StmtKind::Expr(t) | StmtKind::Case(t) => f(t),
            StmtKind::Decl { tokens, declarators } => {
                f(tokens);
                for d in declarators {
                    if let Some(init) = &mut d.init {
                        f(init);
                    }
                }
            }
            StmtKind::Return(Some(t)) => f(t),
            StmtKind::If { cond, then, otherwise } => {
                f(cond);
                then.map_tokens(f);
                if let Some(o) = otherwise {
                    o.map_tokens(f);
                }
            }
            StmtKind::While { cond, body }
            | StmtKind::DoWhile { body, cond }
            | StmtKind::Switch { cond, body } => {
                f(cond);
                body.map_tokens(f);
            }
            StmtKind::For { init, cond, step, body } => {
                f(init);
                f(cond);
                f(step);
                body.map_tokens(f);
            }
            StmtKind::Block(stmts) => stmts.iter_mut().for_each(|s| s.map_tokens(f)),
            StmtKind::Conditional { branches } => {
                branches.iter_mut().flat_map(|b| &mut b.body).for_each(|s| s.map_tokens(f))
            }
            _ => {}
        }
    }

    /// Variables declared anywhere in this statement tree, including
    /// declarations in `for` initializers.
    pub fn declared(&self) -> Vec<Declarator> {
        let mut out = Vec::new();
        self.walk(&mut |s| match &s.kind {
            StmtKind::Decl { declarators, .. } => out.extend(declarators.iter().cloned()),
            StmtKind::For { init, .. } => out.extend(super::parser::declarators_in(init)),
            _ => {}
        });
        out
    }
}

/// Call sites in a token list: identifiers directly followed by `(`.
pub fn called_names(tokens: &[Tok]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokKind::Ident
            && tokens.get(i + 1).is_some_and(|n| n.is("("))
            && !(i > 0 && (tokens[i - 1].is(".") || tokens[i - 1].is("->")))
        {
            out.push(t.text.clone());
        }
    }
    out
}

/// Identifiers referring to ordinary names (not members, not tags).
pub fn referenced_names(tokens: &[Tok]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokKind::Ident {
            continue;
        }
        if i > 0 {
            let p = &tokens[i - 1];
            if p.is(".") || p.is("->") || p.is("struct") || p.is("union") || p.is("enum") {
                continue;
            }
        }
        out.push(t.text.clone());
    }
    out
}

/// Tags referenced as `struct X`, `union X` or `enum X`.
pub fn referenced_tags(tokens: &[Tok]) -> Vec<String> {
    tokens
        .windows(2)
        .filter(|w| (w[0].is("struct") || w[0].is("union") || w[0].is("enum")) && w[1].is_ident())
        .map(|w| w[1].text.clone())
        .collect()
}

/// Identifiers written by a token list: assignment targets, increments,
/// and variables whose address is taken.
pub fn assigned_names(tokens: &[Tok]) -> Vec<String> {
    const ASSIGN: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if !t.is_ident() {
            continue;
        }
        if i > 0 && (tokens[i - 1].is(".") || tokens[i - 1].is("->")) {
            continue;
        }
        let prev = i.checked_sub(1).map(|j| &tokens[j]);
        // skip past member accesses and subscripts to reach the operator
        let mut j = i + 1;
        loop {
            match tokens.get(j) {
                Some(n) if n.is(".") || n.is("->") => j += 2,
                Some(n) if n.is("[") => {
                    let mut depth = 0;
                    while let Some(n) = tokens.get(j) {
                        if n.is("[") {
                            depth += 1;
                        } else if n.is("]") {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        j += 1;
                    }
                    j += 1;
                }
                _ => break,
            }
        }
        let next = tokens.get(j);
        let written = next.is_some_and(|n| ASSIGN.iter().any(|a| n.is(a)) || n.is("++") || n.is("--"))
            || prev.is_some_and(|p| p.is("++") || p.is("--"))
            || (prev.is_some_and(|p| p.is("&")) && (i < 2 || !is_operand_end(&tokens[i - 2])));
        if written {
            out.push(t.text.clone());
        }
    }
    out
}

/// Whether a token can end an operand, making a following `*`, `&`, `-`
/// or `+` binary rather than unary.
pub fn is_operand_end(t: &Tok) -> bool {
    matches!(t.kind, TokKind::Ident | TokKind::Number | TokKind::Str | TokKind::Char)
        || t.is(")")
        || t.is("]")
        || t.is("++")
        || t.is("--")
}
