//! Recursive-descent parser for the supported C subset.
//!
//! Expressions are kept as token lists; only statements, declarations and
//! top-level elements get structure.

use super::ast::*;
use super::lexer::{tokenize, Tok, TokKind, Token};
use super::{Ast, ParseError};

const TYPE_WORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned",
];
const QUALIFIERS: &[&str] = &["const", "volatile"];
const STORAGE: &[&str] = &["static", "extern", "register", "auto", "inline"];

/// Parses one file into an [`Ast`].
pub fn parse_file(path: &str, text: &str) -> Result<Ast, ParseError> {
    let tokens = tokenize(path, text)?;
    let significant: Vec<Token> =
        tokens.into_iter().filter(|t| t.kind() != TokKind::Comment).collect();
    let mut p = Parser { file: path, text, toks: &significant, pos: 0 };
    let elements = p.elements(false)?;
    if let Some(t) = p.peek() {
        // only a stray #else/#endif can stop the top-level loop
        return Err(ParseError::UnbalancedDirective { file: path.to_string(), line: t.line });
    }
    let mut trivia = Vec::with_capacity(elements.len() + 1);
    let mut cursor = 0;
    for e in &elements {
        trivia.push(text[cursor..e.span.start].to_string());
        cursor = e.span.end;
    }
    trivia.push(text[cursor..].to_string());
    Ok(Ast { path: path.to_string(), elements, trivia })
}

/// Parses a single statement from source text. Used for synthesized code.
pub fn parse_statements(path: &str, text: &str) -> Result<Vec<Stmt>, ParseError> {
    let tokens = tokenize(path, text)?;
    let significant: Vec<Token> =
        tokens.into_iter().filter(|t| t.kind() != TokKind::Comment).collect();
    let mut p = Parser { file: path, text, toks: &significant, pos: 0 };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Declarators of a declaration held in a bare token list, such as the
/// initializer clause of a `for` loop. Returns nothing for expressions.
pub fn declarators_in(tokens: &[Tok]) -> Vec<Declarator> {
    let toks: Vec<Token> = tokens
        .iter()
        .map(|t| Token { tok: t.clone(), start: 0, end: 0, line: 0, end_line: 0 })
        .collect();
    let mut p = Parser { file: "", text: "", toks: &toks, pos: 0 };
    if !p.at_declaration() {
        return Vec::new();
    }
    let Ok(spec) = p.specifiers() else { return Vec::new() };
    let mut out = Vec::new();
    loop {
        let Ok(d) = p.declarator(false) else { break };
        let init = if p.eat("=") { p.initializer().ok() } else { None };
        if let Some(name) = d.name.clone() {
            out.push(Declarator { name, ty: d.ty(&spec.base, false), init });
        }
        if !p.eat(",") {
            break;
        }
    }
    out
}

struct Specifiers {
    base: String,
    is_static: bool,
    is_extern: bool,
    is_typedef: bool,
    tags: Vec<String>,
    enumerators: Vec<String>,
}

struct RawDeclarator {
    name: Option<String>,
    pointers: usize,
    arrays: Vec<String>,
    function: Option<(Vec<Param>, bool)>,
    line: u32,
}

impl RawDeclarator {
    fn ty(&self, base: &str, decay: bool) -> String {
        let mut ty = base.to_string();
        for _ in 0..self.pointers {
            ty.push('*');
        }
        let mut arrays = self.arrays.iter();
        if decay && !self.arrays.is_empty() {
            arrays.next();
            ty.push('*');
        }
        for a in arrays {
            ty.push('[');
            ty.push_str(a);
            ty.push(']');
        }
        ty
    }
}

struct Parser<'a> {
    file: &'a str,
    text: &'a str,
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + offset)
    }

    fn is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.tok.is(text))
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.is(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn line(&self) -> u32 {
        self.peek().or_else(|| self.toks.last()).map_or(1, |t| t.line)
    }

    fn syntax(&self, expected: &str) -> ParseError {
        ParseError::Syntax { file: self.file.to_string(), line: self.line(), expected: expected.to_string() }
    }

    fn unsupported(&self, line: u32, construct: &str) -> ParseError {
        ParseError::Unsupported { file: self.file.to_string(), line, construct: construct.to_string() }
    }

    fn expect(&mut self, text: &str) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if t.tok.is(text) => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.syntax(&format!("'{text}'"))),
        }
    }

    fn ident(&mut self) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if t.tok.is_ident() => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.syntax("identifier")),
        }
    }

    fn span(&self, first: usize, last: usize) -> Span {
        let a = &self.toks[first];
        let b = &self.toks[last];
        Span { file: self.file.to_string(), start_line: a.line, end_line: b.end_line, start: a.start, end: b.end }
    }

    fn source(&self, span: &Span) -> Option<String> {
        if self.text.is_empty() {
            None
        } else {
            Some(self.text[span.start..span.end].to_string())
        }
    }

    fn toks_between(&self, from: usize, to: usize) -> Vec<Tok> {
        self.toks[from..to].iter().map(|t| t.tok.clone()).collect()
    }

    // ---- top level -------------------------------------------------------

    fn elements(&mut self, in_branch: bool) -> Result<Vec<Element>, ParseError> {
        let mut out = Vec::new();
        while let Some(t) = self.peek() {
            if t.kind() == TokKind::Directive {
                let (word, _) = directive_parts(t.text());
                if word == "else" || word == "endif" {
                    if in_branch {
                        break;
                    }
                    return Err(ParseError::UnbalancedDirective { file: self.file.to_string(), line: t.line });
                }
                out.push(self.directive_element()?);
            } else {
                out.push(self.declaration()?);
            }
        }
        Ok(out)
    }

    fn directive_element(&mut self) -> Result<Element, ParseError> {
        let first = self.pos;
        let t = self.peek().expect("directive");
        let (word, rest) = directive_parts(t.text());
        match word.as_str() {
            "include" => {
                self.pos += 1;
                let rest = rest.trim();
                let (target, system) = if let Some(r) = rest.strip_prefix('"') {
                    (r.split('"').next().unwrap_or_default().to_string(), false)
                } else if let Some(r) = rest.strip_prefix('<') {
                    (r.split('>').next().unwrap_or_default().to_string(), true)
                } else {
                    return Err(self.unsupported(t.line, "computed #include"));
                };
                let span = self.span(first, first);
                Ok(Element { name: None, source: self.source(&span), span, detail: Detail::Include { target, system } })
            }
            "define" => {
                self.pos += 1;
                let rest = rest.trim_start();
                let name: String = rest.chars().take_while(|c| *c == '_' || c.is_ascii_alphanumeric()).collect();
                if name.is_empty() {
                    return Err(self.syntax("macro name"));
                }
                if rest[name.len()..].starts_with('(') {
                    return Err(self.unsupported(t.line, "function-like macro"));
                }
                let body = rest[name.len()..].replace("\\\n", " ");
                let value: Vec<Tok> = tokenize(self.file, &body)
                    .map_err(|_| self.syntax("macro body"))?
                    .into_iter()
                    .filter(|t| t.kind() != TokKind::Comment)
                    .map(|t| t.tok)
                    .collect();
                let span = self.span(first, first);
                Ok(Element { name: Some(name), source: self.source(&span), span, detail: Detail::Constant { value } })
            }
            "ifdef" | "ifndef" => {
                let condition = rest.trim().to_string();
                if !super::lexer::is_identifier(&condition) {
                    return Err(self.unsupported(t.line, "conditional on an expression"));
                }
                let negated = word == "ifndef";
                let mut branches = Vec::new();
                let mut directive = t.text().trim_end().to_string();
                self.pos += 1;
                loop {
                    let elements = self.elements(true)?;
                    branches.push(Branch { directive: directive.clone(), elements });
                    let Some(end) = self.peek() else {
                        return Err(ParseError::UnbalancedDirective { file: self.file.to_string(), line: t.line });
                    };
                    let (w, _) = directive_parts(end.text());
                    self.pos += 1;
                    if w == "else" {
                        if branches.len() > 1 {
                            return Err(ParseError::UnbalancedDirective { file: self.file.to_string(), line: end.line });
                        }
                        directive = end.text().trim_end().to_string();
                        continue;
                    }
                    break;
                }
                let span = self.span(first, self.pos - 1);
                Ok(Element {
                    name: None,
                    source: self.source(&span),
                    span,
                    detail: Detail::Conditional { condition, negated, branches },
                })
            }
            "if" | "elif" => Err(self.unsupported(t.line, "#if expression")),
            other => Err(self.unsupported(t.line, &format!("#{other} directive"))),
        }
    }

    fn declaration(&mut self) -> Result<Element, ParseError> {
        let first = self.pos;
        let start_line = self.line();
        let spec = self.specifiers()?;
        if spec.base.is_empty() && !spec.is_typedef {
            return Err(self.syntax("declaration"));
        }
        if self.is(";") {
            // bare struct/enum definition
            self.pos += 1;
            let span = self.span(first, self.pos - 1);
            if spec.tags.is_empty() {
                return Err(self.syntax("declarator"));
            }
            return Ok(Element {
                name: spec.tags.first().cloned(),
                source: self.source(&span),
                span,
                detail: Detail::Type(TypeDef {
                    tokens: self.toks_between(first, self.pos - 1),
                    aliases: Vec::new(),
                    tags: spec.tags,
                    enumerators: spec.enumerators,
                }),
            });
        }

        let mut declarators = Vec::new();
        loop {
            let d = self.declarator(false)?;
            let Some(name) = d.name.clone() else {
                return Err(self.syntax("identifier"));
            };
            if let Some((params, variadic)) = d.function.clone() {
                if spec.is_typedef {
                    return Err(self.unsupported(d.line, "function typedef"));
                }
                if !declarators.is_empty() {
                    return Err(self.syntax("';'"));
                }
                let header = self.toks_between(first, self.pos);
                let return_type = d.ty(&spec.base, false);
                let body = if self.is("{") {
                    Some(self.block_body()?)
                } else {
                    self.expect(";")?;
                    None
                };
                let span = self.span(first, self.pos - 1);
                return Ok(Element {
                    name: Some(name),
                    source: self.source(&span),
                    span,
                    detail: Detail::Function(Function {
                        header,
                        return_type,
                        params,
                        variadic,
                        is_static: spec.is_static,
                        body,
                    }),
                });
            }
            let init = if self.eat("=") { Some(self.initializer()?) } else { None };
            if spec.is_typedef && init.is_some() {
                return Err(self.syntax("';'"));
            }
            declarators.push(Declarator { name, ty: d.ty(&spec.base, false), init });
            if self.eat(",") {
                continue;
            }
            self.expect(";")?;
            break;
        }
        let span = self.span(first, self.pos - 1);
        let tokens = self.toks_between(first, self.pos - 1);
        let name = declarators.first().map(|d| d.name.clone());
        let detail = if spec.is_typedef {
            Detail::Type(TypeDef {
                tokens,
                aliases: declarators.into_iter().map(|d| (d.name, d.ty)).collect(),
                tags: spec.tags,
                enumerators: spec.enumerators,
            })
        } else {
            Detail::Variable(Variable {
                tokens,
                declarators,
                is_extern: spec.is_extern,
                is_static: spec.is_static,
                tags: spec.tags,
                enumerators: spec.enumerators,
            })
        };
        let _ = start_line;
        Ok(Element { name, source: self.source(&span), span, detail })
    }

    fn specifiers(&mut self) -> Result<Specifiers, ParseError> {
        let mut words: Vec<String> = Vec::new();
        let mut spec = Specifiers {
            base: String::new(),
            is_static: false,
            is_extern: false,
            is_typedef: false,
            tags: Vec::new(),
            enumerators: Vec::new(),
        };
        let mut seen_type = false;
        while let Some(t) = self.peek() {
            let text = t.text();
            if t.tok.is("typedef") {
                spec.is_typedef = true;
                self.pos += 1;
            } else if STORAGE.contains(&text) && t.kind() == TokKind::Keyword {
                spec.is_static |= text == "static";
                spec.is_extern |= text == "extern";
                self.pos += 1;
            } else if QUALIFIERS.contains(&text) && t.kind() == TokKind::Keyword {
                words.push(text.to_string());
                self.pos += 1;
            } else if TYPE_WORDS.contains(&text) && t.kind() == TokKind::Keyword {
                words.push(text.to_string());
                seen_type = true;
                self.pos += 1;
            } else if t.tok.is("struct") || t.tok.is("union") || t.tok.is("enum") {
                let is_enum = text == "enum";
                self.pos += 1;
                let tag = if self.peek().is_some_and(|t| t.tok.is_ident()) {
                    Some(self.ident()?.text().to_string())
                } else {
                    None
                };
                if self.is("{") {
                    if is_enum {
                        spec.enumerators.extend(self.enum_body()?);
                    } else {
                        self.struct_body()?;
                    }
                    if let Some(tag) = &tag {
                        spec.tags.push(tag.clone());
                    }
                } else if tag.is_none() {
                    return Err(self.syntax("tag or body"));
                }
                words.push(format!("{} {}", text, tag.unwrap_or_else(|| "<anon>".into())));
                seen_type = true;
            } else if t.tok.is_ident() && !seen_type {
                // typedef name used as the type
                words.push(text.to_string());
                seen_type = true;
                self.pos += 1;
            } else {
                break;
            }
        }
        spec.base = words.join(" ");
        Ok(spec)
    }

    fn struct_body(&mut self) -> Result<(), ParseError> {
        self.expect("{")?;
        while !self.is("}") {
            if self.peek().is_none() {
                return Err(self.syntax("'}'"));
            }
            let spec = self.specifiers()?;
            if spec.base.is_empty() {
                return Err(self.syntax("member declaration"));
            }
            loop {
                let d = self.declarator(false)?;
                if d.function.is_some() {
                    return Err(self.unsupported(d.line, "function member"));
                }
                if self.eat(":") {
                    // bit-field width
                    self.initializer()?;
                }
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(";")?;
        }
        self.expect("}")?;
        Ok(())
    }

    fn enum_body(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect("{")?;
        let mut names = Vec::new();
        while !self.is("}") {
            names.push(self.ident()?.text().to_string());
            if self.eat("=") {
                self.initializer()?;
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(names)
    }

    fn declarator(&mut self, abstract_ok: bool) -> Result<RawDeclarator, ParseError> {
        let line = self.line();
        let mut pointers = 0;
        while self.eat("*") {
            pointers += 1;
            while QUALIFIERS.iter().any(|q| self.is(q)) {
                self.pos += 1;
            }
        }
        if self.is("(") {
            if self.peek_at(1).is_some_and(|t| t.tok.is("*")) {
                return Err(self.unsupported(line, "function pointer"));
            }
            return Err(self.syntax("declarator"));
        }
        let name = if self.peek().is_some_and(|t| t.tok.is_ident()) {
            Some(self.ident()?.text().to_string())
        } else if abstract_ok {
            None
        } else {
            return Err(self.syntax("identifier"));
        };
        let mut arrays = Vec::new();
        let mut function = None;
        loop {
            if self.is("[") {
                self.pos += 1;
                let from = self.pos;
                let mut depth = 0;
                while let Some(t) = self.peek() {
                    if t.tok.is("[") {
                        depth += 1;
                    } else if t.tok.is("]") {
                        if depth == 0 {
                            break;
                        }
                        depth -= 1;
                    }
                    self.pos += 1;
                }
                let dim = super::printer::join_tokens(&self.toks_between(from, self.pos));
                self.expect("]")?;
                arrays.push(dim);
            } else if self.is("(") && function.is_none() && arrays.is_empty() {
                function = Some(self.params()?);
            } else if self.is("(") {
                return Err(self.unsupported(line, "function pointer"));
            } else {
                break;
            }
        }
        Ok(RawDeclarator { name, pointers, arrays, function, line })
    }

    fn params(&mut self) -> Result<(Vec<Param>, bool), ParseError> {
        self.expect("(")?;
        let mut params = Vec::new();
        let mut variadic = false;
        if self.eat(")") {
            return Ok((params, false));
        }
        if self.is("void") && self.peek_at(1).is_some_and(|t| t.tok.is(")")) {
            self.pos += 2;
            return Ok((params, false));
        }
        loop {
            if self.eat("...") {
                variadic = true;
                break;
            }
            let spec = self.specifiers()?;
            if spec.base.is_empty() {
                return Err(self.syntax("parameter type"));
            }
            let d = self.declarator(true)?;
            if d.function.is_some() {
                return Err(self.unsupported(d.line, "function pointer"));
            }
            params.push(Param { name: d.name.clone(), ty: d.ty(&spec.base, true) });
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok((params, variadic))
    }

    /// Tokens of an initializer or constant expression, up to a top-level
    /// `,` `;` or unbalanced closer.
    fn initializer(&mut self) -> Result<Vec<Tok>, ParseError> {
        let from = self.pos;
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            if t.kind() == TokKind::Punct {
                match t.text() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => {
                        if depth == 0 {
                            break;
                        }
                        depth -= 1;
                    }
                    "," | ";" if depth == 0 => break,
                    _ => {}
                }
            } else if t.kind() == TokKind::Directive {
                return Err(self.syntax("';'"));
            }
            self.pos += 1;
        }
        if self.pos == from {
            return Err(self.syntax("expression"));
        }
        Ok(self.toks_between(from, self.pos))
    }

    // ---- statements ------------------------------------------------------

    fn block_body(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.is("}") {
            if self.peek().is_none() {
                return Err(self.syntax("'}'"));
            }
            out.push(self.statement()?);
        }
        self.pos += 1;
        Ok(out)
    }

    fn at_declaration(&self) -> bool {
        let Some(t) = self.peek() else { return false };
        if t.kind() == TokKind::Keyword {
            let w = t.text();
            return TYPE_WORDS.contains(&w)
                || QUALIFIERS.contains(&w)
                || STORAGE.contains(&w)
                || matches!(w, "struct" | "union" | "enum" | "typedef");
        }
        if !t.tok.is_ident() {
            return false;
        }
        // `T x` or `T *x ...` with T a typedef name
        let mut i = 1;
        while self.peek_at(i).is_some_and(|t| t.tok.is("*")) {
            i += 1;
        }
        let Some(n) = self.peek_at(i) else { return false };
        if !n.tok.is_ident() {
            return false;
        }
        if i == 1 {
            return true;
        }
        self.peek_at(i + 1).is_some_and(|t| [";", "=", ",", "["].iter().any(|p| t.tok.is(p)))
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let start = self.pos;
        let start_line = self.line();
        let kind = self.statement_kind()?;
        let end_line = self.toks[self.pos.max(start + 1) - 1].end_line;
        Ok(Stmt { kind, start_line, end_line })
    }

    fn paren_tokens(&mut self) -> Result<Vec<Tok>, ParseError> {
        self.expect("(")?;
        let from = self.pos;
        let mut depth = 0;
        while let Some(t) = self.peek() {
            if t.tok.is("(") {
                depth += 1;
            } else if t.tok.is(")") {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            } else if t.kind() == TokKind::Directive || t.tok.is(";") || t.tok.is("{") {
                return Err(self.syntax("')'"));
            }
            self.pos += 1;
        }
        let toks = self.toks_between(from, self.pos);
        self.expect(")")?;
        Ok(toks)
    }

    fn expression_until_semi(&mut self) -> Result<Vec<Tok>, ParseError> {
        let from = self.pos;
        let mut depth = 0;
        while let Some(t) = self.peek() {
            match t.kind() {
                TokKind::Directive => return Err(self.syntax("';'")),
                TokKind::Punct => match t.text() {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth -= 1,
                    ";" if depth == 0 => break,
                    "{" | "}" if depth == 0 => return Err(self.syntax("';'")),
                    _ => {}
                },
                _ => {}
            }
            self.pos += 1;
        }
        let toks = self.toks_between(from, self.pos);
        self.expect(";")?;
        Ok(toks)
    }

    fn statement_kind(&mut self) -> Result<StmtKind, ParseError> {
        let Some(t) = self.peek() else { return Err(self.syntax("statement")) };
        let line = t.line;
        if t.kind() == TokKind::Directive {
            return self.conditional_statement();
        }
        if t.tok.is_ident() && self.peek_at(1).is_some_and(|n| n.tok.is(":")) {
            return Err(self.unsupported(line, "label"));
        }
        if t.kind() == TokKind::Keyword {
            match t.text() {
                "if" => {
                    self.pos += 1;
                    let cond = self.paren_tokens()?;
                    let then = Box::new(self.statement()?);
                    let otherwise = if self.eat("else") { Some(Box::new(self.statement()?)) } else { None };
                    return Ok(StmtKind::If { cond, then, otherwise });
                }
                "while" => {
                    self.pos += 1;
                    let cond = self.paren_tokens()?;
                    let body = Box::new(self.statement()?);
                    return Ok(StmtKind::While { cond, body });
                }
                "do" => {
                    self.pos += 1;
                    let body = Box::new(self.statement()?);
                    self.expect("while")?;
                    let cond = self.paren_tokens()?;
                    self.expect(";")?;
                    return Ok(StmtKind::DoWhile { body, cond });
                }
                "for" => {
                    self.pos += 1;
                    self.expect("(")?;
                    let init = self.for_clause(";")?;
                    let cond = self.for_clause(";")?;
                    let step = self.for_clause(")")?;
                    let body = Box::new(self.statement()?);
                    return Ok(StmtKind::For { init, cond, step, body });
                }
                "switch" => {
                    self.pos += 1;
                    let cond = self.paren_tokens()?;
                    let body = Box::new(self.statement()?);
                    return Ok(StmtKind::Switch { cond, body });
                }
                "case" => {
                    self.pos += 1;
                    let from = self.pos;
                    while !self.is(":") {
                        if self.peek().is_none() || self.is(";") {
                            return Err(self.syntax("':'"));
                        }
                        self.pos += 1;
                    }
                    let toks = self.toks_between(from, self.pos);
                    self.pos += 1;
                    return Ok(StmtKind::Case(toks));
                }
                "default" => {
                    self.pos += 1;
                    self.expect(":")?;
                    return Ok(StmtKind::Default);
                }
                "return" => {
                    self.pos += 1;
                    if self.eat(";") {
                        return Ok(StmtKind::Return(None));
                    }
                    return Ok(StmtKind::Return(Some(self.expression_until_semi()?)));
                }
                "break" => {
                    self.pos += 1;
                    self.expect(";")?;
                    return Ok(StmtKind::Break);
                }
                "continue" => {
                    self.pos += 1;
                    self.expect(";")?;
                    return Ok(StmtKind::Continue);
                }
                "goto" => return Err(self.unsupported(line, "goto")),
                "typedef" => return Err(self.unsupported(line, "local typedef")),
                _ => {}
            }
        }
        if self.is("{") {
            return Ok(StmtKind::Block(self.block_body()?));
        }
        if self.eat(";") {
            return Ok(StmtKind::Empty);
        }
        if self.at_declaration() {
            let from = self.pos;
            let spec = self.specifiers()?;
            let mut declarators = Vec::new();
            loop {
                let d = self.declarator(false)?;
                if d.function.is_some() {
                    return Err(self.unsupported(d.line, "local function declaration"));
                }
                let init = if self.eat("=") { Some(self.initializer()?) } else { None };
                declarators.push(Declarator {
                    name: d.name.clone().expect("named declarator"),
                    ty: d.ty(&spec.base, false),
                    init,
                });
                if !self.eat(",") {
                    break;
                }
            }
            let tokens = self.toks_between(from, self.pos);
            self.expect(";")?;
            return Ok(StmtKind::Decl { tokens, declarators });
        }
        Ok(StmtKind::Expr(self.expression_until_semi()?))
    }

    fn for_clause(&mut self, end: &str) -> Result<Vec<Tok>, ParseError> {
        let from = self.pos;
        let mut depth = 0;
        while let Some(t) = self.peek() {
            if t.tok.is("(") {
                depth += 1;
            } else if t.tok.is(")") {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            } else if t.tok.is(";") && depth == 0 {
                break;
            } else if t.tok.is("{") || t.kind() == TokKind::Directive {
                return Err(self.syntax(&format!("'{end}'")));
            }
            self.pos += 1;
        }
        let toks = self.toks_between(from, self.pos);
        self.expect(end)?;
        Ok(toks)
    }

    fn conditional_statement(&mut self) -> Result<StmtKind, ParseError> {
        let t = self.peek().expect("directive");
        let (word, rest) = directive_parts(t.text());
        match word.as_str() {
            "ifdef" | "ifndef" if super::lexer::is_identifier(rest.trim()) => {}
            "if" | "elif" => return Err(self.unsupported(t.line, "#if expression")),
            "else" | "endif" => {
                return Err(ParseError::UnbalancedDirective { file: self.file.to_string(), line: t.line })
            }
            other => return Err(self.unsupported(t.line, &format!("#{other} directive in function body"))),
        }
        self.pos += 1;
        let mut branches = Vec::new();
        let mut directive = t.text().trim_end().to_string();
        loop {
            let mut body = Vec::new();
            loop {
                match self.peek() {
                    None => {
                        return Err(ParseError::UnbalancedDirective { file: self.file.to_string(), line: t.line })
                    }
                    Some(n) if n.kind() == TokKind::Directive => {
                        let (w, _) = directive_parts(n.text());
                        if w == "else" || w == "endif" {
                            break;
                        }
                        body.push(self.statement()?);
                    }
                    Some(n) if n.tok.is("}") => {
                        return Err(ParseError::UnbalancedDirective { file: self.file.to_string(), line: t.line })
                    }
                    Some(_) => body.push(self.statement()?),
                }
            }
            branches.push(StmtBranch { directive: directive.clone(), body });
            let end = self.peek().expect("branch end");
            self.pos += 1;
            let (w, _) = directive_parts(end.text());
            if w == "else" && branches.len() == 1 {
                directive = end.text().trim_end().to_string();
                continue;
            }
            if w == "else" {
                return Err(ParseError::UnbalancedDirective { file: self.file.to_string(), line: end.line });
            }
            break;
        }
        Ok(StmtKind::Conditional { branches })
    }
}

/// Splits a directive line into its keyword and the remaining text, with any
/// trailing `//` comment removed.
pub fn directive_parts(line: &str) -> (String, String) {
    let body = line.trim_start().trim_start_matches('#').trim_start();
    let word: String = body.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    let mut rest = body[word.len()..].to_string();
    if let Some(i) = rest.find("//") {
        rest.truncate(i);
    }
    (word, rest.trim().to_string())
}
