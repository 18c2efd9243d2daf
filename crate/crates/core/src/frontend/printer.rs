//! Printing of syntax trees.
//!
//! Unmodified elements are emitted from their original text. Modified or
//! synthesized ones go through the pretty printer: one statement per line,
//! four-space indentation. Normalization is the same printer with no
//! indentation.

use super::ast::*;
use super::lexer::{Tok, TokKind};
use super::Ast;

const INDENT: &str = "    ";

/// Joins tokens with canonical spacing.
pub fn join_tokens(tokens: &[Tok]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && needs_space(tokens, i) {
            out.push(' ');
        }
        out.push_str(&t.text);
    }
    out
}

fn is_unary_position(tokens: &[Tok], i: usize) -> bool {
    match i.checked_sub(1).map(|j| &tokens[j]) {
        None => true,
        Some(p) => match p.kind {
            TokKind::Keyword => true,
            TokKind::Punct => !is_operand_end(p),
            _ => false,
        },
    }
}

fn needs_space(tokens: &[Tok], i: usize) -> bool {
    let prev = &tokens[i - 1];
    let next = &tokens[i];
    if next.kind == TokKind::Punct && matches!(next.text.as_str(), ";" | "," | ")" | "]" | "[" | "." | "->") {
        return false;
    }
    if prev.kind == TokKind::Punct && matches!(prev.text.as_str(), "(" | "[" | "." | "->" | "!" | "~") {
        return false;
    }
    if next.is("(") && (prev.is_ident() || prev.is(")") || prev.is("]") || prev.is("sizeof")) {
        return false;
    }
    // cast: `(char *)q`
    if prev.is(")") && matches!(next.kind, TokKind::Ident | TokKind::Number | TokKind::Str | TokKind::Char) {
        return false;
    }
    if (next.is("++") || next.is("--")) && is_operand_end(prev) && !(prev.is("++") || prev.is("--")) {
        return false;
    }
    if (prev.is("++") || prev.is("--")) && is_unary_position(tokens, i - 1) {
        return false;
    }
    if matches!(prev.text.as_str(), "*" | "&" | "-" | "+") && prev.kind == TokKind::Punct && is_unary_position(tokens, i - 1)
    {
        return false;
    }
    true
}

/// Prints an AST. Byte-identical to the parsed text when unmodified.
pub fn print(ast: &Ast) -> String {
    let mut out = String::new();
    for (i, e) in ast.elements.iter().enumerate() {
        out.push_str(&ast.trivia[i]);
        out.push_str(&element_text(e));
    }
    out.push_str(ast.trivia.last().map(String::as_str).unwrap_or(""));
    out
}

/// The element's original text, or its pretty-printed form if modified.
pub fn element_text(e: &Element) -> String {
    match &e.source {
        Some(s) => s.clone(),
        None => pretty_element(e, INDENT),
    }
}

/// Canonical text of an element: one statement per line, single spaces,
/// no comments, no blank lines, no indentation.
pub fn normalize(e: &Element) -> String {
    pretty_element(e, "")
}

/// Comment-preserving line normalization used for text-line comparison:
/// whitespace runs collapse to one space, blank lines vanish, comments stay.
pub fn line_normalize(text: &str) -> String {
    let mut lines = Vec::new();
    for line in text.lines() {
        let collapsed = line.split_whitespace().collect::<Vec<_>>().join(" ");
        if !collapsed.is_empty() {
            lines.push(collapsed);
        }
    }
    // token-level spacing so that `x=1` and `x = 1` agree
    let joined = lines.join("\n");
    match super::lexer::tokenize("", &joined) {
        Ok(toks) => {
            let mut out = String::new();
            let mut last_line = 0;
            let mut run: Vec<Tok> = Vec::new();
            let flush = |run: &mut Vec<Tok>, out: &mut String| {
                if !run.is_empty() {
                    if !out.is_empty() {
                        out.push('\n');
                    }
                    out.push_str(&join_tokens(run));
                    run.clear();
                }
            };
            for t in toks {
                if t.line != last_line {
                    flush(&mut run, &mut out);
                    last_line = t.line;
                }
                if t.kind() == TokKind::Comment || t.kind() == TokKind::Directive {
                    flush(&mut run, &mut out);
                    if !out.is_empty() {
                        out.push('\n');
                    }
                    out.push_str(&t.text().split_whitespace().collect::<Vec<_>>().join(" "));
                } else {
                    run.push(t.tok);
                }
            }
            flush(&mut run, &mut out);
            out
        }
        Err(_) => joined,
    }
}

pub fn pretty_element(e: &Element, indent: &str) -> String {
    match &e.detail {
        Detail::Include { target, system } => {
            if *system {
                format!("#include <{target}>")
            } else {
                format!("#include \"{target}\"")
            }
        }
        Detail::Constant { value } => {
            let name = e.name.as_deref().unwrap_or_default();
            if value.is_empty() {
                format!("#define {name}")
            } else {
                format!("#define {name} {}", join_tokens(value))
            }
        }
        Detail::Type(t) => format!("{};", join_tokens(&t.tokens)),
        Detail::Variable(v) => format!("{};", join_tokens(&v.tokens)),
        Detail::Function(f) => {
            let header = join_tokens(&f.header);
            match &f.body {
                None => format!("{header};"),
                Some(body) => {
                    let mut out = header;
                    out.push_str("\n{\n");
                    for s in body {
                        print_stmt(s, indent, 1, &mut out);
                    }
                    out.push('}');
                    out
                }
            }
        }
        Detail::Conditional { branches, .. } => {
            let mut out = String::new();
            for b in branches {
                out.push_str(&directive_line(&b.directive));
                out.push('\n');
                for child in &b.elements {
                    out.push_str(&pretty_element(child, indent));
                    out.push('\n');
                }
            }
            out.push_str("#endif");
            out
        }
    }
}

fn directive_line(d: &str) -> String {
    let (word, rest) = super::parser::directive_parts(d);
    if rest.is_empty() {
        format!("#{word}")
    } else {
        format!("#{word} {rest}")
    }
}

fn push_line(out: &mut String, indent: &str, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str(indent);
    }
    out.push_str(text);
    out.push('\n');
}

/// Prints statements at the given depth, one per line.
pub fn print_stmts(stmts: &[Stmt], indent: &str, depth: usize) -> String {
    let mut out = String::new();
    for s in stmts {
        print_stmt(s, indent, depth, &mut out);
    }
    out
}

/// Prints a statement with four-space indentation at `depth`.
pub fn stmt_text(s: &Stmt, depth: usize) -> String {
    let mut out = String::new();
    print_stmt(s, INDENT, depth, &mut out);
    out
}

fn print_stmt(s: &Stmt, indent: &str, depth: usize, out: &mut String) {
    match &s.kind {
        StmtKind::Expr(t) => push_line(out, indent, depth, &format!("{};", join_tokens(t))),
        StmtKind::Decl { tokens, .. } => push_line(out, indent, depth, &format!("{};", join_tokens(tokens))),
        StmtKind::Return(None) => push_line(out, indent, depth, "return;"),
        StmtKind::Return(Some(t)) => push_line(out, indent, depth, &format!("return {};", join_tokens(t))),
        StmtKind::Break => push_line(out, indent, depth, "break;"),
        StmtKind::Continue => push_line(out, indent, depth, "continue;"),
        StmtKind::Empty => push_line(out, indent, depth, ";"),
        StmtKind::Case(t) => push_line(out, indent, depth, &format!("case {}:", join_tokens(t))),
        StmtKind::Default => push_line(out, indent, depth, "default:"),
        StmtKind::Block(stmts) => {
            push_line(out, indent, depth, "{");
            for st in stmts {
                print_stmt(st, indent, depth + 1, out);
            }
            push_line(out, indent, depth, "}");
        }
        StmtKind::If { cond, then, otherwise } => {
            let head = format!("if ({})", join_tokens(cond));
            print_headed(&head, then, indent, depth, out);
            let mut tail = otherwise.as_deref();
            while let Some(o) = tail {
                if let StmtKind::If { cond, then, otherwise } = &o.kind {
                    let head = format!("else if ({})", join_tokens(cond));
                    print_headed(&head, then, indent, depth, out);
                    tail = otherwise.as_deref();
                } else {
                    print_headed("else", o, indent, depth, out);
                    tail = None;
                }
            }
        }
        StmtKind::While { cond, body } => {
            print_headed(&format!("while ({})", join_tokens(cond)), body, indent, depth, out)
        }
        StmtKind::For { init, cond, step, body } => {
            let mut head = String::from("for (");
            head.push_str(&join_tokens(init));
            head.push(';');
            if !cond.is_empty() {
                head.push(' ');
                head.push_str(&join_tokens(cond));
            }
            head.push(';');
            if !step.is_empty() {
                head.push(' ');
                head.push_str(&join_tokens(step));
            }
            head.push(')');
            print_headed(&head, body, indent, depth, out)
        }
        StmtKind::Switch { cond, body } => {
            print_headed(&format!("switch ({})", join_tokens(cond)), body, indent, depth, out)
        }
        StmtKind::DoWhile { body, cond } => {
            print_headed("do", body, indent, depth, out);
            push_line(out, indent, depth, &format!("while ({});", join_tokens(cond)));
        }
        StmtKind::Conditional { branches } => {
            for b in branches {
                push_line(out, indent, 0, &directive_line(&b.directive));
                for st in &b.body {
                    print_stmt(st, indent, depth, out);
                }
            }
            push_line(out, indent, 0, "#endif");
        }
    }
}

fn print_headed(head: &str, body: &Stmt, indent: &str, depth: usize, out: &mut String) {
    push_line(out, indent, depth, head);
    match &body.kind {
        StmtKind::Block(_) => print_stmt(body, indent, depth, out),
        _ => print_stmt(body, indent, depth + 1, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_file;

    fn first(src: &str) -> Element {
        parse_file("t.c", src).unwrap().elements.remove(0)
    }

    #[test]
    fn whitespace_invariance() {
        assert_eq!(normalize(&first("int  x=1 ;")), normalize(&first("int x = 1;")));
        assert_eq!(normalize(&first("int x=1; /*c*/")), "int x = 1;");
    }

    #[test]
    fn indentation_invariance() {
        let a = first("int f(int n)\n{\n    if (n) {\n        return 1;\n    }\n    return 0;\n}\n");
        let b = first("int f(int n)\n{\n  if (n) {\n\t\t  return 1;\n  }\n  return 0;\n}\n");
        assert_eq!(normalize(&a), normalize(&b));
        assert_eq!(normalize(&a), "int f(int n)\n{\nif (n)\n{\nreturn 1;\n}\nreturn 0;\n}");
    }

    #[test]
    fn spacing_rules() {
        let e = first("int f(char **argv){ int *p = &argv[0][1]; x = -y * *p; i++; --j; f(a, b); s.t->u = (char *)q; return sizeof(int); }");
        let text = normalize(&e);
        assert!(text.contains("int *p = &argv[0][1];"), "{text}");
        assert!(text.contains("x = -y * *p;"), "{text}");
        assert!(text.contains("i++;\n--j;\nf(a, b);"), "{text}");
        assert!(text.contains("s.t->u = (char *)q;"), "{text}");
        assert!(text.contains("return sizeof(int);"), "{text}");
        assert!(text.starts_with("int f(char **argv)\n"), "{text}");
    }

    #[test]
    fn pretty_uses_four_spaces() {
        let mut e = first("void f(int n){while(n){n--;}if(n)g();else h();}");
        e.touch();
        assert_eq!(
            element_text(&e),
            "void f(int n)\n{\n    while (n)\n    {\n        n--;\n    }\n    if (n)\n        g();\n    else\n        h();\n}"
        );
    }

    #[test]
    fn line_normalize_keeps_comments() {
        let a = line_normalize("int f(void) {\n  /* one */\n  return  1;\n}\n");
        let b = line_normalize("int f(void) {\n/* one */\n\n return 1;\n}");
        let c = line_normalize("int f(void) {\n/* two */\n return 1;\n}");
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
