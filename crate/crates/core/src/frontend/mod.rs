//! Lexing, parsing and printing of the supported C subset.
//!
//! The subset covers C89-style functions, globals, typedefs, structs and
//! enums, `#include "..."` of project headers, object-like `#define`s, and
//! `#ifdef`/`#ifndef`/`#else`/`#endif` with a single identifier. Function
//! pointers, `#if` expressions, function-like macros and `goto` are
//! rejected with [`ParseError::Unsupported`].

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
mod project;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{Declarator, Detail, Element, ElementKind, Function, Param, Span, Stmt, StmtKind};
pub use lexer::{Tok, TokKind};
pub use parser::{parse_file, parse_statements};
pub use printer::{element_text, join_tokens, line_normalize, normalize, print};
pub use project::{read_units as project_units, resolve_type_with, LoadError, ProjectModel, SourceUnit, UnitKind};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ParseError {
    #[error("{file}:{line}: syntax error, expected {expected}")]
    Syntax { file: String, line: u32, expected: String },
    #[error("{file}:{line}: unsupported construct: {construct}")]
    Unsupported { file: String, line: u32, construct: String },
    #[error("{file}:{line}: unbalanced preprocessor directive")]
    UnbalancedDirective { file: String, line: u32 },
}

/// Parsed file: top-level elements plus the text around them.
///
/// `trivia[i]` is the text preceding `elements[i]`; the final entry is the
/// text after the last element, so `trivia.len() == elements.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ast {
    pub path: String,
    pub elements: Vec<Element>,
    pub trivia: Vec<String>,
}

impl Ast {
    pub fn new(path: &str) -> Self {
        Ast { path: path.to_string(), elements: Vec::new(), trivia: vec![String::new()] }
    }

    /// Removes an element together with the rest of its line and one
    /// following blank line.
    pub fn remove(&mut self, index: usize) -> Element {
        let removed = self.elements.remove(index);
        let after = self.trivia.remove(index + 1);
        let mut rest = after.as_str();
        if let Some(nl) = rest.find('\n') {
            if rest[..nl].trim().is_empty() {
                rest = &rest[nl + 1..];
                if let Some(nl2) = rest.find('\n') {
                    if rest[..nl2].trim().is_empty() {
                        rest = &rest[nl2 + 1..];
                    }
                }
            }
        }
        let mut merged = std::mem::take(&mut self.trivia[index]);
        merged.push_str(rest);
        if index == self.elements.len() {
            // removed the last element: keep a single final newline
            let trimmed = merged.trim_end_matches(['\n', ' ', '\t']);
            merged = if trimmed.is_empty() && self.elements.is_empty() {
                String::new()
            } else {
                format!("{trimmed}\n")
            };
        }
        self.trivia[index] = merged;
        removed
    }

    /// Appends an element after one blank line.
    pub fn push(&mut self, element: Element) {
        let last = self.trivia.pop().unwrap_or_default();
        let lead = if self.elements.is_empty() {
            last
        } else if last.ends_with('\n') {
            format!("{last}\n")
        } else {
            format!("{last}\n\n")
        };
        self.trivia.push(lead);
        self.elements.push(element);
        self.trivia.push("\n".to_string());
    }

    /// Every element, descending into conditional blocks.
    pub fn all_elements(&self) -> Vec<&Element> {
        self.elements.iter().flat_map(|e| e.flatten()).collect()
    }

    pub fn find(&self, name: &str, kind: ElementKind) -> Option<&Element> {
        self.all_elements().into_iter().find(|e| e.kind() == kind && e.name.as_deref() == Some(name))
    }

    pub fn print(&self) -> String {
        printer::print(self)
    }
}
