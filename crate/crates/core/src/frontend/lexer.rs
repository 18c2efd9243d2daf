//! Tokenizer for the supported C subset.
//!
//! Every byte of the input is covered by either a token or the whitespace
//! between tokens, so byte offsets on tokens are enough to rebuild the file.

use serde::{Deserialize, Serialize};

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokKind {
    Ident,
    Keyword,
    Number,
    Char,
    Str,
    Punct,
    /// A whole preprocessor line, including continuations.
    Directive,
    Comment,
}

/// A token as stored in the syntax tree: kind and spelling only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tok {
    pub kind: TokKind,
    pub text: String,
}

impl Tok {
    pub fn new(kind: TokKind, text: impl Into<String>) -> Self {
        Tok { kind, text: text.into() }
    }

    pub fn ident(text: impl Into<String>) -> Self {
        Tok::new(TokKind::Ident, text)
    }

    pub fn punct(text: impl Into<String>) -> Self {
        Tok::new(TokKind::Punct, text)
    }

    pub fn is(&self, text: &str) -> bool {
        self.text == text && matches!(self.kind, TokKind::Punct | TokKind::Keyword)
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokKind::Ident
    }
}

/// A lexed token with its location in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub end_line: u32,
}

impl Token {
    pub fn text(&self) -> &str {
        &self.tok.text
    }

    pub fn kind(&self) -> TokKind {
        self.tok.kind
    }
}

pub const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "inline", "int", "long", "register", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void",
    "volatile", "while",
];

const PUNCTS: &[&str] = &[
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##", "+", "-", "*", "/", "%", "<", ">", "=", "!",
    "~", "&", "|", "^", "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}", "#",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

pub fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c == '_' || c.is_ascii_alphanumeric()) && !is_keyword(word)
}

/// Splits `text` into tokens. Comments and directives are kept as tokens.
pub fn tokenize(file: &str, text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0usize;
    let mut line = 1u32;
    let mut at_line_start = true;

    while pos < bytes.len() {
        let c = bytes[pos];
        if c == b'\n' {
            line += 1;
            pos += 1;
            at_line_start = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let start_line = line;
        let kind;
        if c == b'#' && at_line_start {
            // directive runs to the end of the line, honouring `\` continuations
            while pos < bytes.len() && bytes[pos] != b'\n' {
                if bytes[pos] == b'\\' && pos + 1 < bytes.len() && bytes[pos + 1] == b'\n' {
                    pos += 2;
                    line += 1;
                    continue;
                }
                if bytes[pos] == b'/' && pos + 1 < bytes.len() && bytes[pos + 1] == b'*' {
                    // a block comment may not hide the directive's end of line
                    break;
                }
                pos += 1;
            }
            kind = TokKind::Directive;
        } else if c == b'/' && bytes.get(pos + 1) == Some(&b'/') {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            kind = TokKind::Comment;
        } else if c == b'/' && bytes.get(pos + 1) == Some(&b'*') {
            pos += 2;
            loop {
                if pos + 1 >= bytes.len() {
                    return Err(ParseError::Syntax {
                        file: file.to_string(),
                        line: start_line,
                        expected: "end of comment".into(),
                    });
                }
                if bytes[pos] == b'*' && bytes[pos + 1] == b'/' {
                    pos += 2;
                    break;
                }
                if bytes[pos] == b'\n' {
                    line += 1;
                }
                pos += 1;
            }
            kind = TokKind::Comment;
        } else if c == b'_' || c.is_ascii_alphabetic() {
            while pos < bytes.len() && (bytes[pos] == b'_' || bytes[pos].is_ascii_alphanumeric()) {
                pos += 1;
            }
            kind = if is_keyword(&text[start..pos]) { TokKind::Keyword } else { TokKind::Ident };
        } else if c.is_ascii_digit()
            || (c == b'.' && bytes.get(pos + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            while pos < bytes.len() {
                let b = bytes[pos];
                if (b == b'+' || b == b'-')
                    && matches!(bytes[pos - 1], b'e' | b'E' | b'p' | b'P')
                    && !text[start..pos].starts_with("0x")
                {
                    pos += 1;
                } else if b == b'.' || b == b'_' || b.is_ascii_alphanumeric() {
                    pos += 1;
                } else {
                    break;
                }
            }
            kind = TokKind::Number;
        } else if c == b'\'' || c == b'"' {
            pos += 1;
            loop {
                match bytes.get(pos) {
                    None | Some(b'\n') => {
                        return Err(ParseError::Syntax {
                            file: file.to_string(),
                            line: start_line,
                            expected: format!("closing {}", c as char),
                        })
                    }
                    Some(b'\\') => pos += 2,
                    Some(&b) if b == c => {
                        pos += 1;
                        break;
                    }
                    Some(_) => pos += 1,
                }
            }
            kind = if c == b'"' { TokKind::Str } else { TokKind::Char };
        } else {
            let rest = &text[pos..];
            match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    pos += p.len();
                    kind = TokKind::Punct;
                }
                None => {
                    return Err(ParseError::Syntax {
                        file: file.to_string(),
                        line,
                        expected: format!("a token, found {:?}", rest.chars().next().unwrap_or(' ')),
                    })
                }
            }
        }
        at_line_start = false;
        tokens.push(Token {
            tok: Tok::new(kind, &text[start..pos]),
            start,
            end: pos,
            line: start_line,
            end_line: line,
        });
    }
    Ok(tokens)
}
