//! Tokenizer shared by the schema and mapping document parsers.
//!
//! Both languages use the same lexical structure: identifiers, decimal
//! numbers, a handful of punctuation symbols and `#` line comments.

use std::fmt;

use thiserror::Error;

/// A 1-based line/column location in a source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Syntax error with the position it was detected at.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Colon,
    Comma,
    Semi,
    Lt,
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = cur.offset();
                while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    cur.bump();
                }
                let end = cur.offset();
                Tok::Ident(src[start..end].to_string())
            }
            '-' if cur.peek2() == Some('>') => {
                cur.bump();
                cur.bump();
                Tok::Arrow
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => lex_number(&mut cur)?,
            _ => {
                cur.bump();
                match c {
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '<' => Tok::Lt,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    other => {
                        return Err(SyntaxError::new(pos, format!("unexpected character {other:?}")))
                    }
                }
            }
        };
        out.push(Token { tok, pos });
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<Tok, SyntaxError> {
    let pos = cur.pos();
    let start = cur.offset();
    if matches!(cur.peek(), Some('-' | '+')) {
        cur.bump();
    }
    let mut digits = 0;
    while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
        cur.bump();
        digits += 1;
    }
    if cur.peek() == Some('.') {
        cur.bump();
        while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            cur.bump();
            digits += 1;
        }
    }
    if digits > 0 && matches!(cur.peek(), Some('e' | 'E')) {
        cur.bump();
        if matches!(cur.peek(), Some('-' | '+')) {
            cur.bump();
        }
        let mut exp = 0;
        while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            cur.bump();
            exp += 1;
        }
        if exp == 0 {
            return Err(SyntaxError::new(pos, "malformed number exponent"));
        }
    }
    let end = cur.offset();
    let text = &cur.src[start..end];
    if digits == 0 {
        return Err(SyntaxError::new(pos, format!("malformed number {text:?}")));
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Tok::Number)
        .ok_or_else(|| SyntaxError::new(pos, format!("malformed number {text:?}")))
}

/// Token stream with one-token lookahead.
pub struct TokenStream {
    toks: Vec<Token>,
    at: usize,
}

impl TokenStream {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Self {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    pub fn advance(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: Tok) -> Result<Pos, SyntaxError> {
        let t = self.advance();
        if t.tok == tok {
            Ok(t.pos)
        } else {
            Err(SyntaxError::new(t.pos, format!("expected {tok}, found {}", t.tok)))
        }
    }

    pub fn ident(&mut self) -> Result<(String, Pos), SyntaxError> {
        let t = self.advance();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(SyntaxError::new(t.pos, format!("expected identifier, found {other}"))),
        }
    }

    pub fn keyword(&mut self, kw: &str) -> Result<Pos, SyntaxError> {
        let t = self.advance();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(t.pos),
            other => Err(SyntaxError::new(t.pos, format!("expected `{kw}`, found {other}"))),
        }
    }

    pub fn number(&mut self) -> Result<(f64, Pos), SyntaxError> {
        let t = self.advance();
        match t.tok {
            Tok::Number(n) => Ok((n, t.pos)),
            other => Err(SyntaxError::new(t.pos, format!("expected number, found {other}"))),
        }
    }
}
