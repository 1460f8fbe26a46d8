use chrono::NaiveDate;

use super::ast::Loc;
use super::diagnostic::{Diagnostic, DiagnosticKind};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Date(NaiveDate),
    LParen,
    RParen,
    Comma,
    Colon,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Str(_) => "text literal".to_string(),
            Tok::Date(d) => format!("date {d}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_continue)
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    depth: usize,
    out: Vec<Token>,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.column)
    }

    fn push(&mut self, tok: Tok, loc: Loc) {
        self.out.push(Token { tok, loc });
    }

    fn push_newline(&mut self, loc: Loc) {
        if self.depth == 0
            && !matches!(
                self.out.last(),
                None | Some(Token {
                    tok: Tok::Newline,
                    ..
                })
            )
        {
            self.push(Tok::Newline, loc);
        }
    }

    fn error(&self, loc: Loc, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(DiagnosticKind::Syntax, msg, loc)
    }

    fn run(mut self) -> Result<Vec<Token>, Diagnostic> {
        while let Some(c) = self.peek() {
            let loc = self.loc();
            match c {
                '\n' => {
                    self.push_newline(loc);
                    self.bump();
                }
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                }
                '(' => {
                    self.bump();
                    self.depth += 1;
                    self.push(Tok::LParen, loc);
                }
                ')' => {
                    self.bump();
                    self.depth = self.depth.saturating_sub(1);
                    self.push(Tok::RParen, loc);
                }
                ',' => {
                    self.bump();
                    self.push(Tok::Comma, loc);
                }
                ':' => {
                    self.bump();
                    self.push(Tok::Colon, loc);
                }
                '=' => {
                    self.bump();
                    self.push(Tok::Eq, loc);
                }
                '!' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.push(Tok::Ne, loc);
                    } else {
                        return Err(self.error(loc, "syntax error: expected `!=`"));
                    }
                }
                '<' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.push(Tok::Le, loc);
                    } else {
                        self.push(Tok::Lt, loc);
                    }
                }
                '>' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.push(Tok::Ge, loc);
                    } else {
                        self.push(Tok::Gt, loc);
                    }
                }
                '"' => {
                    let s = self.string(loc)?;
                    self.push(Tok::Str(s), loc);
                }
                '-' if matches!(self.peek_at(1), Some(d) if d.is_ascii_digit()) => {
                    self.bump();
                    let tok = self.number(loc, true)?;
                    self.push(tok, loc);
                }
                c if c.is_ascii_digit() => {
                    let tok = self.number(loc, false)?;
                    self.push(tok, loc);
                }
                c if is_ident_start(c) => {
                    let mut s = String::new();
                    while let Some(c) = self.peek().filter(|c| is_ident_continue(*c)) {
                        s.push(c);
                        self.bump();
                    }
                    self.push(Tok::Ident(s), loc);
                }
                other => {
                    return Err(
                        self.error(loc, format!("syntax error: unexpected character `{other}`"))
                    );
                }
            }
        }
        let end = self.loc();
        self.push_newline(end);
        let eof_loc = self.out.last().map(|t| t.loc).unwrap_or(Loc::new(1, 1));
        self.push(Tok::Eof, eof_loc);
        Ok(join_continuations(self.out))
    }

    fn string(&mut self, start: Loc) -> Result<String, Diagnostic> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(self.error(start, "syntax error: unterminated text literal"))
                }
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    _ => {
                        return Err(
                            self.error(start, "syntax error: invalid escape in text literal")
                        )
                    }
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, start: Loc, negative: bool) -> Result<Tok, Diagnostic> {
        let mut digits = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            digits.push(c);
            self.bump();
        }
        // YYYY-MM-DD
        if !negative
            && digits.len() == 4
            && self.peek() == Some('-')
            && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit())
        {
            let mut text = digits;
            while let Some(c) = self.peek().filter(|c| c.is_ascii_digit() || *c == '-') {
                text.push(c);
                self.bump();
            }
            return NaiveDate::parse_from_str(&text, "%Y-%m-%d")
                .map(Tok::Date)
                .map_err(|_| self.error(start, format!("syntax error: invalid date `{text}`")));
        }
        if matches!(self.peek(), Some(c) if is_ident_start(c)) {
            return Err(self.error(start, "syntax error: identifiers cannot start with a digit"));
        }
        let text = if negative {
            format!("-{digits}")
        } else {
            digits
        };
        text.parse::<i64>().map(Tok::Int).map_err(|_| {
            self.error(
                start,
                format!("syntax error: integer `{text}` out of range"),
            )
        })
    }
}

/// A line that starts with `and` / `or` continues the previous line.
fn join_continuations(tokens: Vec<Token>) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut iter = tokens.into_iter().peekable();
    while let Some(t) = iter.next() {
        if t.tok == Tok::Newline {
            if let Some(Token {
                tok: Tok::Ident(w), ..
            }) = iter.peek()
            {
                if w == "and" || w == "or" {
                    continue;
                }
            }
        }
        out.push(t);
    }
    out
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        depth: 0,
        out: Vec::new(),
    }
    .run()
}
