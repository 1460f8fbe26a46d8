//! Recursive-descent parser for `.norm` files.
//!
//! The grammar is line oriented. A declaration starts with `fact`, `act` or
//! `duty`; the clauses of an act or duty follow on their own (indented)
//! lines. A `source` line in column 1 belongs to the spec itself, an
//! indented one to the declaration above it. Lines that start with `and` or
//! `or` continue the previous line, and newlines inside parentheses are
//! ignored.

use super::ast::*;
use super::diagnostic::{Diagnostic, DiagnosticKind};
use super::lexer::{Tok, Token};

pub(crate) enum Item {
    Fact(FactDecl),
    Act(ActDecl),
    Duty(DutyDecl),
    Source(SourceRef),
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    pub errors: Vec<Diagnostic>,
}

type PResult<T> = Result<T, Diagnostic>;

fn syntax(loc: Loc, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(
        DiagnosticKind::Syntax,
        format!("syntax error: {}", msg.into()),
        loc,
    )
}

impl Parser {
    pub fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            errors: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Loc> {
        if *self.peek() == tok {
            Ok(self.advance().loc)
        } else {
            Err(syntax(
                self.loc(),
                format!(
                    "expected {}, found {}",
                    tok.describe(),
                    self.peek().describe()
                ),
            ))
        }
    }

    fn expect_word(&mut self, word: &str) -> PResult<()> {
        if self.at_word(word) {
            self.advance();
            Ok(())
        } else {
            Err(syntax(
                self.loc(),
                format!("expected `{word}`, found {}", self.peek().describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Loc)> {
        match self.peek().clone() {
            Tok::Ident(w) if !is_reserved(&w) => {
                let loc = self.advance().loc;
                Ok((w, loc))
            }
            other => Err(syntax(
                self.loc(),
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn end_of_line(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof => Ok(()),
            other => Err(syntax(
                self.loc(),
                format!("expected end of line, found {}", other.describe()),
            )),
        }
    }

    fn at_declaration_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(w) => {
                matches!(w.as_str(), "fact" | "act" | "duty")
                    || (w == "source" && self.loc().column == 1)
            }
            Tok::Eof => true,
            _ => false,
        }
    }

    /// Skips to the start of the next top-level declaration.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Newline => {
                    self.advance();
                    if self.at_declaration_start() {
                        return;
                    }
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    pub fn items(&mut self) -> Vec<(Item, Loc)> {
        let mut out = Vec::new();
        while self.eat(&Tok::Newline) {}
        while *self.peek() != Tok::Eof {
            let loc = self.loc();
            match self.item() {
                Ok(item) => out.push((item, loc)),
                Err(d) => {
                    self.errors.push(d);
                    self.recover();
                }
            }
            while self.eat(&Tok::Newline) {}
        }
        out
    }

    fn item(&mut self) -> PResult<Item> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(w) if w == "fact" => {
                self.advance();
                self.fact_decl(loc).map(Item::Fact)
            }
            Tok::Ident(w) if w == "act" => {
                self.advance();
                self.act_decl(loc).map(Item::Act)
            }
            Tok::Ident(w) if w == "duty" => {
                self.advance();
                self.duty_decl(loc).map(Item::Duty)
            }
            Tok::Ident(w) if w == "source" => {
                self.advance();
                let s = self.source_ref()?;
                self.end_of_line()?;
                Ok(Item::Source(s))
            }
            other => Err(syntax(
                loc,
                format!("expected declaration, found {}", other.describe()),
            )),
        }
    }

    fn scalar_type(&mut self) -> PResult<ScalarType> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(w) => match ScalarType::from_keyword(&w) {
                Some(t) => {
                    self.advance();
                    Ok(t)
                }
                None => Err(syntax(
                    loc,
                    format!("unknown type `{w}`; expected boolean, integer, text or date"),
                )),
            },
            other => Err(syntax(
                loc,
                format!("expected a type, found {}", other.describe()),
            )),
        }
    }

    fn fact_decl(&mut self, loc: Loc) -> PResult<FactDecl> {
        let (name, name_loc) = self.ident("fact name")?;
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                let (pname, _) = self.ident("parameter name")?;
                self.expect(Tok::Colon)?;
                let ty = self.scalar_type()?;
                params.push(Param { name: pname, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        let ty = if self.eat(&Tok::Colon) {
            self.scalar_type()?
        } else {
            ScalarType::Boolean
        };
        self.end_of_line()?;
        let _ = loc;
        Ok(FactDecl {
            name,
            params,
            ty,
            loc: name_loc,
        })
    }

    fn act_decl(&mut self, _loc: Loc) -> PResult<ActDecl> {
        let (name, name_loc) = self.ident("act name")?;
        self.end_of_line()?;
        let mut actor = None;
        let mut recipient = None;
        let mut condition = None;
        let mut creates = Vec::new();
        let mut terminates = Vec::new();
        let mut imposes = Vec::new();
        let mut sources = Vec::new();
        while !self.at_declaration_start() {
            let cloc = self.loc();
            let word = match self.peek().clone() {
                Tok::Ident(w) => w,
                other => {
                    return Err(syntax(
                        cloc,
                        format!("expected act clause, found {}", other.describe()),
                    ))
                }
            };
            self.advance();
            match word.as_str() {
                "actor" => set_once(&mut actor, self.ident("role name")?.0, "actor", cloc)?,
                "recipient" => set_once(
                    &mut recipient,
                    self.ident("role name")?.0,
                    "recipient",
                    cloc,
                )?,
                "conditioned" => {
                    self.expect_word("by")?;
                    let e = self.expr()?;
                    set_once(&mut condition, e, "conditioned by", cloc)?;
                }
                "creates" => loop {
                    let target = self.fact_ref()?;
                    let value = if self.eat(&Tok::Eq) {
                        Some(self.literal()?)
                    } else {
                        None
                    };
                    creates.push(FactEffect { target, value });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                },
                "terminates" => loop {
                    terminates.push(Termination::Fact(self.fact_ref()?));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                },
                "imposes" => loop {
                    let (n, l) = self.ident("duty name")?;
                    imposes.push(DutyRef { name: n, loc: l });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                },
                "source" => sources.push(self.source_ref()?),
                other => return Err(syntax(cloc, format!("unknown act clause `{other}`"))),
            }
            self.end_of_line()?;
        }
        let actor = actor.ok_or_else(|| {
            syntax(
                name_loc,
                format!("act `{name}` is missing an `actor` clause"),
            )
        })?;
        let recipient = recipient.ok_or_else(|| {
            syntax(
                name_loc,
                format!("act `{name}` is missing a `recipient` clause"),
            )
        })?;
        Ok(ActDecl {
            name,
            actor,
            recipient,
            condition: condition.unwrap_or(Expr::Lit(Value::Boolean(true))),
            creates,
            terminates,
            imposes,
            sources,
            loc: name_loc,
        })
    }

    fn duty_decl(&mut self, _loc: Loc) -> PResult<DutyDecl> {
        let (name, name_loc) = self.ident("duty name")?;
        self.end_of_line()?;
        let mut holder = None;
        let mut claimant = None;
        let mut deadline = None;
        let mut violated_when = None;
        let mut sources = Vec::new();
        while !self.at_declaration_start() {
            let cloc = self.loc();
            let word = match self.peek().clone() {
                Tok::Ident(w) => w,
                other => {
                    return Err(syntax(
                        cloc,
                        format!("expected duty clause, found {}", other.describe()),
                    ))
                }
            };
            self.advance();
            match word.as_str() {
                "holder" => set_once(&mut holder, self.ident("role name")?.0, "holder", cloc)?,
                "claimant" => {
                    set_once(&mut claimant, self.ident("role name")?.0, "claimant", cloc)?
                }
                "deadline" => {
                    let r = self.fact_ref()?;
                    set_once(&mut deadline, r, "deadline", cloc)?;
                }
                "violated" => {
                    self.expect_word("when")?;
                    let e = self.expr()?;
                    set_once(&mut violated_when, e, "violated when", cloc)?;
                }
                "source" => sources.push(self.source_ref()?),
                other => return Err(syntax(cloc, format!("unknown duty clause `{other}`"))),
            }
            self.end_of_line()?;
        }
        let holder = holder.ok_or_else(|| {
            syntax(
                name_loc,
                format!("duty `{name}` is missing a `holder` clause"),
            )
        })?;
        let claimant = claimant.ok_or_else(|| {
            syntax(
                name_loc,
                format!("duty `{name}` is missing a `claimant` clause"),
            )
        })?;
        let violated_when = violated_when.ok_or_else(|| {
            syntax(
                name_loc,
                format!("duty `{name}` is missing a `violated when` clause"),
            )
        })?;
        Ok(DutyDecl {
            name,
            holder,
            claimant,
            deadline,
            violated_when,
            sources,
            loc: name_loc,
        })
    }

    fn source_ref(&mut self) -> PResult<SourceRef> {
        let loc = self.loc();
        let title = match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                s
            }
            other => {
                return Err(syntax(
                    loc,
                    format!("expected source title, found {}", other.describe()),
                ))
            }
        };
        if title.trim().is_empty() {
            return Err(syntax(loc, "source title must not be empty"));
        }
        let mut url = None;
        let mut applicable_from = None;
        if self.at_word("url") {
            self.advance();
            match self.peek().clone() {
                Tok::Str(s) => {
                    self.advance();
                    url = Some(s);
                }
                other => {
                    return Err(syntax(
                        self.loc(),
                        format!("expected url text, found {}", other.describe()),
                    ))
                }
            }
        }
        if self.at_word("from") {
            self.advance();
            match self.peek().clone() {
                Tok::Date(d) => {
                    self.advance();
                    applicable_from = Some(d);
                }
                other => {
                    return Err(syntax(
                        self.loc(),
                        format!("expected date, found {}", other.describe()),
                    ))
                }
            }
        }
        Ok(SourceRef {
            title,
            url,
            applicable_from,
        })
    }

    fn fact_ref(&mut self) -> PResult<FactRef> {
        let (name, loc) = self.ident("fact name")?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                args.push(self.literal()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(FactRef { name, args, loc })
    }

    fn literal(&mut self) -> PResult<Value> {
        let loc = self.loc();
        let v = match self.peek().clone() {
            Tok::Int(i) => Value::Integer(i),
            Tok::Str(s) => Value::Text(s),
            Tok::Date(d) => Value::Date(d),
            Tok::Ident(w) if w == "true" => Value::Boolean(true),
            Tok::Ident(w) if w == "false" => Value::Boolean(false),
            other => {
                return Err(syntax(
                    loc,
                    format!("expected literal, found {}", other.describe()),
                ))
            }
        };
        self.advance();
        Ok(v)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.at_word("or") {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.at_word("and") {
            self.advance();
            let rhs = self.not_expr()?;
            lhs = Expr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at_word("not") {
            self.advance();
            return Ok(Expr::not(self.not_expr()?));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.atom()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.atom()?;
        Ok(Expr::cmp(op, lhs, rhs))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Int(_) | Tok::Str(_) | Tok::Date(_) => Ok(Expr::Lit(self.literal()?)),
            Tok::Ident(w) if w == "true" || w == "false" => Ok(Expr::Lit(self.literal()?)),
            Tok::Ident(w) if w == "deadline-passed" => {
                self.advance();
                Ok(Expr::DeadlinePassed(loc))
            }
            Tok::Ident(w) if !is_reserved(&w) => Ok(Expr::Fact(self.fact_ref()?)),
            other => Err(syntax(
                loc,
                format!("expected expression, found {}", other.describe()),
            )),
        }
    }
}

fn set_once<T>(slot: &mut Option<T>, value: T, clause: &str, loc: Loc) -> PResult<()> {
    if slot.is_some() {
        return Err(syntax(loc, format!("duplicate `{clause}` clause")));
    }
    *slot = Some(value);
    Ok(())
}

/// Words that can never name a fact, act, duty or role.
pub fn is_reserved(word: &str) -> bool {
    matches!(
        word,
        "and" | "or" | "not" | "true" | "false" | "deadline-passed" | "fact" | "act" | "duty"
    )
}
