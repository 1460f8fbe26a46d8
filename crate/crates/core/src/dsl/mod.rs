//! The norm-specification language: parsing, checking and printing.
//!
//! ```text
//! fact age : integer
//! fact registered : boolean
//!
//! act grant
//!   actor officer
//!   recipient applicant
//!   conditioned by registered
//!     and age >= 21
//!   creates outcome = "approved"
//! ```

pub mod ast;
mod check;
pub mod diagnostic;
pub mod lexer;
mod parser;
pub mod printer;

use std::collections::HashMap;
use std::path::Path;

pub use ast::*;
pub use diagnostic::{Diagnostic, DiagnosticKind, Severity};
pub use printer::print_spec;

use check::Checker;
use parser::{Item, Parser};

/// Source text plus a label for messages (usually the file path).
#[derive(Clone, Debug)]
pub struct SpecText {
    pub content: String,
    pub origin: String,
}

impl SpecText {
    pub fn new(content: impl Into<String>, origin: impl Into<String>) -> Self {
        SpecText {
            content: content.into(),
            origin: origin.into(),
        }
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let content = std::fs::read_to_string(path)?;
        Ok(SpecText {
            content,
            origin: path.display().to_string(),
        })
    }
}

/// Result of checking a whole file: the spec when there were no errors,
/// plus every diagnostic (errors and warnings) in source order.
#[derive(Debug)]
pub struct CheckReport {
    pub spec: Option<NormSpec>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

fn sort_diagnostics(ds: &mut [Diagnostic]) {
    ds.sort_by_key(|d| (d.line, d.column));
}

pub fn check_spec(src: &SpecText) -> CheckReport {
    let tokens = match lexer::tokenize(&src.content) {
        Ok(t) => t,
        Err(d) => {
            return CheckReport {
                spec: None,
                diagnostics: vec![d],
            }
        }
    };
    let mut parser = Parser::new(tokens);
    let items = parser.items();
    let mut diagnostics = std::mem::take(&mut parser.errors);

    let mut spec = NormSpec::default();
    for (item, _) in items {
        match item {
            Item::Fact(f) => spec.facts.push(f),
            Item::Act(a) => spec.acts.push(a),
            Item::Duty(d) => spec.duties.push(d),
            Item::Source(s) => spec.sources.push(s),
        }
    }

    let mut seen: HashMap<String, ()> = HashMap::new();
    let names = spec
        .facts
        .iter()
        .map(|f| (&f.name, f.loc))
        .chain(spec.acts.iter().map(|a| (&a.name, a.loc)))
        .chain(spec.duties.iter().map(|d| (&d.name, d.loc)));
    let mut dups = Vec::new();
    for (name, loc) in names {
        if seen.insert(name.clone(), ()).is_some() {
            dups.push(Diagnostic::error(
                DiagnosticKind::DuplicateName,
                format!("duplicate name `{name}`"),
                loc,
            ));
        }
    }
    dups.sort_by_key(|d| (d.line, d.column));
    diagnostics.extend(dups);
    for f in &spec.facts {
        check::check_fact_params(f, &mut diagnostics);
    }

    let facts = spec.facts.clone();
    let duty_names: Vec<String> = spec.duties.iter().map(|d| d.name.clone()).collect();
    let mut checker = Checker::new(&facts, duty_names.iter().map(String::as_str));
    for act in spec.acts.iter_mut() {
        checker.act(act);
    }
    for duty in &spec.duties {
        checker.duty(duty);
    }
    diagnostics.extend(checker.diagnostics);

    let failed = diagnostics.iter().any(Diagnostic::is_error);
    if !failed {
        diagnostics.extend(check::lint(&spec));
    }
    sort_diagnostics(&mut diagnostics);
    CheckReport {
        spec: (!failed).then_some(spec),
        diagnostics,
    }
}

/// Parses and checks a spec; warnings are dropped.
pub fn parse_spec(src: &SpecText) -> Result<NormSpec, Vec<Diagnostic>> {
    let report = check_spec(src);
    match report.spec {
        Some(spec) => Ok(spec),
        None => Err(report
            .diagnostics
            .into_iter()
            .filter(Diagnostic::is_error)
            .collect()),
    }
}

/// Parses a single act or duty declaration against the facts and duties of
/// `context`. The declaration may reuse the name of an existing act or duty
/// (it is meant to replace it) but not the name of a fact.
pub fn validate_rule_text(
    rule_text: &str,
    context: &NormSpec,
) -> Result<Declaration, Vec<Diagnostic>> {
    let tokens = lexer::tokenize(rule_text).map_err(|d| vec![d])?;
    let mut parser = Parser::new(tokens);
    let items = parser.items();
    if !parser.errors.is_empty() {
        return Err(parser.errors);
    }
    let mut items = items.into_iter();
    let (item, loc) = match items.next() {
        Some(first) => first,
        None => {
            let loc = Loc::new(1, 1);
            return Err(vec![Diagnostic::error(
                DiagnosticKind::Syntax,
                "syntax error: expected declaration",
                loc,
            )]);
        }
    };
    if let Some((_, extra)) = items.next() {
        return Err(vec![Diagnostic::error(
            DiagnosticKind::Syntax,
            "syntax error: expected a single declaration",
            extra,
        )]);
    }
    let duty_names = context.duties.iter().map(|d| d.name.as_str());
    let mut checker = Checker::new(&context.facts, duty_names);
    let decl = match item {
        Item::Act(mut act) => {
            checker.act(&mut act);
            Declaration::Act(act)
        }
        Item::Duty(duty) => {
            checker.duty(&duty);
            Declaration::Duty(duty)
        }
        Item::Fact(_) | Item::Source(_) => {
            return Err(vec![Diagnostic::error(
                DiagnosticKind::Syntax,
                "syntax error: expected declaration of an act or duty",
                loc,
            )]);
        }
    };
    let mut diagnostics = checker.diagnostics;
    if let Some(f) = context.fact(decl.name()) {
        diagnostics.push(Diagnostic::error(
            DiagnosticKind::DuplicateName,
            format!("duplicate name `{}` (declared as a fact)", f.name),
            loc_of(&decl),
        ));
    }
    if diagnostics.is_empty() {
        Ok(decl)
    } else {
        sort_diagnostics(&mut diagnostics);
        Err(diagnostics)
    }
}

fn loc_of(decl: &Declaration) -> Loc {
    match decl {
        Declaration::Act(a) => a.loc,
        Declaration::Duty(d) => d.loc,
    }
}
