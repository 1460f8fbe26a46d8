use std::fmt;

use serde::Serialize;

use super::ast::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Syntax,
    DuplicateName,
    UnresolvedIdentifier,
    TypeMismatch,
    Lint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Diagnostic {
    pub fn error(kind: DiagnosticKind, message: impl Into<String>, loc: Loc) -> Self {
        Diagnostic {
            severity: Severity::Error,
            kind,
            message: message.into(),
            line: loc.line,
            column: loc.column,
        }
    }

    pub fn warning(message: impl Into<String>, loc: Loc) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            kind: DiagnosticKind::Lint,
            message: message.into(),
            line: loc.line,
            column: loc.column,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, sev, self.message
        )
    }
}

/// Renders diagnostics one per line, prefixed with `origin`.
pub fn render(origin: &str, diagnostics: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diagnostics {
        out.push_str(origin);
        out.push(':');
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}
