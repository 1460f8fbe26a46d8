//! Syntax tree for norm specifications.
//!
//! Source locations are carried on the nodes that diagnostics point at, but
//! they never take part in equality: two specs that differ only in layout
//! compare equal.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// A 1-based position in the source text.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Loc {
    pub line: usize,
    pub column: usize,
}

impl Loc {
    pub fn new(line: usize, column: usize) -> Self {
        Loc { line, column }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

impl std::hash::Hash for Loc {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    Boolean,
    Integer,
    Text,
    Date,
}

impl ScalarType {
    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Boolean => "boolean",
            ScalarType::Integer => "integer",
            ScalarType::Text => "text",
            ScalarType::Date => "date",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "boolean" => Some(ScalarType::Boolean),
            "integer" => Some(ScalarType::Integer),
            "text" => Some(ScalarType::Text),
            "date" => Some(ScalarType::Date),
            _ => None,
        }
    }

    pub fn is_ordered(self) -> bool {
        matches!(self, ScalarType::Integer | ScalarType::Date)
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A definite scalar value. Absence of a value is modelled by the caller
/// (usually as `Option<Value>`), never by a variant here.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Boolean(bool),
    Integer(i64),
    Text(String),
    Date(NaiveDate),
}

impl Value {
    pub fn scalar_type(&self) -> ScalarType {
        match self {
            Value::Boolean(_) => ScalarType::Boolean,
            Value::Integer(_) => ScalarType::Integer,
            Value::Text(_) => ScalarType::Text,
            Value::Date(_) => ScalarType::Date,
        }
    }

    /// Reads an untyped JSON scalar as a value of `ty`.
    pub fn from_json(ty: ScalarType, json: &serde_json::Value) -> Option<Value> {
        match (ty, json) {
            (ScalarType::Boolean, serde_json::Value::Bool(b)) => Some(Value::Boolean(*b)),
            (ScalarType::Integer, serde_json::Value::Number(n)) => n.as_i64().map(Value::Integer),
            (ScalarType::Text, serde_json::Value::String(s)) => Some(Value::Text(s.clone())),
            (ScalarType::Date, serde_json::Value::String(s)) => {
                NaiveDate::parse_from_str(s, "%Y-%m-%d")
                    .ok()
                    .map(Value::Date)
            }
            _ => None,
        }
    }

    /// The untyped JSON form used by answer sets and scenario files.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Boolean(b) => serde_json::Value::Bool(*b),
            Value::Integer(i) => serde_json::Value::from(*i),
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Date(d) => serde_json::Value::String(d.format("%Y-%m-%d").to_string()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "applicableFrom"
    )]
    pub applicable_from: Option<NaiveDate>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: ScalarType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ty: ScalarType,
    pub loc: Loc,
}

/// A reference to one instance of a fact: the fact name plus literal
/// arguments for each declared parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactRef {
    pub name: String,
    pub args: Vec<Value>,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Lit(Value),
    Fact(FactRef),
    /// True once the enclosing duty's deadline lies before the clock.
    DeadlinePassed(Loc),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }

    pub fn fact(name: &str) -> Expr {
        Expr::Fact(FactRef {
            name: name.to_string(),
            args: Vec::new(),
            loc: Loc::default(),
        })
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    /// Splits a left- or right-nested chain of `and` into its operands.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e {
                Expr::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Names of every fact the expression reads.
    pub fn fact_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
            match e {
                Expr::Fact(r) => {
                    if !out.contains(&r.name.as_str()) {
                        out.push(&r.name)
                    }
                }
                Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Not(a) => walk(a, out),
                Expr::Lit(_) | Expr::DeadlinePassed(_) => {}
            }
        }
        walk(self, &mut out);
        out
    }
}

/// `creates fact` (boolean, set to true) or `creates fact = value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactEffect {
    pub target: FactRef,
    pub value: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Termination {
    Fact(FactRef),
    Duty { name: String, loc: Loc },
}

impl Termination {
    pub fn name(&self) -> &str {
        match self {
            Termination::Fact(r) => &r.name,
            Termination::Duty { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DutyRef {
    pub name: String,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActDecl {
    pub name: String,
    pub actor: String,
    pub recipient: String,
    pub condition: Expr,
    pub creates: Vec<FactEffect>,
    pub terminates: Vec<Termination>,
    pub imposes: Vec<DutyRef>,
    pub sources: Vec<SourceRef>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DutyDecl {
    pub name: String,
    pub holder: String,
    pub claimant: String,
    pub deadline: Option<FactRef>,
    pub violated_when: Expr,
    pub sources: Vec<SourceRef>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Declaration {
    Act(ActDecl),
    Duty(DutyDecl),
}

impl Declaration {
    pub fn name(&self) -> &str {
        match self {
            Declaration::Act(a) => &a.name,
            Declaration::Duty(d) => &d.name,
        }
    }

    pub fn sources(&self) -> &[SourceRef] {
        match self {
            Declaration::Act(a) => &a.sources,
            Declaration::Duty(d) => &d.sources,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Declaration::Act(_) => "act",
            Declaration::Duty(_) => "duty",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormSpec {
    pub facts: Vec<FactDecl>,
    pub acts: Vec<ActDecl>,
    pub duties: Vec<DutyDecl>,
    pub sources: Vec<SourceRef>,
}

impl NormSpec {
    pub fn fact(&self, name: &str) -> Option<&FactDecl> {
        self.facts.iter().find(|f| f.name == name)
    }

    pub fn act(&self, name: &str) -> Option<&ActDecl> {
        self.acts.iter().find(|a| a.name == name)
    }

    pub fn duty(&self, name: &str) -> Option<&DutyDecl> {
        self.duties.iter().find(|d| d.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
            && self.acts.is_empty()
            && self.duties.is_empty()
            && self.sources.is_empty()
    }

    /// Every source mentioned anywhere in the spec, first occurrence wins.
    pub fn all_sources(&self) -> Vec<SourceRef> {
        let mut out: Vec<SourceRef> = Vec::new();
        let decl_sources = self
            .acts
            .iter()
            .flat_map(|a| a.sources.iter())
            .chain(self.duties.iter().flat_map(|d| d.sources.iter()));
        for s in self.sources.iter().chain(decl_sources) {
            if !out.iter().any(|o| o.title == s.title && o.url == s.url) {
                out.push(s.clone());
            }
        }
        out
    }
}
