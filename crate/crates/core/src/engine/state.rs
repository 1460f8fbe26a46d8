use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::truth::NormativeStatus;
use crate::dsl::lexer::{tokenize, Tok};
use crate::dsl::{FactRef, Value};

/// A fact name applied to literal arguments, e.g. `income` or
/// `holds-document("passport")`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactInstance {
    pub name: String,
    pub args: Vec<Value>,
}

impl FactInstance {
    pub fn new(name: impl Into<String>) -> Self {
        FactInstance {
            name: name.into(),
            args: Vec::new(),
        }
    }

    pub fn with_args(name: impl Into<String>, args: Vec<Value>) -> Self {
        FactInstance {
            name: name.into(),
            args,
        }
    }
}

impl From<&FactRef> for FactInstance {
    fn from(r: &FactRef) -> Self {
        FactInstance {
            name: r.name.clone(),
            args: r.args.clone(),
        }
    }
}

impl fmt::Display for FactInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
            write!(f, "({})", args.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid fact instance `{0}`")]
pub struct BadFactInstance(String);

impl FromStr for FactInstance {
    type Err = BadFactInstance;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadFactInstance(s.to_string());
        let tokens = tokenize(s).map_err(|_| bad())?;
        let mut toks = tokens
            .into_iter()
            .map(|t| t.tok)
            .filter(|t| *t != Tok::Newline);
        let name = match toks.next() {
            Some(Tok::Ident(n)) => n,
            _ => return Err(bad()),
        };
        let mut args = Vec::new();
        match toks.next() {
            Some(Tok::Eof) => return Ok(FactInstance { name, args }),
            Some(Tok::LParen) => {}
            _ => return Err(bad()),
        }
        loop {
            let v = match toks.next() {
                Some(Tok::Int(i)) => Value::Integer(i),
                Some(Tok::Str(s)) => Value::Text(s),
                Some(Tok::Date(d)) => Value::Date(d),
                Some(Tok::Ident(w)) if w == "true" => Value::Boolean(true),
                Some(Tok::Ident(w)) if w == "false" => Value::Boolean(false),
                Some(Tok::RParen) if args.is_empty() => break,
                _ => return Err(bad()),
            };
            args.push(v);
            match toks.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => return Err(bad()),
            }
        }
        match toks.next() {
            Some(Tok::Eof) => Ok(FactInstance { name, args }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for FactInstance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FactInstance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DutyInstance {
    pub duty: String,
    pub holder: String,
    pub claimant: String,
    pub deadline: Option<NaiveDate>,
    pub fulfilled: bool,
    pub violated_at: Option<NaiveDate>,
}

impl DutyInstance {
    pub fn is_active(&self) -> bool {
        !self.fulfilled
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutedAction {
    pub act: String,
    pub actor: String,
    pub at: NaiveDateTime,
    pub status_at_execution: NormativeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motivation: Option<String>,
}

/// Knowledge state of one case. Fact instances missing from `assignments`
/// are unknown. The history only ever grows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormState {
    pub(crate) assignments: BTreeMap<FactInstance, Value>,
    pub(crate) duties: Vec<DutyInstance>,
    pub(crate) history: Vec<ExecutedAction>,
    pub(crate) clock: NaiveDate,
}

impl NormState {
    pub fn assignments(&self) -> &BTreeMap<FactInstance, Value> {
        &self.assignments
    }

    pub fn value(&self, fact: &FactInstance) -> Option<&Value> {
        self.assignments.get(fact)
    }

    pub fn duties(&self) -> &[DutyInstance] {
        &self.duties
    }

    pub fn active_duties(&self) -> impl Iterator<Item = &DutyInstance> {
        self.duties.iter().filter(|d| d.is_active())
    }

    pub fn history(&self) -> &[ExecutedAction] {
        &self.history
    }

    pub fn clock(&self) -> NaiveDate {
        self.clock
    }

    pub fn was_executed(&self, act: &str) -> bool {
        self.history.iter().any(|h| h.act == act)
    }

    /// SHA-256 over the canonical JSON form; equal states have equal digests.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
