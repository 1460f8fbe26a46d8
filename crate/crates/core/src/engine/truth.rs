use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::SourceRef;

/// Strong-Kleene truth value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthValue {
    True,
    False,
    Unknown,
}

impl TruthValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            TruthValue::True => Some(true),
            TruthValue::False => Some(false),
            TruthValue::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        self != TruthValue::Unknown
    }

    pub fn and(self, other: TruthValue) -> TruthValue {
        use TruthValue::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Unknown,
        }
    }

    pub fn or(self, other: TruthValue) -> TruthValue {
        use TruthValue::*;
        match (self, other) {
            (True, _) | (_, True) => True,
            (False, False) => False,
            _ => Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> TruthValue {
        match self {
            TruthValue::True => TruthValue::False,
            TruthValue::False => TruthValue::True,
            TruthValue::Unknown => TruthValue::Unknown,
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::True => "true",
            TruthValue::False => "false",
            TruthValue::Unknown => "unknown",
        })
    }
}

/// Legal status of an act. Serialized with the labels the case officer
/// sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "toegestaan")]
    Allowed,
    #[serde(rename = "niet_toegestaan")]
    NotAllowed,
    #[serde(rename = "onbestemd")]
    Indefinite,
}

impl Status {
    pub fn from_truth(t: TruthValue) -> Self {
        match t {
            TruthValue::True => Status::Allowed,
            TruthValue::False => Status::NotAllowed,
            TruthValue::Unknown => Status::Indefinite,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Status::Allowed => "toegestaan",
            Status::NotAllowed => "niet_toegestaan",
            Status::Indefinite => "onbestemd",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "toegestaan" | "allowed" => Some(Status::Allowed),
            "niet_toegestaan" | "not-allowed" | "not_allowed" => Some(Status::NotAllowed),
            "onbestemd" | "indefinite" => Some(Status::Indefinite),
            _ => None,
        }
    }

    /// Executing an act in this status needs a written motivation.
    pub fn needs_motivation(self) -> bool {
        self != Status::Allowed
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One top-level conjunct of a condition with its truth value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub clause: String,
    pub value: TruthValue,
    #[serde(default)]
    pub sources: Vec<SourceRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormativeStatus {
    pub status: Status,
    pub reasons: Vec<Reason>,
}

impl NormativeStatus {
    pub fn failing(&self) -> impl Iterator<Item = &Reason> {
        self.reasons.iter().filter(|r| r.value == TruthValue::False)
    }

    pub fn unknown(&self) -> impl Iterator<Item = &Reason> {
        self.reasons
            .iter()
            .filter(|r| r.value == TruthValue::Unknown)
    }
}
