//! Policy bundles: a norm spec together with its question schema,
//! parameters and answer fixtures.
//!
//! On disk a bundle is laid out next to its spec file:
//!
//! ```text
//! policy/iit.norm
//! policy/iit.questions.json
//! policy/iit.params.toml
//! policy/fixtures/*.json
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsl::{self, NormSpec, ScalarType, SpecText, Value};
use crate::engine::{Engine, FactInstance};

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{origin}: spec has errors:\n{rendered}")]
    Spec {
        origin: String,
        rendered: String,
        diagnostics: Vec<dsl::Diagnostic>,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("inconsistent policy bundle: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Question {
    pub fact: String,
    pub prompt: String,
    #[serde(rename = "type")]
    pub answer_type: ScalarType,
    pub required: bool,
    pub allows_unknown: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSchema {
    pub questions: Vec<Question>,
}

impl QuestionSchema {
    pub fn question(&self, fact: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.fact == fact)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Household {
    Single,
    SingleParent,
    Couple,
}

impl Household {
    pub const ALL: [Household; 3] = [
        Household::Single,
        Household::SingleParent,
        Household::Couple,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Household::Single => "single",
            Household::SingleParent => "single-parent",
            Household::Couple => "couple",
        }
    }
}

impl FromStr for Household {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Household::ALL
            .into_iter()
            .find(|h| h.label() == s)
            .ok_or_else(|| PolicyError::Inconsistent(format!("unknown household type `{s}`")))
    }
}

/// Whole euros.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub i64);

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "€ {}", self.0)
    }
}

/// How the case administration maps onto the spec.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CaseBinding {
    #[serde(default)]
    pub case_type: Option<String>,
    /// Date fact that mirrors the case's decision term.
    #[serde(default)]
    pub decision_term_fact: Option<String>,
    /// Act executed on behalf of the client when a case is created.
    #[serde(default)]
    pub intake_act: Option<String>,
    #[serde(default)]
    pub client_role: Option<String>,
    #[serde(default)]
    pub officer_role: Option<String>,
    /// Text fact whose value records the decision.
    #[serde(default)]
    pub outcome_fact: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolicyParams {
    /// Values for parameter facts, typed against the spec.
    pub facts: BTreeMap<FactInstance, Value>,
    pub amounts: BTreeMap<Household, Money>,
    pub case: CaseBinding,
    /// Grant act name to the household type it grants for.
    pub grants: BTreeMap<String, Household>,
}

#[derive(Deserialize)]
struct RawParams {
    #[serde(default)]
    facts: toml::Table,
    #[serde(default)]
    amounts: BTreeMap<String, i64>,
    #[serde(default)]
    case: CaseBinding,
    #[serde(default)]
    grants: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureClient {
    pub name: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureExecution {
    pub act: String,
    #[serde(default)]
    pub motivation: Option<String>,
}

/// A named answer set, optionally with acts to execute; `seed` fixtures are
/// loaded into an empty case store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Fixture {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub client: FixtureClient,
    #[serde(default)]
    pub seed: bool,
    #[serde(default)]
    pub created_offset_days: i64,
    #[serde(default)]
    pub term_offset_days: Option<i64>,
    pub answers: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub executions: Vec<FixtureExecution>,
}

#[derive(Clone, Debug)]
pub struct PolicyBundle {
    pub text: SpecText,
    pub spec: NormSpec,
    pub schema: QuestionSchema,
    pub params: PolicyParams,
    pub fixtures: BTreeMap<String, Fixture>,
}

const IIT_NORM: &str = include_str!("../../policy/iit.norm");
const IIT_QUESTIONS: &str = include_str!("../../policy/iit.questions.json");
const IIT_PARAMS: &str = include_str!("../../policy/iit.params.toml");
const IIT_FIXTURES: &[(&str, &str)] = &[
    (
        "usertest-goal1",
        include_str!("../../policy/fixtures/usertest-goal1.json"),
    ),
    (
        "usertest-goal1-unregistered",
        include_str!("../../policy/fixtures/usertest-goal1-unregistered.json"),
    ),
    (
        "usertest1",
        include_str!("../../policy/fixtures/usertest1.json"),
    ),
    (
        "usertest2",
        include_str!("../../policy/fixtures/usertest2.json"),
    ),
    (
        "usertest3",
        include_str!("../../policy/fixtures/usertest3.json"),
    ),
    (
        "usertest4",
        include_str!("../../policy/fixtures/usertest4.json"),
    ),
];

/// The IIT bundle compiled into the binary.
pub fn load_bundled_policy() -> Result<PolicyBundle, PolicyError> {
    let text = SpecText::new(IIT_NORM, "policy/iit.norm");
    let mut fixtures = Vec::new();
    for (name, json) in IIT_FIXTURES {
        fixtures.push((
            name.to_string(),
            json.to_string(),
            format!("policy/fixtures/{name}.json"),
        ));
    }
    PolicyBundle::assemble(
        text,
        Some((IIT_QUESTIONS, "policy/iit.questions.json")),
        Some((IIT_PARAMS, "policy/iit.params.toml")),
        fixtures,
    )
}

fn toml_to_json(v: &toml::Value) -> serde_json::Value {
    match v {
        toml::Value::String(s) => serde_json::Value::String(s.clone()),
        toml::Value::Integer(i) => serde_json::Value::from(*i),
        toml::Value::Float(f) => serde_json::json!(f),
        toml::Value::Boolean(b) => serde_json::Value::Bool(*b),
        toml::Value::Datetime(d) => serde_json::Value::String(d.to_string()),
        toml::Value::Array(a) => serde_json::Value::Array(a.iter().map(toml_to_json).collect()),
        toml::Value::Table(t) => serde_json::Value::Object(
            t.iter()
                .map(|(k, v)| (k.clone(), toml_to_json(v)))
                .collect(),
        ),
    }
}

fn read(path: &Path) -> Result<String, PolicyError> {
    std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads `<stem>.params.toml` next to a spec file, typed against `spec`.
/// Returns default params when the file does not exist.
pub fn load_sibling_params(spec_path: &Path, spec: &NormSpec) -> Result<PolicyParams, PolicyError> {
    let path = sibling(spec_path, "params.toml");
    if !path.exists() {
        return Ok(PolicyParams::default());
    }
    parse_params(&read(&path)?, &path.display().to_string(), spec)
}

fn sibling(spec_path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = spec_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("spec");
    spec_path.with_file_name(format!("{stem}.{suffix}"))
}

fn parse_params(text: &str, origin: &str, spec: &NormSpec) -> Result<PolicyParams, PolicyError> {
    let raw: RawParams = toml::from_str(text).map_err(|e| PolicyError::Format {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let engine = Engine::new(spec);
    let json: serde_json::Map<String, serde_json::Value> = raw
        .facts
        .iter()
        .map(|(k, v)| (k.clone(), toml_to_json(v)))
        .collect();
    let facts = engine
        .typed_assignments(&json)
        .map_err(|e| PolicyError::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
    let mut amounts = BTreeMap::new();
    for (k, v) in raw.amounts {
        amounts.insert(k.parse::<Household>()?, Money(v));
    }
    let mut grants = BTreeMap::new();
    for (act, h) in raw.grants {
        grants.insert(act, h.parse::<Household>()?);
    }
    Ok(PolicyParams {
        facts,
        amounts,
        case: raw.case,
        grants,
    })
}

impl PolicyBundle {
    /// Loads a bundle from the spec path; the question, params and fixture
    /// files are optional.
    pub fn load(spec_path: &Path) -> Result<PolicyBundle, PolicyError> {
        let text = SpecText::read(spec_path).map_err(|source| PolicyError::Io {
            path: spec_path.display().to_string(),
            source,
        })?;
        let qpath = sibling(spec_path, "questions.json");
        let ppath = sibling(spec_path, "params.toml");
        let questions = if qpath.exists() {
            Some((read(&qpath)?, qpath.display().to_string()))
        } else {
            None
        };
        let params = if ppath.exists() {
            Some((read(&ppath)?, ppath.display().to_string()))
        } else {
            None
        };
        let mut fixtures = Vec::new();
        let fdir = spec_path
            .parent()
            .unwrap_or(Path::new("."))
            .join("fixtures");
        if fdir.is_dir() {
            let mut entries: Vec<_> = std::fs::read_dir(&fdir)
                .map_err(|source| PolicyError::Io {
                    path: fdir.display().to_string(),
                    source,
                })?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            entries.sort();
            for p in entries {
                let name = p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                fixtures.push((name, read(&p)?, p.display().to_string()));
            }
        }
        PolicyBundle::assemble(
            text,
            questions.as_ref().map(|(t, o)| (t.as_str(), o.as_str())),
            params.as_ref().map(|(t, o)| (t.as_str(), o.as_str())),
            fixtures,
        )
    }

    fn assemble(
        text: SpecText,
        questions: Option<(&str, &str)>,
        params: Option<(&str, &str)>,
        fixtures: Vec<(String, String, String)>,
    ) -> Result<PolicyBundle, PolicyError> {
        let spec = dsl::parse_spec(&text).map_err(|diagnostics| PolicyError::Spec {
            origin: text.origin.clone(),
            rendered: dsl::diagnostic::render(&text.origin, &diagnostics),
            diagnostics,
        })?;
        let schema = match questions {
            Some((json, origin)) => {
                serde_json::from_str(json).map_err(|e| PolicyError::Format {
                    path: origin.to_string(),
                    message: e.to_string(),
                })?
            }
            None => QuestionSchema::default(),
        };
        let params = match params {
            Some((toml, origin)) => parse_params(toml, origin, &spec)?,
            None => PolicyParams::default(),
        };
        let mut fixture_map = BTreeMap::new();
        for (name, json, origin) in fixtures {
            let mut f: Fixture = serde_json::from_str(&json).map_err(|e| PolicyError::Format {
                path: origin.clone(),
                message: e.to_string(),
            })?;
            f.name = name.clone();
            fixture_map.insert(name, f);
        }
        let bundle = PolicyBundle {
            text,
            spec,
            schema,
            params,
            fixtures: fixture_map,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// A bundle holding only a spec, with no schema or parameters.
    pub fn from_spec(text: SpecText) -> Result<PolicyBundle, PolicyError> {
        PolicyBundle::assemble(text, None, None, Vec::new())
    }

    fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: String| Err(PolicyError::Inconsistent(m));
        for q in &self.schema.questions {
            match self.spec.fact(&q.fact) {
                None => {
                    return bad(format!(
                        "question `{}` does not name a declared fact",
                        q.fact
                    ))
                }
                Some(f) if f.ty != q.answer_type || !f.params.is_empty() => {
                    return bad(format!(
                        "question `{}` has type {} but the fact is {}",
                        q.fact, q.answer_type, f.ty
                    ))
                }
                _ => {}
            }
        }
        let case = &self.params.case;
        let fact_of_type =
            |name: &Option<String>, ty: ScalarType, what: &str| -> Result<(), PolicyError> {
                if let Some(n) = name {
                    match self.spec.fact(n) {
                        Some(f) if f.ty == ty => {}
                        _ => {
                            return Err(PolicyError::Inconsistent(format!(
                                "{what} `{n}` must be a declared {ty} fact"
                            )))
                        }
                    }
                }
                Ok(())
            };
        fact_of_type(
            &case.decision_term_fact,
            ScalarType::Date,
            "decision-term-fact",
        )?;
        fact_of_type(&case.outcome_fact, ScalarType::Text, "outcome-fact")?;
        if let Some(a) = &case.intake_act {
            if self.spec.act(a).is_none() {
                return bad(format!("intake-act `{a}` is not a declared act"));
            }
        }
        for act in self.params.grants.keys() {
            if self.spec.act(act).is_none() {
                return bad(format!("grant `{act}` is not a declared act"));
            }
        }
        let engine = Engine::new(&self.spec);
        for f in self.fixtures.values() {
            if let Err(e) = engine.typed_assignments(&f.answers) {
                return bad(format!("fixture `{}`: {e}", f.name));
            }
            for x in &f.executions {
                if self.spec.act(&x.act).is_none() {
                    return bad(format!(
                        "fixture `{}` executes unknown act `{}`",
                        f.name, x.act
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn engine(&self) -> Engine<'_> {
        Engine::new(&self.spec)
    }

    pub fn fixture(&self, name: &str) -> Option<&Fixture> {
        self.fixtures.get(name)
    }

    /// Parameter facts overlaid with typed answers.
    pub fn assignments_for(
        &self,
        answers: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<BTreeMap<FactInstance, Value>, crate::engine::EngineError> {
        let mut out = self.params.facts.clone();
        out.extend(self.engine().typed_assignments(answers)?);
        Ok(out)
    }

    /// Household type a grant act decides on, if the act is a grant.
    pub fn household_of(&self, act: &str) -> Option<Household> {
        self.params.grants.get(act).copied()
    }
}

/// Configured allowance for a household type.
pub fn decision_amount(household: Household, params: &PolicyParams) -> Option<Money> {
    params.amounts.get(&household).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Status;

    fn bundle() -> PolicyBundle {
        load_bundled_policy().expect("bundled policy loads")
    }

    #[test]
    fn bundle_is_self_consistent() {
        let b = bundle();
        let report = dsl::check_spec(&b.text);
        assert!(report.diagnostics.is_empty(), "{:?}", report.diagnostics);
        let grants: Vec<&str> = b
            .spec
            .acts
            .iter()
            .map(|a| a.name.as_str())
            .filter(|n| n.starts_with("grant-iit-"))
            .collect();
        assert_eq!(
            grants,
            [
                "grant-iit-single",
                "grant-iit-single-parent",
                "grant-iit-couple"
            ]
        );
        assert!(b.spec.act("reject-iit").is_some());
        let decision_duties: Vec<_> = b
            .spec
            .duties
            .iter()
            .filter(|d| {
                d.deadline
                    .as_ref()
                    .is_some_and(|r| r.name == "decision-term")
            })
            .collect();
        assert_eq!(decision_duties.len(), 1);
        for q in &b.schema.questions {
            assert!(b.spec.fact(&q.fact).is_some());
        }
        for g in &grants {
            let act = b.spec.act(g).unwrap();
            assert!(
                act.sources.iter().any(|s| s.url.is_some()),
                "{g} has a statute source"
            );
        }
        assert_eq!(b.fixtures.len(), 6);
    }

    #[test]
    fn amounts_are_configured_and_distinct() {
        let b = bundle();
        let single = decision_amount(Household::Single, &b.params).unwrap();
        assert_eq!(single, Money(350));
        let all: Vec<Money> = Household::ALL
            .iter()
            .map(|h| decision_amount(*h, &b.params).unwrap())
            .collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
        assert!("triple".parse::<Household>().is_err());
    }

    fn statuses(b: &PolicyBundle, fixture: &str) -> Vec<(String, Status)> {
        let f = b.fixture(fixture).unwrap();
        let e = b.engine();
        let st = e
            .init_state(
                b.assignments_for(&f.answers).unwrap(),
                chrono::NaiveDate::from_ymd_opt(2024, 3, 1).unwrap(),
            )
            .unwrap();
        e.available_actions(&st)
            .into_iter()
            .map(|(a, s)| (a.name.clone(), s.status))
            .collect()
    }

    #[test]
    fn goal1_fixture_allows_single_parent_grant_only() {
        let b = bundle();
        let allowed: Vec<String> = statuses(&b, "usertest-goal1")
            .into_iter()
            .filter(|(_, s)| *s == Status::Allowed)
            .map(|(n, _)| n)
            .filter(|n| n != "submit-application")
            .collect();
        assert_eq!(allowed, ["grant-iit-single-parent"]);
    }

    #[test]
    fn unknown_registration_allows_nothing() {
        let b = bundle();
        let st = statuses(&b, "usertest-goal1-unregistered");
        assert!(st
            .iter()
            .filter(|(n, _)| n != "submit-application")
            .all(|(_, s)| *s != Status::Allowed));
        let sp = st
            .iter()
            .find(|(n, _)| n == "grant-iit-single-parent")
            .unwrap();
        assert_eq!(sp.1, Status::Indefinite);
    }

    #[test]
    fn loads_from_disk_like_bundled() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("policy/iit.norm");
        let disk = PolicyBundle::load(&dir).unwrap();
        let embedded = bundle();
        assert_eq!(disk.spec, embedded.spec);
        assert_eq!(disk.schema, embedded.schema);
        assert_eq!(disk.params, embedded.params);
        assert_eq!(disk.fixtures, embedded.fixtures);
    }

    #[test]
    fn inconsistent_schema_is_rejected() {
        let text = SpecText::new("fact a : integer\n", "t");
        let err = PolicyBundle::assemble(
            text,
            Some((r#"{"questions":[{"fact":"a","prompt":"?","type":"boolean","required":true,"allowsUnknown":false}]}"#, "q")),
            None,
            Vec::new(),
        )
        .unwrap_err();
        assert!(matches!(err, PolicyError::Inconsistent(_)));
    }
}
