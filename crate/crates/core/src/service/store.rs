//! Event-sourced case store.
//!
//! Every mutation is a [`Record`]. A record is applied to the in-memory
//! [`Store`] by [`apply`], which is the only place state changes are
//! computed; live requests and startup replay both go through it, so a
//! replayed log rebuilds exactly the state that was served.
//!
//! On disk the data directory holds `events.jsonl` (one `{seq, record}`
//! object per line, never rewritten) and `snapshot.json` (the full store
//! at some sequence number).

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::auth::User;
use super::error::ServiceError;
use super::model::{AuditEvent, Case, CaseStatus, Client, ClientKind, DecisionOutcome};
use crate::dsl::{SourceRef, Value};
use crate::engine::{Engine, FactInstance, NormState};
use crate::policy::{decision_amount, PolicyBundle};
use crate::simulation::{Scenario, ScenarioView};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientRef {
    Existing(String),
    New(Client),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ClientPatch {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub kind: Option<ClientKind>,
}

/// Fields of a case that an edit may change; absent fields stay as they are.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CasePatch {
    #[serde(default)]
    pub answers: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default)]
    pub decision_term: Option<NaiveDate>,
    #[serde(default)]
    pub notes: Option<String>,
    #[serde(default)]
    pub case_type: Option<String>,
    #[serde(default)]
    pub client: Option<ClientPatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    UserRegistered {
        user: User,
    },
    CaseCreated {
        at: NaiveDateTime,
        user: String,
        case_id: String,
        client: ClientRef,
        case_type: String,
        created_on: NaiveDate,
        decision_term: NaiveDate,
        notes: String,
        answers: serde_json::Map<String, serde_json::Value>,
    },
    CaseEdited {
        at: NaiveDateTime,
        user: String,
        case_id: String,
        patch: CasePatch,
    },
    ActionExecuted {
        at: NaiveDateTime,
        user: String,
        case_id: String,
        act: String,
        motivation: Option<String>,
    },
    DutiesChecked {
        at: NaiveDateTime,
        user: String,
        case_id: String,
        clock: NaiveDate,
    },
    SourceAdded {
        at: NaiveDateTime,
        user: String,
        source: SourceRef,
    },
    ScenarioCreated {
        at: NaiveDateTime,
        user: String,
        scenario_id: String,
        label: String,
        base_state: NormState,
    },
    ScenarioVersionAdded {
        at: NaiveDateTime,
        user: String,
        scenario_id: String,
        rule_id: String,
        text: String,
    },
    ScenarioRuleToggled {
        at: NaiveDateTime,
        user: String,
        scenario_id: String,
        rule_id: String,
        version: Option<String>,
    },
}

/// Result of applying one record, installed into the store afterwards.
#[derive(Clone, Debug)]
pub enum Change {
    User(User),
    Case {
        case: Arc<Case>,
        client: Option<Client>,
    },
    Source(SourceRef),
    Scenario(Arc<Scenario>),
}

#[derive(Clone, Debug, Default)]
pub struct Store {
    pub seq: u64,
    /// Keyed by user name.
    pub users: BTreeMap<String, User>,
    pub clients: BTreeMap<String, Client>,
    pub cases: BTreeMap<String, Arc<Case>>,
    pub sources: Vec<SourceRef>,
    pub scenarios: BTreeMap<String, Arc<Scenario>>,
}

pub fn next_id(prefix: &str, taken: usize) -> String {
    format!("{prefix}-{:05}", taken + 1)
}

impl Store {
    pub fn user_by_id(&self, id: &str) -> Option<&User> {
        self.users.values().find(|u| u.id == id)
    }

    pub fn install(&mut self, change: Change) {
        match change {
            Change::User(u) => {
                self.users.insert(u.name.clone(), u);
            }
            Change::Case { case, client } => {
                if let Some(c) = client {
                    self.clients.insert(c.id.clone(), c);
                }
                self.cases.insert(case.id.clone(), case);
            }
            Change::Source(s) => self.sources.push(s),
            Change::Scenario(s) => {
                self.scenarios.insert(s.id.clone(), s);
            }
        }
    }
}

fn audit(at: NaiveDateTime, user: &str, action: &str, detail: String) -> AuditEvent {
    AuditEvent {
        at,
        user: user.to_string(),
        action: action.to_string(),
        detail,
    }
}

/// Outcome a decision act writes, if `act` is one.
pub fn decision_of(bundle: &PolicyBundle, act: &str) -> Option<DecisionOutcome> {
    let outcome_fact = bundle.params.case.outcome_fact.as_deref()?;
    let decl = bundle.spec.act(act)?;
    decl.creates
        .iter()
        .find_map(|e| match (&e.value, e.target.name == outcome_fact) {
            (Some(Value::Text(v)), true) => DecisionOutcome::from_fact_value(v),
            _ => None,
        })
}

pub fn derive_status(bundle: &PolicyBundle, state: &NormState) -> CaseStatus {
    if state
        .history()
        .iter()
        .any(|h| decision_of(bundle, &h.act).is_some())
    {
        return CaseStatus::Afgerond;
    }
    let waiting = bundle
        .params
        .case
        .client_role
        .as_deref()
        .is_some_and(|role| state.active_duties().any(|d| d.holder == role));
    if waiting {
        CaseStatus::WachtenOpBericht
    } else {
        CaseStatus::InBehandeling
    }
}

fn typed_answers(
    engine: &Engine<'_>,
    answers: &serde_json::Map<String, serde_json::Value>,
) -> Result<Vec<(FactInstance, Option<Value>)>, ServiceError> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for (key, json) in answers {
        let Ok(fact) = key.parse::<FactInstance>() else {
            bad.push(key.clone());
            continue;
        };
        match engine.typed_value(&fact, json) {
            Ok(v) => out.push((fact, v)),
            Err(_) => bad.push(key.clone()),
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(ServiceError::TypeMismatch(bad))
    }
}

fn missing(case_id: &str) -> ServiceError {
    ServiceError::NotFound(format!("case `{case_id}`"))
}

/// Computes the effect of `record` on `store` without changing it.
pub fn apply(
    bundle: &PolicyBundle,
    store: &Store,
    record: &Record,
) -> Result<Change, ServiceError> {
    let engine = bundle.engine();
    let binding = &bundle.params.case;
    match record {
        Record::UserRegistered { user } => {
            if store.users.contains_key(&user.name) {
                return Err(ServiceError::DuplicateName(user.name.clone()));
            }
            Ok(Change::User(user.clone()))
        }

        Record::CaseCreated {
            at,
            user,
            case_id,
            client,
            case_type,
            created_on,
            decision_term,
            notes,
            answers,
        } => {
            if store.cases.contains_key(case_id) {
                return Err(ServiceError::DuplicateName(case_id.clone()));
            }
            let (client, new_client) = match client {
                ClientRef::Existing(id) => match store.clients.get(id) {
                    Some(c) => (c.clone(), None),
                    None => return Err(ServiceError::NotFound(format!("client `{id}`"))),
                },
                ClientRef::New(c) => (c.clone(), Some(c.clone())),
            };
            let mut assignments = bundle.params.facts.clone();
            for (fact, v) in typed_answers(&engine, answers)? {
                match v {
                    Some(v) => assignments.insert(fact, v),
                    None => assignments.remove(&fact),
                };
            }
            if let Some(f) = &binding.decision_term_fact {
                assignments.insert(FactInstance::new(f.as_str()), Value::Date(*decision_term));
            }
            let mut state = engine.init_state(assignments, *created_on)?;
            let mut violations = Vec::new();
            if let Some(intake) = &binding.intake_act {
                let act = engine.act(intake)?;
                let motivation =
                    (engine.status_of(&state, act).status.needs_motivation()).then_some("intake");
                let (next, v) = engine.execute(&state, intake, &act.actor, *at, motivation)?;
                state = next;
                violations.extend(v);
            }
            let case = Case {
                id: case_id.clone(),
                client_id: client.id.clone(),
                case_type: case_type.clone(),
                created_on: *created_on,
                decision_term: *decision_term,
                last_modified: *at,
                notes: notes.clone(),
                answers: answers.clone(),
                status: derive_status(bundle, &state),
                norm_state: state,
                outcome: None,
                amount: None,
                violations,
                audit: vec![audit(
                    *at,
                    user,
                    "case.created",
                    format!("case {case_id} created for {}", client.name),
                )],
            };
            Ok(Change::Case {
                case: Arc::new(case),
                client: new_client,
            })
        }

        Record::CaseEdited {
            at,
            user,
            case_id,
            patch,
        } => {
            let old = store.cases.get(case_id).ok_or_else(|| missing(case_id))?;
            let mut case = Case::clone(old);
            let mut changed = Vec::new();
            let mut client_change = None;
            if let Some(answers) = &patch.answers {
                let mut state = case.norm_state.clone();
                for (fact, v) in typed_answers(&engine, answers)? {
                    state = engine.assign_fact(&state, &fact, v)?;
                }
                case.norm_state = state;
                for (k, v) in answers {
                    case.answers.insert(k.clone(), v.clone());
                }
                let keys: Vec<&str> = answers.keys().map(String::as_str).collect();
                changed.push(format!("answers ({})", keys.join(", ")));
            }
            if let Some(term) = patch.decision_term {
                if term < case.created_on {
                    return Err(ServiceError::Validation(vec!["beslistermijn".into()]));
                }
                case.decision_term = term;
                if let Some(f) = &binding.decision_term_fact {
                    case.norm_state = engine.assign_fact(
                        &case.norm_state,
                        &FactInstance::new(f.as_str()),
                        Some(Value::Date(term)),
                    )?;
                }
                changed.push("decision term".into());
            }
            if let Some(notes) = &patch.notes {
                case.notes = notes.clone();
                changed.push("notes".into());
            }
            if let Some(t) = &patch.case_type {
                if t.trim().is_empty() {
                    return Err(ServiceError::Validation(vec!["zaaktype".into()]));
                }
                case.case_type = t.trim().to_string();
                changed.push("case type".into());
            }
            if let Some(cp) = &patch.client {
                let mut client = store.clients.get(&case.client_id).cloned().ok_or_else(|| {
                    ServiceError::NotFound(format!("client `{}`", case.client_id))
                })?;
                if let Some(name) = &cp.name {
                    if name.trim().is_empty() {
                        return Err(ServiceError::Validation(vec!["naam klant".into()]));
                    }
                    client.name = name.trim().to_string();
                }
                if let Some(kind) = cp.kind {
                    client.kind = kind;
                }
                client_change = Some(client);
                changed.push("client".into());
            }
            case.status = derive_status(bundle, &case.norm_state);
            case.last_modified = *at;
            let detail = if changed.is_empty() {
                "no changes".to_string()
            } else {
                format!("changed {}", changed.join(", "))
            };
            case.audit.push(audit(*at, user, "case.edited", detail));
            Ok(Change::Case {
                case: Arc::new(case),
                client: client_change,
            })
        }

        Record::ActionExecuted {
            at,
            user,
            case_id,
            act,
            motivation,
        } => {
            let old = store.cases.get(case_id).ok_or_else(|| missing(case_id))?;
            let decl = engine.act(act)?;
            if old.norm_state.was_executed(act) {
                return Err(ServiceError::AlreadyExecuted(act.clone()));
            }
            let outcome = decision_of(bundle, act);
            if outcome.is_some() && old.outcome.is_some() {
                return Err(ServiceError::AlreadyDecided(case_id.clone()));
            }
            let motivation = motivation
                .as_deref()
                .map(str::trim)
                .filter(|m| !m.is_empty());
            let (state, violation) =
                engine.execute(&old.norm_state, act, &decl.actor, *at, motivation)?;
            let mut case = Case::clone(old);
            case.norm_state = state;
            let status = case
                .norm_state
                .history()
                .last()
                .map(|h| h.status_at_execution.status);
            let mut detail = format!(
                "executed {act} ({})",
                status.map(|s| s.code()).unwrap_or("?")
            );
            if let Some(v) = violation {
                detail.push_str("; violation recorded");
                case.violations.push(v);
            }
            if let Some(o) = outcome {
                case.outcome = Some(o);
                case.amount = bundle
                    .household_of(act)
                    .and_then(|h| decision_amount(h, &bundle.params));
            }
            case.status = derive_status(bundle, &case.norm_state);
            case.last_modified = *at;
            case.audit.push(audit(*at, user, "action.executed", detail));
            Ok(Change::Case {
                case: Arc::new(case),
                client: None,
            })
        }

        Record::DutiesChecked {
            at,
            user,
            case_id,
            clock,
        } => {
            let old = store.cases.get(case_id).ok_or_else(|| missing(case_id))?;
            let (state, violations) = engine.check_duties(&old.norm_state, *clock);
            let mut case = Case::clone(old);
            case.norm_state = state;
            let names: Vec<&str> = violations.iter().map(|v| v.subject.as_str()).collect();
            let detail = format!(
                "duty check on {clock}: violated {}",
                if names.is_empty() {
                    "none".into()
                } else {
                    names.join(", ")
                }
            );
            case.violations.extend(violations.iter().cloned());
            case.status = derive_status(bundle, &case.norm_state);
            case.last_modified = *at;
            case.audit.push(audit(*at, user, "duty.checked", detail));
            Ok(Change::Case {
                case: Arc::new(case),
                client: None,
            })
        }

        Record::SourceAdded { source, .. } => {
            if source.title.trim().is_empty() {
                return Err(ServiceError::Validation(vec!["title".into()]));
            }
            Ok(Change::Source(source.clone()))
        }

        Record::ScenarioCreated {
            at,
            scenario_id,
            label,
            base_state,
            ..
        } => {
            if store.scenarios.contains_key(scenario_id) {
                return Err(ServiceError::DuplicateName(scenario_id.clone()));
            }
            let s = Scenario::new(
                scenario_id.clone(),
                label.clone(),
                &bundle.spec,
                base_state.clone(),
                *at,
            );
            Ok(Change::Scenario(Arc::new(s)))
        }

        Record::ScenarioVersionAdded {
            at,
            scenario_id,
            rule_id,
            text,
            ..
        } => {
            let mut s = scenario(store, scenario_id)?;
            s.add_rule_version(rule_id, text, *at)?;
            Ok(Change::Scenario(Arc::new(s)))
        }

        Record::ScenarioRuleToggled {
            scenario_id,
            rule_id,
            version,
            ..
        } => {
            let mut s = scenario(store, scenario_id)?;
            s.toggle_rule(rule_id, version.as_deref())?;
            Ok(Change::Scenario(Arc::new(s)))
        }
    }
}

fn scenario(store: &Store, id: &str) -> Result<Scenario, ServiceError> {
    store
        .scenarios
        .get(id)
        .map(|s| Scenario::clone(s))
        .ok_or_else(|| ServiceError::NotFound(format!("simulation `{id}`")))
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    seq: u64,
    record: Record,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    users: Vec<User>,
    clients: Vec<Client>,
    cases: Vec<Case>,
    sources: Vec<SourceRef>,
    scenarios: Vec<ScenarioView>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Append-only event log plus snapshot file in one directory.
pub struct EventLog {
    dir: PathBuf,
    file: File,
}

impl EventLog {
    pub fn events_path(dir: &Path) -> PathBuf {
        dir.join("events.jsonl")
    }

    pub fn snapshot_path(dir: &Path) -> PathBuf {
        dir.join("snapshot.json")
    }

    /// Opens the directory and rebuilds the store from the latest snapshot
    /// and the log records after it. A torn final line, left by a crash
    /// mid-write, is cut off.
    pub fn open(dir: &Path, bundle: &PolicyBundle) -> Result<(EventLog, Store), StoreError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let snap_path = Self::snapshot_path(dir);
        let mut store = if snap_path.exists() {
            let text = std::fs::read_to_string(&snap_path).map_err(io_err(&snap_path))?;
            let corrupt = |message: String| StoreError::Corrupt {
                path: snap_path.display().to_string(),
                line: 1,
                message,
            };
            let snap: Snapshot = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
            let mut store = Store {
                seq: snap.seq,
                sources: snap.sources,
                ..Store::default()
            };
            for u in snap.users {
                store.users.insert(u.name.clone(), u);
            }
            for c in snap.clients {
                store.clients.insert(c.id.clone(), c);
            }
            for c in snap.cases {
                store.cases.insert(c.id.clone(), Arc::new(c));
            }
            for v in snap.scenarios {
                let s = Scenario::restore(&v, &bundle.spec).map_err(|e| corrupt(e.to_string()))?;
                store.scenarios.insert(s.id.clone(), Arc::new(s));
            }
            store
        } else {
            Store::default()
        };

        let path = Self::events_path(dir);
        if path.exists() {
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            let lines: Vec<&[u8]> = bytes.split(|b| *b == b'\n').collect();
            let mut good_len = 0u64;
            let mut torn = false;
            for (i, line) in lines.iter().enumerate() {
                let last = i + 1 == lines.len();
                if last && line.is_empty() {
                    break;
                }
                let parsed = std::str::from_utf8(line)
                    .map_err(|e| e.to_string())
                    .and_then(|s| serde_json::from_str::<LogLine>(s).map_err(|e| e.to_string()));
                let entry = match parsed {
                    Ok(entry) => entry,
                    // only the final, unterminated line can be a crash remnant
                    Err(_) if last => {
                        torn = true;
                        tracing::warn!(line = i + 1, "dropping torn tail of the event log");
                        break;
                    }
                    Err(message) => {
                        return Err(StoreError::Corrupt {
                            path: path.display().to_string(),
                            line: i + 1,
                            message,
                        })
                    }
                };
                good_len += line.len() as u64 + 1;
                if entry.seq <= store.seq {
                    continue;
                }
                let change =
                    apply(bundle, &store, &entry.record).map_err(|e| StoreError::Corrupt {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                store.install(change);
                store.seq = entry.seq;
            }
            if torn {
                let f = OpenOptions::new()
                    .write(true)
                    .open(&path)
                    .map_err(io_err(&path))?;
                f.set_len(good_len).map_err(io_err(&path))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok((
            EventLog {
                dir: dir.to_path_buf(),
                file,
            },
            store,
        ))
    }

    pub fn append(&mut self, seq: u64, record: &Record) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(&LogLine {
            seq,
            record: record.clone(),
        })?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }

    pub fn write_snapshot(&self, store: &Store) -> std::io::Result<()> {
        let snap = Snapshot {
            seq: store.seq,
            users: store.users.values().cloned().collect(),
            clients: store.clients.values().cloned().collect(),
            cases: store.cases.values().map(|c| Case::clone(c)).collect(),
            sources: store.sources.clone(),
            scenarios: store.scenarios.values().map(|s| s.view()).collect(),
        };
        let path = Self::snapshot_path(&self.dir);
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(&snap)?)?;
        std::fs::rename(&tmp, &path)
    }
}
