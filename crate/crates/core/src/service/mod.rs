//! Case administration around the engine: clients, cases, statuses,
//! urgency, audit, users and persistence, plus the HTTP API.

pub mod auth;
pub mod clock;
pub mod config;
pub mod error;
pub mod http;
pub mod model;
pub mod store;

use std::sync::Arc;

use chrono::{Duration, NaiveDate};
use parking_lot::{Mutex, RwLock};
use serde::Deserialize;

pub use auth::{AllowAll, Permission, PermissionHook, User, UserView};
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::ServiceConfig;
pub use error::ServiceError;
pub use model::*;
pub use store::{CasePatch, ClientPatch, Record, StoreError};

use crate::dsl::SourceRef;
use crate::engine::{Status, Violation};
use crate::policy::PolicyBundle;
use crate::simulation::{self, ActionTree, NodeExplanation, ScenarioView};
use store::{apply, next_id, Change, ClientRef, EventLog, Store};

/// User id recorded for changes the service makes on its own (seeding,
/// scheduled duty checks).
pub const SYSTEM_USER: &str = "system";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NewClient {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub kind: Option<String>,
}

/// Input of case creation. Admin fields are validated here so every
/// missing one is reported at once.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateCase {
    #[serde(default)]
    pub client: Option<NewClient>,
    #[serde(default)]
    pub client_id: Option<String>,
    #[serde(default)]
    pub case_type: Option<String>,
    #[serde(default)]
    pub created_on: Option<NaiveDate>,
    #[serde(default)]
    pub decision_term: Option<NaiveDate>,
    #[serde(default)]
    pub notes: Option<String>,
    #[serde(default)]
    pub answers: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct CaseQuery {
    pub status: Option<String>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub q: Option<String>,
    pub sort: Option<String>,
    pub order: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortKey {
    Naam,
    Termijn,
    Actie,
    Gewijzigd,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScenarioSource {
    Blank,
    Case(String),
    Fixture(String),
}

pub struct Service {
    config: ServiceConfig,
    bundle: Arc<PolicyBundle>,
    clock: Arc<dyn Clock>,
    hook: Arc<dyn PermissionHook>,
    sessions: auth::Sessions,
    store: RwLock<Store>,
    log: Option<Mutex<EventLog>>,
}

impl Service {
    /// Opens the data directory, replays it, and seeds fixtures into an
    /// empty store when configured to.
    pub fn open(
        config: ServiceConfig,
        bundle: Arc<PolicyBundle>,
        clock: Arc<dyn Clock>,
    ) -> Result<Service, StoreError> {
        let (log, store) = EventLog::open(&config.data_dir, &bundle)?;
        let svc = Service {
            config,
            bundle,
            clock,
            hook: Arc::new(AllowAll),
            sessions: auth::Sessions::default(),
            store: RwLock::new(store),
            log: Some(Mutex::new(log)),
        };
        if svc.config.seed_fixtures && svc.store.read().seq == 0 {
            svc.seed().map_err(|e| StoreError::Corrupt {
                path: "seed fixtures".into(),
                line: 0,
                message: e.to_string(),
            })?;
        }
        Ok(svc)
    }

    /// A service without persistence, for tests and one-off tools.
    pub fn in_memory(
        config: ServiceConfig,
        bundle: Arc<PolicyBundle>,
        clock: Arc<dyn Clock>,
    ) -> Service {
        let svc = Service {
            config,
            bundle,
            clock,
            hook: Arc::new(AllowAll),
            sessions: auth::Sessions::default(),
            store: RwLock::new(Store::default()),
            log: None,
        };
        if svc.config.seed_fixtures {
            svc.seed().expect("bundled fixtures seed cleanly");
        }
        svc
    }

    pub fn with_permission_hook(mut self, hook: Arc<dyn PermissionHook>) -> Self {
        self.hook = hook;
        self
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn bundle(&self) -> &PolicyBundle {
        &self.bundle
    }

    pub fn today(&self) -> NaiveDate {
        self.clock.today()
    }

    /// Builds a record against the current store, applies it, logs it and
    /// installs the result. `build` returning `None` means nothing to do.
    /// All writes funnel through here, one at a time, so the log order is
    /// the order in which changes became visible.
    fn commit(
        &self,
        build: impl FnOnce(&Store) -> Result<Option<Record>, ServiceError>,
    ) -> Result<Option<Change>, ServiceError> {
        let mut store = self.store.write();
        let Some(record) = build(&store)? else {
            return Ok(None);
        };
        let change = apply(&self.bundle, &store, &record)?;
        let seq = store.seq + 1;
        if let Some(log) = &self.log {
            log.lock()
                .append(seq, &record)
                .map_err(|e| ServiceError::Storage(e.to_string()))?;
        }
        store.seq = seq;
        store.install(change.clone());
        if let Some(log) = &self.log {
            if seq.is_multiple_of(self.config.snapshot_every) {
                if let Err(e) = log.lock().write_snapshot(&store) {
                    tracing::warn!(error = %e, "snapshot failed; the event log is still complete");
                }
            }
        }
        Ok(Some(change))
    }

    fn permit(&self, user: &User, p: Permission) -> Result<(), ServiceError> {
        if self.hook.permits(user, p) {
            Ok(())
        } else {
            Err(ServiceError::Forbidden)
        }
    }

    // ---- users ----

    pub fn register(&self, name: &str, secret: &str) -> Result<UserView, ServiceError> {
        let name = name.trim();
        let mut fields = Vec::new();
        if name.is_empty() {
            fields.push("name".to_string());
        }
        if secret.chars().count() < 8 {
            fields.push("secret".to_string());
        }
        if !fields.is_empty() {
            return Err(ServiceError::Validation(fields));
        }
        if self.store.read().users.contains_key(name) {
            return Err(ServiceError::DuplicateName(name.to_string()));
        }
        let hash = auth::hash_secret(secret);
        let at = self.clock.now();
        let change = self.commit(|store| {
            let user = User {
                id: next_id("U", store.users.len()),
                name: name.to_string(),
                credential_hash: hash,
                role: auth::DEFAULT_ROLE.to_string(),
                created_at: at,
            };
            Ok(Some(Record::UserRegistered { user }))
        })?;
        match change {
            Some(Change::User(u)) => Ok(UserView::from(&u)),
            _ => unreachable!("user registration installs a user"),
        }
    }

    /// Returns a session token. Unknown names and wrong secrets fail the
    /// same way.
    pub fn login(&self, name: &str, secret: &str) -> Result<String, ServiceError> {
        let user = self.store.read().users.get(name.trim()).cloned();
        let hash = user
            .as_ref()
            .map_or(auth::dummy_hash(), |u| u.credential_hash.as_str());
        let ok = auth::verify_secret(secret, hash);
        match user {
            Some(u) if ok => Ok(self.sessions.issue(&u.id)),
            _ => Err(ServiceError::InvalidCredentials),
        }
    }

    pub fn logout(&self, token: &str) -> bool {
        self.sessions.revoke(token)
    }

    pub fn authenticate(&self, token: Option<&str>) -> Result<User, ServiceError> {
        let id = token
            .and_then(|t| self.sessions.user_id(t))
            .ok_or(ServiceError::Unauthorized)?;
        self.store
            .read()
            .user_by_id(&id)
            .cloned()
            .ok_or(ServiceError::Unauthorized)
    }

    // ---- cases ----

    pub fn create_case(&self, user: &User, input: CreateCase) -> Result<CaseView, ServiceError> {
        self.permit(user, Permission::WriteCases)?;
        let today = self.clock.today();
        let at = self.clock.now();
        let mut fields = Vec::new();

        let new_client = match (&input.client_id, &input.client) {
            (Some(_), _) => None,
            (None, c) => {
                let c = c.clone().unwrap_or_default();
                let name = c
                    .name
                    .as_deref()
                    .map(str::trim)
                    .unwrap_or_default()
                    .to_string();
                if name.is_empty() {
                    fields.push("naam klant".to_string());
                }
                let kind = match c.kind.as_deref() {
                    None => Some(ClientKind::Civilian),
                    Some(k) => k.parse::<ClientKind>().ok(),
                };
                if kind.is_none() {
                    fields.push("soort klant".to_string());
                }
                Some((name, kind.unwrap_or(ClientKind::Civilian)))
            }
        };
        let case_type = input
            .case_type
            .as_deref()
            .map(str::trim)
            .map(str::to_string)
            .or_else(|| self.bundle.params.case.case_type.clone())
            .unwrap_or_default();
        if case_type.is_empty() {
            fields.push("zaaktype".to_string());
        }
        let created_on = input.created_on.unwrap_or(today);
        if created_on > today {
            fields.push("aanmaakdatum".to_string());
        }
        let decision_term = input.decision_term.unwrap_or_else(|| {
            created_on + Duration::days(self.config.decision_period.days_for(&case_type))
        });
        if decision_term < created_on {
            fields.push("beslistermijn".to_string());
        }
        for q in &self.bundle.schema.questions {
            match input.answers.get(&q.fact) {
                None if q.required => fields.push(q.fact.clone()),
                Some(serde_json::Value::Null) if !q.allows_unknown => fields.push(q.fact.clone()),
                _ => {}
            }
        }
        if !fields.is_empty() {
            return Err(ServiceError::Validation(fields));
        }

        let change = self.commit(|store| {
            let client = match (&input.client_id, new_client) {
                (Some(id), _) => {
                    if !store.clients.contains_key(id) {
                        return Err(ServiceError::NotFound(format!("client `{id}`")));
                    }
                    ClientRef::Existing(id.clone())
                }
                (None, Some((name, kind))) => ClientRef::New(Client {
                    id: next_id("K", store.clients.len()),
                    name,
                    kind,
                }),
                (None, None) => unreachable!("a new client is built when no id is given"),
            };
            Ok(Some(Record::CaseCreated {
                at,
                user: user.id.clone(),
                case_id: next_id("Z", store.cases.len()),
                client,
                case_type,
                created_on,
                decision_term,
                notes: input.notes.unwrap_or_default(),
                answers: input.answers,
            }))
        })?;
        self.case_view_of(change)
    }

    pub fn get_case(&self, user: &User, id: &str) -> Result<CaseView, ServiceError> {
        self.permit(user, Permission::ReadCases)?;
        let store = self.store.read();
        let case = store
            .cases
            .get(id)
            .ok_or_else(|| ServiceError::NotFound(format!("case `{id}`")))?;
        Ok(self.view(&store, case))
    }

    pub fn edit_case(
        &self,
        user: &User,
        id: &str,
        patch: CasePatch,
    ) -> Result<EditResult, ServiceError> {
        self.permit(user, Permission::WriteCases)?;
        let before = self.pending_statuses(id)?;
        let at = self.clock.now();
        let change = self.commit(|_| {
            Ok(Some(Record::CaseEdited {
                at,
                user: user.id.clone(),
                case_id: id.to_string(),
                patch,
            }))
        })?;
        let case = self.case_view_of(change)?;
        let after = self.pending_statuses(id)?;
        let changed_statuses = after
            .iter()
            .filter_map(|(naam, now)| {
                let was = before.iter().find(|(n, _)| n == naam).map(|(_, s)| *s)?;
                (was != *now).then(|| StatusChange {
                    naam: naam.clone(),
                    before: was,
                    after: *now,
                })
            })
            .collect();
        Ok(EditResult {
            case,
            changed_statuses,
        })
    }

    fn pending_statuses(&self, id: &str) -> Result<Vec<(String, Status)>, ServiceError> {
        let case = self.case_arc(id)?;
        let engine = self.bundle.engine();
        Ok(engine
            .available_actions(&case.norm_state)
            .into_iter()
            .map(|(a, s)| (a.name.clone(), s.status))
            .collect())
    }

    fn case_arc(&self, id: &str) -> Result<Arc<Case>, ServiceError> {
        self.store
            .read()
            .cases
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("case `{id}`")))
    }

    pub fn execute_action(
        &self,
        user: &User,
        id: &str,
        act: &str,
        motivation: Option<&str>,
    ) -> Result<ExecuteResult, ServiceError> {
        self.permit(user, Permission::ExecuteActions)?;
        let at = self.clock.now();
        let before = self.case_arc(id)?.violations.len();
        let change = self.commit(|_| {
            Ok(Some(Record::ActionExecuted {
                at,
                user: user.id.clone(),
                case_id: id.to_string(),
                act: act.to_string(),
                motivation: motivation.map(str::to_string),
            }))
        })?;
        let case = self.case_view_of(change)?;
        let violation = case.violations.get(before).cloned();
        Ok(ExecuteResult { case, violation })
    }

    pub fn case_actions(&self, user: &User, id: &str) -> Result<CaseActions, ServiceError> {
        self.permit(user, Permission::ReadCases)?;
        let case = self.case_arc(id)?;
        Ok(self.actions_of(&case))
    }

    fn actions_of(&self, case: &Case) -> CaseActions {
        let engine = self.bundle.engine();
        let afgerond = case
            .norm_state
            .history()
            .iter()
            .map(|h| CompletedAction {
                naam: h.act.clone(),
                status: h.status_at_execution.status,
                bronnen: self
                    .bundle
                    .spec
                    .act(&h.act)
                    .map(|a| a.sources.clone())
                    .unwrap_or_default(),
                actor: h.actor.clone(),
                at: h.at,
                motivation: h.motivation.clone(),
                violation: violation_for(&case.violations, &h.act),
            })
            .collect();
        let vervolg = engine
            .available_actions(&case.norm_state)
            .into_iter()
            .map(|(a, s)| PendingAction {
                naam: a.name.clone(),
                motivation_required: s.status.needs_motivation(),
                status: s.status,
                bronnen: a.sources.clone(),
                redenen: s.reasons,
            })
            .collect();
        CaseActions { afgerond, vervolg }
    }

    /// First Allowed pending act, else the first Indefinite one. Decided
    /// cases have none.
    fn next_action(&self, case: &Case) -> Option<(String, Status)> {
        if case.status == CaseStatus::Afgerond {
            return None;
        }
        let actions = self.bundle.engine().available_actions(&case.norm_state);
        let pick = |want: Status| {
            actions
                .iter()
                .find(|(_, s)| s.status == want)
                .map(|(a, s)| (a.name.clone(), s.status))
        };
        pick(Status::Allowed).or_else(|| pick(Status::Indefinite))
    }

    fn case_view_of(&self, change: Option<Change>) -> Result<CaseView, ServiceError> {
        match change {
            Some(Change::Case { case, .. }) => {
                let store = self.store.read();
                Ok(self.view(&store, &case))
            }
            _ => Err(ServiceError::Storage("expected a case change".into())),
        }
    }

    fn client_of(&self, store: &Store, case: &Case) -> Client {
        store
            .clients
            .get(&case.client_id)
            .cloned()
            .unwrap_or(Client {
                id: case.client_id.clone(),
                name: String::new(),
                kind: ClientKind::Civilian,
            })
    }

    fn view(&self, store: &Store, case: &Case) -> CaseView {
        CaseView {
            id: case.id.clone(),
            client: self.client_of(store, case),
            case_type: case.case_type.clone(),
            created_on: case.created_on,
            decision_term: case.decision_term,
            last_modified: case.last_modified,
            notes: case.notes.clone(),
            answers: case.answers.clone(),
            status: case.status,
            outcome: case.outcome,
            amount: case.amount,
            urgency: compute_urgency(case.decision_term, self.clock.today(), self.config.urgency),
            next_action: self.next_action(case).map(|(a, _)| a),
            violations: case.violations.clone(),
            audit: case.audit.clone(),
            norm_state: case.norm_state.clone(),
        }
    }

    fn summary(&self, store: &Store, case: &Case, today: NaiveDate) -> CaseSummary {
        CaseSummary {
            id: case.id.clone(),
            naam: self.client_of(store, case).name,
            client_id: case.client_id.clone(),
            case_type: case.case_type.clone(),
            status: case.status,
            created_on: case.created_on,
            decision_term: case.decision_term,
            urgency: compute_urgency(case.decision_term, today, self.config.urgency),
            next_action: self.next_action(case).map(|(a, _)| a),
            last_modified: case.last_modified,
        }
    }

    /// Filtered, sorted case overview. Descending order is the exact
    /// reverse of ascending, ties included.
    pub fn list_cases(&self, user: &User, query: &CaseQuery) -> Result<CasePage, ServiceError> {
        self.permit(user, Permission::ReadCases)?;
        let key = match query.sort.as_deref().unwrap_or("termijn") {
            "naam" => SortKey::Naam,
            "termijn" => SortKey::Termijn,
            "actie" => SortKey::Actie,
            "gewijzigd" => SortKey::Gewijzigd,
            other => {
                return Err(ServiceError::InvalidQuery {
                    field: "sort",
                    value: other.to_string(),
                })
            }
        };
        let descending = match query.order.as_deref().unwrap_or("asc") {
            "asc" => false,
            "desc" => true,
            other => {
                return Err(ServiceError::InvalidQuery {
                    field: "order",
                    value: other.to_string(),
                })
            }
        };
        let status = match query.status.as_deref() {
            None | Some("") => None,
            Some(s) => {
                Some(
                    CaseStatus::from_code(s).ok_or_else(|| ServiceError::InvalidQuery {
                        field: "status",
                        value: s.to_string(),
                    })?,
                )
            }
        };
        let needle = query
            .q
            .as_deref()
            .map(str::trim)
            .filter(|q| !q.is_empty())
            .map(str::to_lowercase);
        let today = self.clock.today();
        let store = self.store.read();
        let mut items: Vec<CaseSummary> = store
            .cases
            .values()
            .filter(|c| status.is_none_or(|s| c.status == s))
            .filter(|c| query.from.is_none_or(|f| c.decision_term >= f))
            .filter(|c| query.to.is_none_or(|t| c.decision_term <= t))
            .map(|c| (c, self.summary(&store, c, today)))
            .filter(|(c, s)| {
                needle.as_ref().is_none_or(|n| {
                    [&s.naam, &s.id, &s.case_type, &c.notes]
                        .iter()
                        .any(|f| f.to_lowercase().contains(n.as_str()))
                })
            })
            .map(|(_, s)| s)
            .collect();
        items.sort_by(|a, b| {
            let primary = match key {
                SortKey::Naam => a.naam.cmp(&b.naam),
                SortKey::Termijn => a.decision_term.cmp(&b.decision_term),
                SortKey::Actie => a.next_action.cmp(&b.next_action),
                SortKey::Gewijzigd => a.last_modified.cmp(&b.last_modified),
            };
            primary.then_with(|| a.id.cmp(&b.id))
        });
        if descending {
            items.reverse();
        }
        let total = items.len();
        Ok(CasePage { items, total })
    }

    /// Cases where the next move is the officer's: open, not waiting on the
    /// client, with a pending act. Nearest term first.
    pub fn open_actions(&self, user: &User) -> Result<Vec<OpenAction>, ServiceError> {
        self.permit(user, Permission::ReadCases)?;
        let today = self.clock.today();
        let store = self.store.read();
        let mut out: Vec<OpenAction> = store
            .cases
            .values()
            .filter(|c| c.status == CaseStatus::InBehandeling)
            .filter_map(|c| {
                let (action, status) = self.next_action(c)?;
                Some(OpenAction {
                    case: self.summary(&store, c, today),
                    action,
                    status,
                    decision_term: c.decision_term,
                })
            })
            .collect();
        out.sort_by(|a, b| {
            a.decision_term
                .cmp(&b.decision_term)
                .then_with(|| a.case.id.cmp(&b.case.id))
        });
        Ok(out)
    }

    /// Marks overdue duties on every case. Only cases with a new violation
    /// get a record. Returns the number of violations raised.
    pub fn sweep_duties(&self) -> Result<usize, ServiceError> {
        let today = self.clock.today();
        let ids: Vec<String> = self.store.read().cases.keys().cloned().collect();
        let engine = self.bundle.engine();
        let mut raised = 0;
        for id in ids {
            let at = self.clock.now();
            let change = self.commit(|store| {
                let Some(case) = store.cases.get(&id) else {
                    return Ok(None);
                };
                let (_, vs) = engine.check_duties(&case.norm_state, today);
                if vs.is_empty() {
                    return Ok(None);
                }
                raised += vs.len();
                Ok(Some(Record::DutiesChecked {
                    at,
                    user: SYSTEM_USER.into(),
                    case_id: id.clone(),
                    clock: today,
                }))
            })?;
            let _ = change;
        }
        Ok(raised)
    }

    // ---- sources ----

    /// Sources of the active spec followed by manually added ones.
    pub fn list_sources(&self) -> Vec<SourceRef> {
        let mut out = self.bundle.spec.all_sources();
        for s in &self.store.read().sources {
            if !out.iter().any(|o| o.title == s.title && o.url == s.url) {
                out.push(s.clone());
            }
        }
        out
    }

    pub fn add_source(&self, user: &User, source: SourceRef) -> Result<SourceRef, ServiceError> {
        self.permit(user, Permission::ManageSources)?;
        let at = self.clock.now();
        let source = SourceRef {
            title: source.title.trim().to_string(),
            ..source
        };
        self.commit(|_| {
            Ok(Some(Record::SourceAdded {
                at,
                user: user.id.clone(),
                source: source.clone(),
            }))
        })?;
        Ok(source)
    }

    // ---- simulation ----

    pub fn create_scenario(
        &self,
        user: &User,
        source: ScenarioSource,
        label: Option<String>,
    ) -> Result<ScenarioView, ServiceError> {
        self.permit(user, Permission::Simulate)?;
        let at = self.clock.now();
        let engine = self.bundle.engine();
        let (base_state, default_label) = match &source {
            ScenarioSource::Blank => (
                engine.init_state(self.bundle.params.facts.clone(), at.date())?,
                "blank".to_string(),
            ),
            ScenarioSource::Case(id) => {
                self.permit(user, Permission::ReadCases)?;
                (self.case_arc(id)?.norm_state.clone(), format!("case {id}"))
            }
            ScenarioSource::Fixture(name) => {
                let f = self
                    .bundle
                    .fixture(name)
                    .ok_or_else(|| ServiceError::NotFound(format!("fixture `{name}`")))?;
                (
                    engine.init_state(self.bundle.assignments_for(&f.answers)?, at.date())?,
                    format!("fixture {name}"),
                )
            }
        };
        let label = label
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .unwrap_or(default_label);
        let change = self.commit(|store| {
            Ok(Some(Record::ScenarioCreated {
                at,
                user: user.id.clone(),
                scenario_id: next_id("S", store.scenarios.len()),
                label,
                base_state,
            }))
        })?;
        scenario_view_of(change)
    }

    fn scenario_arc(&self, id: &str) -> Result<Arc<simulation::Scenario>, ServiceError> {
        self.store
            .read()
            .scenarios
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("simulation `{id}`")))
    }

    pub fn get_scenario(&self, user: &User, id: &str) -> Result<ScenarioView, ServiceError> {
        self.permit(user, Permission::Simulate)?;
        Ok(self.scenario_arc(id)?.view())
    }

    pub fn add_rule_version(
        &self,
        user: &User,
        id: &str,
        rule_id: &str,
        text: &str,
    ) -> Result<ScenarioView, ServiceError> {
        self.permit(user, Permission::Simulate)?;
        let at = self.clock.now();
        let change = self.commit(|_| {
            Ok(Some(Record::ScenarioVersionAdded {
                at,
                user: user.id.clone(),
                scenario_id: id.to_string(),
                rule_id: rule_id.to_string(),
                text: text.to_string(),
            }))
        })?;
        scenario_view_of(change)
    }

    pub fn toggle_rule(
        &self,
        user: &User,
        id: &str,
        rule_id: &str,
        version: Option<&str>,
    ) -> Result<ScenarioView, ServiceError> {
        self.permit(user, Permission::Simulate)?;
        let at = self.clock.now();
        let change = self.commit(|_| {
            Ok(Some(Record::ScenarioRuleToggled {
                at,
                user: user.id.clone(),
                scenario_id: id.to_string(),
                rule_id: rule_id.to_string(),
                version: version.map(str::to_string),
            }))
        })?;
        scenario_view_of(change)
    }

    pub fn scenario_tree(
        &self,
        user: &User,
        id: &str,
        depth: usize,
    ) -> Result<ActionTree, ServiceError> {
        self.permit(user, Permission::Simulate)?;
        let s = self.scenario_arc(id)?;
        Ok(simulation::build_tree(
            &s,
            depth,
            self.config.max_tree_depth,
        )?)
    }

    pub fn explain_node(
        &self,
        user: &User,
        id: &str,
        node: usize,
        depth: Option<usize>,
    ) -> Result<NodeExplanation, ServiceError> {
        self.permit(user, Permission::Simulate)?;
        let s = self.scenario_arc(id)?;
        let tree = simulation::build_tree(
            &s,
            depth.unwrap_or(self.config.max_tree_depth),
            self.config.max_tree_depth,
        )?;
        Ok(simulation::explain_node(&s, &tree, node)?)
    }

    // ---- persistence helpers ----

    /// Serialized case record as persisted, for comparing runs.
    pub fn case_snapshot(&self, id: &str) -> Option<String> {
        self.store
            .read()
            .cases
            .get(id)
            .map(|c| serde_json::to_string(&**c).expect("case serializes"))
    }

    pub fn case_ids(&self) -> Vec<String> {
        self.store.read().cases.keys().cloned().collect()
    }

    pub fn sequence(&self) -> u64 {
        self.store.read().seq
    }

    /// Writes a snapshot now, regardless of the configured interval.
    pub fn snapshot(&self) -> Result<(), ServiceError> {
        let store = self.store.read();
        match &self.log {
            Some(log) => log
                .lock()
                .write_snapshot(&store)
                .map_err(|e| ServiceError::Storage(e.to_string())),
            None => Ok(()),
        }
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let s = self.store.read();
        (s.cases.len(), s.users.len(), s.scenarios.len())
    }

    /// Loads the bundle's seed fixtures as cases created by the system user.
    fn seed(&self) -> Result<(), ServiceError> {
        let system = User {
            id: SYSTEM_USER.into(),
            name: SYSTEM_USER.into(),
            credential_hash: String::new(),
            role: auth::DEFAULT_ROLE.into(),
            created_at: self.clock.now(),
        };
        let today = self.clock.today();
        let fixtures: Vec<_> = self
            .bundle
            .fixtures
            .values()
            .filter(|f| f.seed)
            .cloned()
            .collect();
        for f in fixtures {
            let created_on = today + Duration::days(f.created_offset_days.min(0));
            let input = CreateCase {
                client: Some(NewClient {
                    name: Some(f.client.name.clone()),
                    kind: Some(f.client.kind.clone()),
                }),
                created_on: Some(created_on),
                decision_term: f.term_offset_days.map(|d| today + Duration::days(d)),
                notes: Some(f.description.clone()),
                answers: f.answers.clone(),
                ..CreateCase::default()
            };
            let case = self.create_case(&system, input)?;
            for x in &f.executions {
                self.execute_action(&system, &case.id, &x.act, x.motivation.as_deref())?;
            }
        }
        Ok(())
    }
}

fn violation_for(violations: &[Violation], act: &str) -> Option<Violation> {
    violations
        .iter()
        .find(|v| v.kind == crate::engine::ViolationKind::NonPermittedExecution && v.subject == act)
        .cloned()
}

fn scenario_view_of(change: Option<Change>) -> Result<ScenarioView, ServiceError> {
    match change {
        Some(Change::Scenario(s)) => Ok(s.view()),
        _ => Err(ServiceError::Storage("expected a scenario change".into())),
    }
}

/// Loads the configured bundle, or the built-in one.
pub fn load_bundle(config: &ServiceConfig) -> Result<PolicyBundle, crate::policy::PolicyError> {
    match &config.spec_path {
        Some(p) => PolicyBundle::load(p),
        None => crate::policy::load_bundled_policy(),
    }
}

#[cfg(test)]
mod tests;
