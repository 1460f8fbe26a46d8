use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::config::UrgencyThresholds;
use crate::dsl::SourceRef;
use crate::engine::{NormState, Reason, Status, Violation};
use crate::policy::Money;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientKind {
    Civilian,
    Organisation,
    Government,
}

impl std::str::FromStr for ClientKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "civilian" => Ok(ClientKind::Civilian),
            "organisation" => Ok(ClientKind::Organisation),
            "government" => Ok(ClientKind::Government),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Client {
    pub id: String,
    pub name: String,
    pub kind: ClientKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseStatus {
    #[serde(rename = "in_behandeling")]
    InBehandeling,
    #[serde(rename = "wachten_op_bericht")]
    WachtenOpBericht,
    #[serde(rename = "afgerond")]
    Afgerond,
}

impl CaseStatus {
    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "in_behandeling" => Some(CaseStatus::InBehandeling),
            "wachten_op_bericht" => Some(CaseStatus::WachtenOpBericht),
            "afgerond" => Some(CaseStatus::Afgerond),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionOutcome {
    Approved,
    Denied,
    NotTakenIntoAccount,
}

impl DecisionOutcome {
    /// Maps the value a decision act writes to the outcome fact.
    pub fn from_fact_value(s: &str) -> Option<Self> {
        match s {
            "approved" => Some(DecisionOutcome::Approved),
            "denied" => Some(DecisionOutcome::Denied),
            "not-taken-into-account" => Some(DecisionOutcome::NotTakenIntoAccount),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub at: NaiveDateTime,
    pub user: String,
    pub action: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Case {
    pub id: String,
    pub client_id: String,
    pub case_type: String,
    pub created_on: NaiveDate,
    pub decision_term: NaiveDate,
    pub last_modified: NaiveDateTime,
    pub notes: String,
    /// Answers as entered, `null` for "niet bekend".
    pub answers: serde_json::Map<String, serde_json::Value>,
    pub norm_state: NormState,
    pub status: CaseStatus,
    pub outcome: Option<DecisionOutcome>,
    pub amount: Option<Money>,
    pub violations: Vec<Violation>,
    pub audit: Vec<AuditEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UrgencyClock {
    Green,
    Yellow,
    Red,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Urgency {
    pub clock: UrgencyClock,
    /// The term has passed; always shown together with a red clock.
    pub overdue: bool,
    pub days_remaining: i64,
}

pub fn compute_urgency(
    decision_term: NaiveDate,
    today: NaiveDate,
    t: UrgencyThresholds,
) -> Urgency {
    let days = (decision_term - today).num_days();
    let clock = if days <= t.red_days {
        UrgencyClock::Red
    } else if days <= t.yellow_days {
        UrgencyClock::Yellow
    } else {
        UrgencyClock::Green
    };
    Urgency {
        clock: if days < 0 { UrgencyClock::Red } else { clock },
        overdue: days < 0,
        days_remaining: days,
    }
}

/// Row of the case overview tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseSummary {
    pub id: String,
    pub naam: String,
    pub client_id: String,
    pub case_type: String,
    pub status: CaseStatus,
    pub created_on: NaiveDate,
    pub decision_term: NaiveDate,
    pub urgency: Urgency,
    pub next_action: Option<String>,
    pub last_modified: NaiveDateTime,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CasePage {
    pub items: Vec<CaseSummary>,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseView {
    pub id: String,
    pub client: Client,
    pub case_type: String,
    pub created_on: NaiveDate,
    pub decision_term: NaiveDate,
    pub last_modified: NaiveDateTime,
    pub notes: String,
    pub answers: serde_json::Map<String, serde_json::Value>,
    pub status: CaseStatus,
    pub outcome: Option<DecisionOutcome>,
    pub amount: Option<Money>,
    pub urgency: Urgency,
    pub next_action: Option<String>,
    pub violations: Vec<Violation>,
    pub audit: Vec<AuditEvent>,
    pub norm_state: NormState,
}

/// Pending act of a case with its current status.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PendingAction {
    pub naam: String,
    pub status: Status,
    pub bronnen: Vec<SourceRef>,
    pub redenen: Vec<Reason>,
    pub motivation_required: bool,
}

/// Executed act with its status at execution time.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletedAction {
    pub naam: String,
    pub status: Status,
    pub bronnen: Vec<SourceRef>,
    pub actor: String,
    pub at: NaiveDateTime,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motivation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseActions {
    pub afgerond: Vec<CompletedAction>,
    pub vervolg: Vec<PendingAction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StatusChange {
    pub naam: String,
    pub before: Status,
    pub after: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EditResult {
    pub case: CaseView,
    /// Pending acts whose status differs from before the edit.
    pub changed_statuses: Vec<StatusChange>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExecuteResult {
    pub case: CaseView,
    pub violation: Option<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OpenAction {
    pub case: CaseSummary,
    pub action: String,
    pub status: Status,
    pub decision_term: NaiveDate,
}
