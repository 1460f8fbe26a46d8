//! Evaluation of a [`NormSpec`] against a case's knowledge state.
//!
//! Conditions are three-valued (strong Kleene). An act whose condition is
//! true is allowed, false is not allowed, unknown is indefinite. Acts of
//! any status can be executed; anything but an allowed act needs a
//! motivation and is recorded as a violation.

mod state;
mod truth;

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

pub use state::{BadFactInstance, DutyInstance, ExecutedAction, FactInstance, NormState};
pub use truth::{NormativeStatus, Reason, Status, TruthValue};

use crate::dsl::{
    printer, ActDecl, DutyDecl, Expr, NormSpec, ScalarType, SourceRef, Termination, Value,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown act `{0}`")]
    UnknownAct(String),
    #[error("unknown fact `{0}`")]
    UnknownFact(String),
    #[error("type mismatch for `{fact}`: expected {expected}")]
    TypeMismatch { fact: String, expected: String },
    #[error("act `{0}` is not allowed in the current state; a motivation is required")]
    MotivationRequired(String),
    #[error("act `{0}` has already been executed")]
    AlreadyExecuted(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ViolationKind {
    NonPermittedExecution,
    DutyViolated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Name of the act or duty concerned.
    pub subject: String,
    pub at: NaiveDateTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motivation: Option<String>,
    pub sources: Vec<SourceRef>,
    /// Conditions that made the act impermissible, with their values.
    #[serde(default)]
    pub clauses: Vec<Reason>,
    pub explanation: String,
}

/// A step of a case's life, in the order it happened.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Event {
    Assign {
        fact: FactInstance,
        value: Option<Value>,
    },
    Execute {
        act: String,
        actor: String,
        at: NaiveDateTime,
        motivation: Option<String>,
    },
    Advance {
        clock: NaiveDate,
    },
}

/// Thin view over a spec that owns no state.
#[derive(Clone, Copy)]
pub struct Engine<'a> {
    spec: &'a NormSpec,
}

fn midnight(d: NaiveDate) -> NaiveDateTime {
    d.and_hms_opt(0, 0, 0).expect("midnight exists")
}

impl<'a> Engine<'a> {
    pub fn new(spec: &'a NormSpec) -> Self {
        Engine { spec }
    }

    pub fn spec(&self) -> &'a NormSpec {
        self.spec
    }

    fn check_value(&self, fact: &FactInstance, value: &Value) -> Result<(), EngineError> {
        let decl = self
            .spec
            .fact(&fact.name)
            .ok_or_else(|| EngineError::UnknownFact(fact.name.clone()))?;
        let sig_ok = decl.params.len() == fact.args.len()
            && decl
                .params
                .iter()
                .zip(&fact.args)
                .all(|(p, a)| p.ty == a.scalar_type());
        if !sig_ok {
            let params: Vec<String> = decl.params.iter().map(|p| p.ty.to_string()).collect();
            return Err(EngineError::TypeMismatch {
                fact: fact.to_string(),
                expected: format!("arguments ({})", params.join(", ")),
            });
        }
        if value.scalar_type() != decl.ty {
            return Err(EngineError::TypeMismatch {
                fact: fact.to_string(),
                expected: decl.ty.to_string(),
            });
        }
        Ok(())
    }

    /// Types an untyped JSON value against the declaration of `fact`;
    /// `null` means unknown.
    pub fn typed_value(
        &self,
        fact: &FactInstance,
        json: &serde_json::Value,
    ) -> Result<Option<Value>, EngineError> {
        if json.is_null() {
            self.spec
                .fact(&fact.name)
                .ok_or_else(|| EngineError::UnknownFact(fact.name.clone()))?;
            return Ok(None);
        }
        let decl = self
            .spec
            .fact(&fact.name)
            .ok_or_else(|| EngineError::UnknownFact(fact.name.clone()))?;
        let value = Value::from_json(decl.ty, json).ok_or_else(|| EngineError::TypeMismatch {
            fact: fact.to_string(),
            expected: decl.ty.to_string(),
        })?;
        self.check_value(fact, &value)?;
        Ok(Some(value))
    }

    /// Types a JSON object of `fact instance -> value`; `null` entries are
    /// left out (unknown).
    pub fn typed_assignments(
        &self,
        json: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<BTreeMap<FactInstance, Value>, EngineError> {
        let mut out = BTreeMap::new();
        for (key, v) in json {
            let fact: FactInstance = key
                .parse()
                .map_err(|_| EngineError::UnknownFact(key.clone()))?;
            if let Some(value) = self.typed_value(&fact, v)? {
                out.insert(fact, value);
            }
        }
        Ok(out)
    }

    pub fn init_state(
        &self,
        assignments: BTreeMap<FactInstance, Value>,
        clock: NaiveDate,
    ) -> Result<NormState, EngineError> {
        for (fact, value) in &assignments {
            self.check_value(fact, value)?;
        }
        Ok(NormState {
            assignments,
            duties: Vec::new(),
            history: Vec::new(),
            clock,
        })
    }

    pub fn eval(&self, state: &NormState, e: &Expr) -> TruthValue {
        eval_in(state, e, None)
    }

    pub fn act(&self, name: &str) -> Result<&'a ActDecl, EngineError> {
        self.spec
            .act(name)
            .ok_or_else(|| EngineError::UnknownAct(name.to_string()))
    }

    pub fn action_status(
        &self,
        state: &NormState,
        act: &str,
    ) -> Result<NormativeStatus, EngineError> {
        Ok(self.status_of(state, self.act(act)?))
    }

    pub fn status_of(&self, state: &NormState, act: &ActDecl) -> NormativeStatus {
        let status = Status::from_truth(self.eval(state, &act.condition));
        let reasons = act
            .condition
            .conjuncts()
            .into_iter()
            .map(|c| Reason {
                clause: printer::expr(c),
                value: self.eval(state, c),
                sources: act.sources.clone(),
            })
            .collect();
        NormativeStatus { status, reasons }
    }

    /// Declared acts that have not been executed yet, in declaration order.
    pub fn available_actions(&self, state: &NormState) -> Vec<(&'a ActDecl, NormativeStatus)> {
        self.spec
            .acts
            .iter()
            .filter(|a| !state.was_executed(&a.name))
            .map(|a| (a, self.status_of(state, a)))
            .collect()
    }

    pub fn execute(
        &self,
        state: &NormState,
        act_name: &str,
        actor: &str,
        at: NaiveDateTime,
        motivation: Option<&str>,
    ) -> Result<(NormState, Option<Violation>), EngineError> {
        let act = self.act(act_name)?;
        if state.was_executed(act_name) {
            return Err(EngineError::AlreadyExecuted(act_name.to_string()));
        }
        let status = self.status_of(state, act);
        let motivation = motivation.map(str::trim).filter(|m| !m.is_empty());
        if status.status.needs_motivation() && motivation.is_none() {
            return Err(EngineError::MotivationRequired(act_name.to_string()));
        }

        let mut next = state.clone();
        for eff in &act.creates {
            let value = eff.value.clone().unwrap_or(Value::Boolean(true));
            next.assignments
                .insert(FactInstance::from(&eff.target), value);
        }
        for t in &act.terminates {
            match t {
                Termination::Fact(r) => {
                    let fact = FactInstance::from(r);
                    match self.spec.fact(&r.name).map(|f| f.ty) {
                        Some(ScalarType::Boolean) => {
                            next.assignments.insert(fact, Value::Boolean(false));
                        }
                        _ => {
                            next.assignments.remove(&fact);
                        }
                    }
                }
                Termination::Duty { name, .. } => {
                    for d in next.duties.iter_mut().filter(|d| &d.duty == name) {
                        d.fulfilled = true;
                    }
                }
            }
        }
        for imposed in &act.imposes {
            // duties outside the spec (e.g. a deactivated rule) are not imposed
            let Some(decl) = self.spec.duty(&imposed.name) else {
                continue;
            };
            if next
                .duties
                .iter()
                .any(|d| d.duty == decl.name && d.is_active())
            {
                continue;
            }
            let deadline = deadline_of(&next, decl);
            next.duties.push(DutyInstance {
                duty: decl.name.clone(),
                holder: decl.holder.clone(),
                claimant: decl.claimant.clone(),
                deadline,
                fulfilled: false,
                violated_at: None,
            });
        }
        next.history.push(ExecutedAction {
            act: act.name.clone(),
            actor: actor.to_string(),
            at,
            status_at_execution: status.clone(),
            motivation: motivation.map(str::to_string),
        });

        let violation = status.status.needs_motivation().then(|| Violation {
            kind: ViolationKind::NonPermittedExecution,
            subject: act.name.clone(),
            at,
            motivation: motivation.map(str::to_string),
            sources: act.sources.clone(),
            clauses: status
                .reasons
                .iter()
                .filter(|r| r.value != TruthValue::True)
                .cloned()
                .collect(),
            explanation: explain_execution(act, &status, motivation),
        });
        Ok((next, violation))
    }

    /// Marks every active duty whose violation condition now holds. Duties
    /// already marked are left alone, so repeated calls are idempotent.
    pub fn check_duties(&self, state: &NormState, clock: NaiveDate) -> (NormState, Vec<Violation>) {
        let mut next = state.clone();
        next.clock = clock;
        let mut violations = Vec::new();
        for i in 0..next.duties.len() {
            let inst = &next.duties[i];
            if inst.fulfilled || inst.violated_at.is_some() {
                continue;
            }
            let Some(decl) = self.spec.duty(&inst.duty) else {
                continue;
            };
            if eval_in(&next, &decl.violated_when, Some(inst.deadline)) != TruthValue::True {
                continue;
            }
            let inst = &mut next.duties[i];
            inst.violated_at = Some(clock);
            violations.push(Violation {
                kind: ViolationKind::DutyViolated,
                subject: decl.name.clone(),
                at: midnight(clock),
                motivation: None,
                sources: decl.sources.clone(),
                clauses: Vec::new(),
                explanation: explain_duty(decl, inst, clock),
            });
        }
        (next, violations)
    }

    pub fn assign_fact(
        &self,
        state: &NormState,
        fact: &FactInstance,
        value: Option<Value>,
    ) -> Result<NormState, EngineError> {
        if self.spec.fact(&fact.name).is_none() {
            return Err(EngineError::UnknownFact(fact.name.clone()));
        }
        if let Some(v) = &value {
            self.check_value(fact, v)?;
        }
        let mut next = state.clone();
        match value {
            Some(v) => next.assignments.insert(fact.clone(), v),
            None => next.assignments.remove(fact),
        };
        // pending duties follow their deadline fact
        for inst in next
            .duties
            .iter_mut()
            .filter(|d| !d.fulfilled && d.violated_at.is_none())
        {
            if let Some(decl) = self.spec.duty(&inst.duty) {
                if decl.deadline.as_ref().map(FactInstance::from).as_ref() == Some(fact) {
                    inst.deadline = match next.assignments.get(fact) {
                        Some(Value::Date(d)) => Some(*d),
                        _ => None,
                    };
                }
            }
        }
        Ok(next)
    }

    pub fn apply(
        &self,
        state: &NormState,
        event: &Event,
    ) -> Result<(NormState, Vec<Violation>), EngineError> {
        match event {
            Event::Assign { fact, value } => {
                Ok((self.assign_fact(state, fact, value.clone())?, Vec::new()))
            }
            Event::Execute {
                act,
                actor,
                at,
                motivation,
            } => {
                let (next, v) = self.execute(state, act, actor, *at, motivation.as_deref())?;
                Ok((next, v.into_iter().collect()))
            }
            Event::Advance { clock } => Ok(self.check_duties(state, *clock)),
        }
    }

    /// Folds `events` over `initial`, collecting every violation raised.
    pub fn replay<'e>(
        &self,
        initial: &NormState,
        events: impl IntoIterator<Item = &'e Event>,
    ) -> Result<(NormState, Vec<Violation>), EngineError> {
        let mut state = initial.clone();
        let mut all = Vec::new();
        for e in events {
            let (next, vs) = self.apply(&state, e)?;
            state = next;
            all.extend(vs);
        }
        Ok((state, all))
    }
}

fn deadline_of(state: &NormState, decl: &DutyDecl) -> Option<NaiveDate> {
    let r = decl.deadline.as_ref()?;
    match state.assignments.get(&FactInstance::from(r)) {
        Some(Value::Date(d)) => Some(*d),
        _ => None,
    }
}

fn term(state: &NormState, e: &Expr, deadline: Option<Option<NaiveDate>>) -> Option<Value> {
    match e {
        Expr::Lit(v) => Some(v.clone()),
        Expr::Fact(r) => state.assignments.get(&FactInstance::from(r)).cloned(),
        other => eval_in(state, other, deadline)
            .to_bool()
            .map(Value::Boolean),
    }
}

/// `deadline` is `None` outside a duty; `Some(None)` for a duty without a
/// known deadline.
fn eval_in(state: &NormState, e: &Expr, deadline: Option<Option<NaiveDate>>) -> TruthValue {
    match e {
        Expr::Lit(Value::Boolean(b)) => TruthValue::from_bool(*b),
        Expr::Lit(_) => TruthValue::Unknown,
        Expr::Fact(r) => match state.assignments.get(&FactInstance::from(r)) {
            Some(Value::Boolean(b)) => TruthValue::from_bool(*b),
            _ => TruthValue::Unknown,
        },
        Expr::DeadlinePassed(_) => match deadline.flatten() {
            Some(d) => TruthValue::from_bool(d < state.clock),
            None => TruthValue::Unknown,
        },
        Expr::Cmp(op, a, b) => {
            let (Some(x), Some(y)) = (term(state, a, deadline), term(state, b, deadline)) else {
                return TruthValue::Unknown;
            };
            if x.scalar_type() != y.scalar_type() {
                return TruthValue::Unknown;
            }
            use crate::dsl::CmpOp::*;
            TruthValue::from_bool(match op {
                Eq => x == y,
                Ne => x != y,
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                Ge => x >= y,
            })
        }
        Expr::And(a, b) => eval_in(state, a, deadline).and(eval_in(state, b, deadline)),
        Expr::Or(a, b) => eval_in(state, a, deadline).or(eval_in(state, b, deadline)),
        Expr::Not(a) => eval_in(state, a, deadline).not(),
    }
}

fn source_list(sources: &[SourceRef]) -> String {
    sources
        .iter()
        .map(|s| match &s.url {
            Some(url) => format!("{} <{url}>", s.title),
            None => s.title.clone(),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn explain_execution(act: &ActDecl, status: &NormativeStatus, motivation: Option<&str>) -> String {
    let label = match status.status {
        Status::NotAllowed => "not allowed",
        _ => "indefinite (not enough information)",
    };
    let mut out = format!(
        "`{}` was executed while its legal status was {label}.",
        act.name
    );
    let failing: Vec<&str> = status.failing().map(|r| r.clause.as_str()).collect();
    if !failing.is_empty() {
        out.push_str(&format!(" Conditions not met: {}.", failing.join("; ")));
    }
    let unknown: Vec<&str> = status.unknown().map(|r| r.clause.as_str()).collect();
    if !unknown.is_empty() {
        out.push_str(&format!(
            " Conditions that could not be determined: {}.",
            unknown.join("; ")
        ));
    }
    if !act.sources.is_empty() {
        out.push_str(&format!(" Sources: {}.", source_list(&act.sources)));
    }
    if let Some(m) = motivation {
        out.push_str(&format!(" Motivation: {m}"));
    }
    out
}

fn explain_duty(decl: &DutyDecl, inst: &DutyInstance, clock: NaiveDate) -> String {
    let mut out = format!(
        "Duty `{}` of {} towards {} is violated: {} holds on {clock}.",
        decl.name,
        inst.holder,
        inst.claimant,
        printer::expr(&decl.violated_when)
    );
    if let Some(d) = inst.deadline {
        out.push_str(&format!(" The deadline was {d}."));
    }
    if !decl.sources.is_empty() {
        out.push_str(&format!(" Sources: {}.", source_list(&decl.sources)));
    }
    out
}
