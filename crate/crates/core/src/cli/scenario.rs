//! Headless scenario files: an initial state, steps to replay through the
//! engine, and optionally the statuses expected at the end.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dsl::NormSpec;
use crate::engine::{Engine, EngineError, FactInstance, NormState, Status, Violation};
use crate::policy::PolicyParams;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub clock: NaiveDate,
    #[serde(default)]
    pub assignments: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub steps: Vec<Step>,
    /// Act name to expected status code at the end of the run.
    #[serde(default)]
    pub expect: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum Step {
    Assign {
        fact: String,
        value: serde_json::Value,
    },
    Execute {
        act: String,
        #[serde(default)]
        actor: Option<String>,
        #[serde(default)]
        motivation: Option<String>,
    },
    /// Moves the clock forward and checks deadlines.
    Advance {
        #[serde(default)]
        to: Option<NaiveDate>,
        #[serde(default)]
        days: Option<i64>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRow {
    pub step: usize,
    pub op: &'static str,
    pub detail: String,
    /// Status of the act before execution; absent for other steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    pub clock: NaiveDate,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub act: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub spec: String,
    pub compliant: bool,
    pub steps: Vec<StepRow>,
    pub violations: Vec<Violation>,
    pub final_statuses: BTreeMap<String, Status>,
    pub mismatches: Vec<Mismatch>,
    pub digest: String,
}

/// A problem with the scenario itself rather than with the case it
/// describes.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("step {step}: {source}")]
    Engine { step: usize, source: EngineError },
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
    #[error("initial state: {0}")]
    Initial(EngineError),
    #[error("expect: {0}")]
    Expect(String),
}

pub fn initial_state(
    spec: &NormSpec,
    params: &PolicyParams,
    file: &ScenarioFile,
) -> Result<NormState, ScenarioError> {
    let engine = Engine::new(spec);
    let mut assignments = params.facts.clone();
    for (key, v) in &file.assignments {
        let fact: FactInstance = key
            .parse()
            .map_err(|_| ScenarioError::Initial(EngineError::UnknownFact(key.clone())))?;
        match engine
            .typed_value(&fact, v)
            .map_err(ScenarioError::Initial)?
        {
            Some(value) => assignments.insert(fact, value),
            None => assignments.remove(&fact),
        };
    }
    engine
        .init_state(assignments, file.clock)
        .map_err(ScenarioError::Initial)
}

/// State after the last step.
pub fn final_state(
    spec: &NormSpec,
    params: &PolicyParams,
    file: &ScenarioFile,
) -> Result<NormState, ScenarioError> {
    replay(spec, params, file).map(|(state, _, _)| state)
}

/// Steps through `file`. Acts run at midnight of the current clock so the
/// outcome does not depend on the wall clock.
fn replay(
    spec: &NormSpec,
    params: &PolicyParams,
    file: &ScenarioFile,
) -> Result<(NormState, Vec<StepRow>, Vec<Violation>), ScenarioError> {
    let engine = Engine::new(spec);
    let mut state = initial_state(spec, params, file)?;
    let mut steps = Vec::new();
    let mut violations = Vec::new();
    for (i, step) in file.steps.iter().enumerate() {
        let n = i + 1;
        let eng = |source| ScenarioError::Engine { step: n, source };
        let (op, detail, status, found) = match step {
            Step::Assign { fact, value } => {
                let fi: FactInstance = fact
                    .parse()
                    .map_err(|_| eng(EngineError::UnknownFact(fact.clone())))?;
                let typed = engine.typed_value(&fi, value).map_err(eng)?;
                let detail = match &typed {
                    Some(v) => format!("{fi} = {v}"),
                    None => format!("{fi} = unknown"),
                };
                state = engine.assign_fact(&state, &fi, typed).map_err(eng)?;
                ("assign", detail, None, Vec::new())
            }
            Step::Execute {
                act,
                actor,
                motivation,
            } => {
                let decl = engine.act(act).map_err(eng)?;
                let status = engine.status_of(&state, decl).status;
                let actor = actor.as_deref().unwrap_or(&decl.actor);
                let at = state.clock().and_hms_opt(0, 0, 0).expect("midnight exists");
                let (next, v) = engine
                    .execute(&state, act, actor, at, motivation.as_deref())
                    .map_err(eng)?;
                state = next;
                (
                    "execute",
                    act.clone(),
                    Some(status),
                    v.into_iter().collect(),
                )
            }
            Step::Advance { to, days } => {
                let target = match (to, days) {
                    (Some(d), None) => *d,
                    (None, Some(k)) if *k >= 0 => state.clock() + chrono::Duration::days(*k),
                    _ => {
                        return Err(ScenarioError::Step {
                            step: n,
                            message: "advance needs exactly one of `to` or a non-negative `days`"
                                .into(),
                        })
                    }
                };
                if target < state.clock() {
                    return Err(ScenarioError::Step {
                        step: n,
                        message: format!("cannot move the clock back to {target}"),
                    });
                }
                let (next, v) = engine.check_duties(&state, target);
                state = next;
                ("advance", target.to_string(), None, v)
            }
        };
        steps.push(StepRow {
            step: n,
            op,
            detail,
            status,
            clock: state.clock(),
            violations: found.len(),
        });
        violations.extend(found);
    }
    Ok((state, steps, violations))
}

pub fn run(
    spec: &NormSpec,
    origin: &str,
    params: &PolicyParams,
    file: &ScenarioFile,
) -> Result<RunReport, ScenarioError> {
    let engine = Engine::new(spec);
    for (act, code) in &file.expect {
        engine
            .act(act)
            .map_err(|e| ScenarioError::Expect(e.to_string()))?;
        Status::from_code(code)
            .ok_or_else(|| ScenarioError::Expect(format!("unknown status `{code}` for `{act}`")))?;
    }
    let (state, steps, violations) = replay(spec, params, file)?;
    let final_statuses: BTreeMap<String, Status> = engine
        .available_actions(&state)
        .into_iter()
        .map(|(a, s)| (a.name.clone(), s.status))
        .collect();
    let mismatches: Vec<Mismatch> = file
        .expect
        .iter()
        .filter_map(|(act, code)| {
            let expected = Status::from_code(code).expect("checked above");
            let actual = final_statuses
                .get(act)
                .map(|s| s.code())
                .unwrap_or("executed");
            (actual != expected.code()).then(|| Mismatch {
                act: act.clone(),
                expected: expected.code().into(),
                actual: actual.into(),
            })
        })
        .collect();
    Ok(RunReport {
        spec: origin.to_string(),
        compliant: violations.is_empty() && mismatches.is_empty(),
        steps,
        violations,
        final_statuses,
        mismatches,
        digest: state.digest(),
    })
}

pub fn render(report: &RunReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let width = report
        .steps
        .iter()
        .map(|s| s.detail.len())
        .max()
        .unwrap_or(0)
        .max(6);
    let _ = writeln!(out, "spec: {}", report.spec);
    let _ = writeln!(
        out,
        "{:>4}  {:<8} {:<width$}  {:<16} {:<10}  violations",
        "step", "op", "detail", "status", "clock"
    );
    for s in &report.steps {
        let status = s.status.map(Status::code).unwrap_or("-");
        let _ = writeln!(
            out,
            "{:>4}  {:<8} {:<width$}  {:<16} {:<10}  {}",
            s.step, s.op, s.detail, status, s.clock, s.violations
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "final statuses:");
    let w = report
        .final_statuses
        .keys()
        .map(String::len)
        .max()
        .unwrap_or(0);
    for (act, st) in &report.final_statuses {
        let _ = writeln!(out, "  {act:<w$}  {st}");
    }
    if !report.violations.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "violations ({}):", report.violations.len());
        for v in &report.violations {
            let _ = writeln!(out, "  {} at {}", v.subject, v.at);
            for line in v.explanation.lines() {
                let _ = writeln!(out, "    {line}");
            }
            for s in &v.sources {
                let _ = writeln!(out, "    source: {}", s.title);
            }
        }
    }
    if !report.mismatches.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "expectation mismatches ({}):", report.mismatches.len());
        for m in &report.mismatches {
            let _ = writeln!(
                out,
                "  {}: expected {}, got {}",
                m.act, m.expected, m.actual
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{}",
        if report.compliant {
            "result: compliant"
        } else {
            "result: NOT compliant"
        }
    );
    out
}
