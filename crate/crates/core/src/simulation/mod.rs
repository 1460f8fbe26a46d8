//! What-if simulation: a sandboxed state plus versioned rules, from which a
//! tree of reachable action sequences is built.
//!
//! A rule is a whole act or duty declaration. Each rule group holds the
//! versions of one declaration; at most one is active. Deactivated groups
//! drop out of the effective spec.

mod tree;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::dsl::{self, printer, Declaration, Diagnostic, NormSpec};
use crate::engine::NormState;

pub use tree::{
    build_tree, explain_node, ActionTree, AppliedVersion, NodeExplanation, TreeNode,
    DEFAULT_MAX_DEPTH, NODE_CAP,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule `{rule}` has no version `{version}`")]
    UnknownVersion { rule: String, version: String },
    #[error("rule text is invalid")]
    InvalidRule(Vec<Diagnostic>),
    #[error("declaration `{found}` does not match rule `{rule}`")]
    RuleMismatch { rule: String, found: String },
    #[error("depth {depth} is out of range 1..={max}")]
    DepthOutOfRange { depth: usize, max: usize },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("engine rejected a simulated step: {0}")]
    Engine(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleVersion {
    pub version_id: String,
    pub declaration: Declaration,
    pub created_at: NaiveDateTime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleGroup {
    pub rule_id: String,
    pub kind: &'static str,
    pub versions: Vec<RuleVersion>,
    pub active_version: Option<String>,
}

impl RuleGroup {
    pub fn version(&self, id: &str) -> Option<&RuleVersion> {
        self.versions.iter().find(|v| v.version_id == id)
    }

    pub fn active(&self) -> Option<&RuleVersion> {
        self.active_version
            .as_deref()
            .and_then(|id| self.version(id))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub label: String,
    pub base_state: NormState,
    /// Fact declarations and spec-level sources; acts and duties come from
    /// the rule groups.
    pub base: NormSpec,
    pub rules: Vec<RuleGroup>,
}

impl Scenario {
    /// Seeds one rule group per declaration of `spec`, each with its
    /// declaration as active version `v1`.
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        spec: &NormSpec,
        base_state: NormState,
        created_at: NaiveDateTime,
    ) -> Scenario {
        let group = |d: Declaration| RuleGroup {
            rule_id: d.name().to_string(),
            kind: d.kind(),
            versions: vec![RuleVersion {
                version_id: "v1".into(),
                declaration: d,
                created_at,
            }],
            active_version: Some("v1".into()),
        };
        let rules = spec
            .acts
            .iter()
            .cloned()
            .map(Declaration::Act)
            .chain(spec.duties.iter().cloned().map(Declaration::Duty))
            .map(group)
            .collect();
        let base = NormSpec {
            facts: spec.facts.clone(),
            acts: Vec::new(),
            duties: Vec::new(),
            sources: spec.sources.clone(),
        };
        Scenario {
            id: id.into(),
            label: label.into(),
            base_state,
            base,
            rules,
        }
    }

    pub fn group(&self, rule_id: &str) -> Option<&RuleGroup> {
        self.rules.iter().find(|g| g.rule_id == rule_id)
    }

    fn group_mut(&mut self, rule_id: &str) -> Result<&mut RuleGroup, SimulationError> {
        self.rules
            .iter_mut()
            .find(|g| g.rule_id == rule_id)
            .ok_or_else(|| SimulationError::UnknownRule(rule_id.to_string()))
    }

    /// Facts plus the active version of every rule group, in group order.
    pub fn effective_spec(&self) -> NormSpec {
        let mut spec = self.base.clone();
        for g in &self.rules {
            match g.active().map(|v| &v.declaration) {
                Some(Declaration::Act(a)) => spec.acts.push(a.clone()),
                Some(Declaration::Duty(d)) => spec.duties.push(d.clone()),
                None => {}
            }
        }
        spec
    }

    /// Activates `version`, or deactivates the group when `None`.
    pub fn toggle_rule(
        &mut self,
        rule_id: &str,
        version: Option<&str>,
    ) -> Result<(), SimulationError> {
        let g = self.group_mut(rule_id)?;
        if let Some(v) = version {
            if g.version(v).is_none() {
                return Err(SimulationError::UnknownVersion {
                    rule: rule_id.to_string(),
                    version: v.to_string(),
                });
            }
        }
        g.active_version = version.map(str::to_string);
        Ok(())
    }

    pub fn set_all_active(&mut self, active: bool) {
        for g in &mut self.rules {
            g.active_version = if active {
                g.versions.last().map(|v| v.version_id.clone())
            } else {
                None
            };
        }
    }

    /// Validates `text` as a new version of `rule_id` and appends it
    /// without activating it. Returns the new version id.
    pub fn add_rule_version(
        &mut self,
        rule_id: &str,
        text: &str,
        created_at: NaiveDateTime,
    ) -> Result<String, SimulationError> {
        let kind = self
            .group(rule_id)
            .ok_or_else(|| SimulationError::UnknownRule(rule_id.to_string()))?
            .kind;
        let decl = dsl::validate_rule_text(text, &self.context_spec())
            .map_err(SimulationError::InvalidRule)?;
        if decl.name() != rule_id || decl.kind() != kind {
            return Err(SimulationError::RuleMismatch {
                rule: rule_id.to_string(),
                found: format!("{} {}", decl.kind(), decl.name()),
            });
        }
        let g = self.group_mut(rule_id)?;
        let version_id = format!("v{}", g.versions.len() + 1);
        g.versions.push(RuleVersion {
            version_id: version_id.clone(),
            declaration: decl,
            created_at,
        });
        Ok(version_id)
    }

    /// Facts plus every duty name known to the scenario, active or not, so
    /// a new act version may terminate or impose any of them.
    fn context_spec(&self) -> NormSpec {
        let mut spec = self.base.clone();
        for g in &self.rules {
            if let Some(Declaration::Duty(d)) = g.versions.last().map(|v| &v.declaration) {
                spec.duties.push(d.clone());
            }
        }
        spec
    }

    /// Rebuilds a scenario from its view, re-parsing every version's text
    /// against the facts of `spec`.
    pub fn restore(view: &ScenarioView, spec: &NormSpec) -> Result<Scenario, SimulationError> {
        let mut s = Scenario {
            id: view.id.clone(),
            label: view.label.clone(),
            base_state: view.base_state.clone(),
            base: NormSpec {
                facts: spec.facts.clone(),
                acts: Vec::new(),
                duties: Vec::new(),
                sources: spec.sources.clone(),
            },
            rules: Vec::new(),
        };
        // duties first, so act versions may refer to any of them
        let mut context = s.base.clone();
        for g in &view.rules {
            for v in &g.versions {
                if g.kind == "duty" {
                    if let Ok(Declaration::Duty(d)) = dsl::validate_rule_text(&v.text, &s.base) {
                        context.duties.push(d);
                    }
                }
            }
        }
        for g in &view.rules {
            let mut versions = Vec::new();
            for v in &g.versions {
                let declaration = dsl::validate_rule_text(&v.text, &context)
                    .map_err(SimulationError::InvalidRule)?;
                if declaration.name() != g.rule_id || declaration.kind() != g.kind {
                    return Err(SimulationError::RuleMismatch {
                        rule: g.rule_id.clone(),
                        found: declaration.name().into(),
                    });
                }
                versions.push(RuleVersion {
                    version_id: v.version_id.clone(),
                    declaration,
                    created_at: v.created_at,
                });
            }
            let kind = if g.kind == "duty" { "duty" } else { "act" };
            s.rules.push(RuleGroup {
                rule_id: g.rule_id.clone(),
                kind,
                versions,
                active_version: g.active_version.clone(),
            });
        }
        Ok(s)
    }

    pub fn view(&self) -> ScenarioView {
        ScenarioView {
            id: self.id.clone(),
            label: self.label.clone(),
            base_state: self.base_state.clone(),
            rules: self
                .rules
                .iter()
                .map(|g| RuleGroupView {
                    rule_id: g.rule_id.clone(),
                    kind: g.kind.to_string(),
                    active_version: g.active_version.clone(),
                    versions: g
                        .versions
                        .iter()
                        .map(|v| RuleVersionView {
                            version_id: v.version_id.clone(),
                            text: printer::declaration(&v.declaration),
                            created_at: v.created_at,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleVersionView {
    pub version_id: String,
    pub text: String,
    pub created_at: NaiveDateTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleGroupView {
    pub rule_id: String,
    pub kind: String,
    pub active_version: Option<String>,
    pub versions: Vec<RuleVersionView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioView {
    pub id: String,
    pub label: String,
    pub base_state: NormState,
    pub rules: Vec<RuleGroupView>,
}

#[cfg(test)]
mod tests;
