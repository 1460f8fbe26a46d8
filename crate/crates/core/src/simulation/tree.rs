use std::collections::VecDeque;

use serde::Serialize;

use super::{Scenario, SimulationError};
use crate::dsl::{Declaration, FactEffect, SourceRef, Termination};
use crate::engine::{Engine, NormState, Reason, Status};

pub const DEFAULT_MAX_DEPTH: usize = 4;
pub const NODE_CAP: usize = 10_000;

/// Motivation recorded when the simulator steps through a non-Allowed act.
const SIMULATED_MOTIVATION: &str = "simulated override";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub act: Option<String>,
    pub status: Option<Status>,
    pub motivation_required: bool,
    pub depth: usize,
    /// Digest of the state after the step; absent on NotAllowed leaves,
    /// which are annotations and never executed.
    pub digest: Option<String>,
    #[serde(skip)]
    pub reasons: Vec<Reason>,
    #[serde(skip)]
    pub state: Option<NormState>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionTree {
    pub depth: usize,
    pub truncated: bool,
    pub nodes: Vec<TreeNode>,
}

impl ActionTree {
    pub fn node(&self, id: usize) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    /// Act names from the root down to `id`.
    pub fn path(&self, id: usize) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(id);
        while let Some(n) = cur {
            if let Some(a) = &n.act {
                out.push(a.as_str());
            }
            cur = n.parent.and_then(|p| self.nodes.get(p));
        }
        out.reverse();
        out
    }
}

/// Breadth-first expansion of every act sequence up to `depth` steps under
/// the scenario's active rules.
pub fn build_tree(
    scenario: &Scenario,
    depth: usize,
    max_depth: usize,
) -> Result<ActionTree, SimulationError> {
    if depth == 0 || depth > max_depth {
        return Err(SimulationError::DepthOutOfRange {
            depth,
            max: max_depth,
        });
    }
    let spec = scenario.effective_spec();
    let engine = Engine::new(&spec);
    let root = TreeNode {
        id: 0,
        parent: None,
        act: None,
        status: None,
        motivation_required: false,
        depth: 0,
        digest: Some(scenario.base_state.digest()),
        reasons: Vec::new(),
        state: Some(scenario.base_state.clone()),
    };
    let mut nodes = vec![root];
    let mut queue = VecDeque::from([0usize]);
    let mut truncated = false;

    'bfs: while let Some(id) = queue.pop_front() {
        if nodes[id].depth >= depth {
            continue;
        }
        let state = nodes[id].state.clone().expect("expanded nodes carry state");
        let at = state.clock().and_hms_opt(0, 0, 0).expect("midnight exists");
        for (act, status) in engine.available_actions(&state) {
            if nodes.len() >= NODE_CAP {
                truncated = true;
                break 'bfs;
            }
            let child_id = nodes.len();
            let mut node = TreeNode {
                id: child_id,
                parent: Some(id),
                act: Some(act.name.clone()),
                status: Some(status.status),
                motivation_required: status.status.needs_motivation(),
                depth: nodes[id].depth + 1,
                digest: None,
                reasons: status.reasons.clone(),
                state: None,
            };
            if status.status != Status::NotAllowed {
                let motivation = node.motivation_required.then_some(SIMULATED_MOTIVATION);
                let (next, _) = engine
                    .execute(&state, &act.name, &act.actor, at, motivation)
                    .map_err(|e| SimulationError::Engine(e.to_string()))?;
                node.digest = Some(next.digest());
                node.state = Some(next);
                queue.push_back(child_id);
            }
            nodes.push(node);
        }
    }
    Ok(ActionTree {
        depth,
        truncated,
        nodes,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AppliedVersion {
    pub rule_id: String,
    pub version_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeExplanation {
    pub node: usize,
    pub act: Option<String>,
    pub status: Option<Status>,
    pub motivation_required: bool,
    pub clauses: Vec<Reason>,
    pub versions: Vec<AppliedVersion>,
    pub sources: Vec<SourceRef>,
    pub summary: String,
}

fn effect_targets(d: &Declaration) -> Vec<&str> {
    match d {
        Declaration::Act(a) => a
            .creates
            .iter()
            .map(|FactEffect { target, .. }| target.name.as_str())
            .chain(a.terminates.iter().filter_map(|t| match t {
                Termination::Fact(r) => Some(r.name.as_str()),
                Termination::Duty { .. } => None,
            }))
            .collect(),
        Declaration::Duty(_) => Vec::new(),
    }
}

/// The applicable rule versions of a node: the active version of its act,
/// plus the active versions of earlier steps on its path whose effects set a
/// fact the act's condition reads.
pub fn explain_node(
    scenario: &Scenario,
    tree: &ActionTree,
    id: usize,
) -> Result<NodeExplanation, SimulationError> {
    let node = tree.node(id).ok_or(SimulationError::UnknownNode(id))?;
    let Some(act_name) = &node.act else {
        let s = &scenario.base_state;
        let summary = format!(
            "Base state on {}: {} known facts, {} active duties, {} executed acts.",
            s.clock(),
            s.assignments().len(),
            s.active_duties().count(),
            s.history().len()
        );
        return Ok(NodeExplanation {
            node: id,
            act: None,
            status: None,
            motivation_required: false,
            clauses: Vec::new(),
            versions: Vec::new(),
            sources: Vec::new(),
            summary,
        });
    };

    let group = scenario
        .group(act_name)
        .ok_or_else(|| SimulationError::UnknownRule(act_name.clone()))?;
    let version = group
        .active()
        .ok_or_else(|| SimulationError::UnknownRule(act_name.clone()))?;
    let Declaration::Act(act) = &version.declaration else {
        return Err(SimulationError::UnknownRule(act_name.clone()));
    };
    let read = act.condition.fact_names();

    let mut versions = Vec::new();
    let mut sources: Vec<SourceRef> = Vec::new();
    let mut add = |rule_id: &str, v: &super::RuleVersion| {
        let applied = AppliedVersion {
            rule_id: rule_id.to_string(),
            version_id: v.version_id.clone(),
        };
        if !versions.contains(&applied) {
            versions.push(applied);
        }
        for s in v.declaration.sources() {
            if !sources.contains(s) {
                sources.push(s.clone());
            }
        }
    };
    add(act_name, version);
    for step in tree.path(id).iter().rev().skip(1).rev() {
        let Some(v) = scenario.group(step).and_then(|g| g.active()) else {
            continue;
        };
        if effect_targets(&v.declaration)
            .iter()
            .any(|t| read.contains(t))
        {
            add(step, v);
        }
    }

    let label = match node.status {
        Some(Status::Allowed) => "allowed",
        Some(Status::NotAllowed) => "not allowed",
        _ => "indefinite",
    };
    let mut summary = format!(
        "`{act_name}` is {label} under rule version {}.",
        version.version_id
    );
    let failing: Vec<&str> = node
        .reasons
        .iter()
        .filter(|r| r.value != crate::engine::TruthValue::True)
        .map(|r| r.clause.as_str())
        .collect();
    if !failing.is_empty() {
        summary.push_str(&format!(" Not satisfied: {}.", failing.join("; ")));
    }
    if node.motivation_required && node.status != Some(Status::NotAllowed) {
        summary.push_str(" Executing it requires a motivation.");
    }
    Ok(NodeExplanation {
        node: id,
        act: Some(act_name.clone()),
        status: node.status,
        motivation_required: node.motivation_required,
        clauses: node.reasons.clone(),
        versions,
        sources,
        summary,
    })
}
