use chrono::NaiveDate;

use super::*;
use crate::dsl::SpecText;
use crate::engine::{Engine, Status};

const SPEC: &str = "\
fact ok
fact limit : integer
fact amount : integer

act apply
  actor a
  recipient b
  conditioned by ok
  creates ok

act grant
  actor b
  recipient a
  conditioned by amount <= limit
  source \"Rule book\" url \"https://example.org/rules\"

act close
  actor b
  recipient a
  conditioned by false
";

fn fixture() -> (NormSpec, NormState) {
    let spec = dsl::parse_spec(&SpecText::new(SPEC, "t")).unwrap();
    let state = Engine::new(&spec)
        .init_state(
            [("limit", 10), ("amount", 12)]
                .into_iter()
                .map(|(f, v)| (f.parse().unwrap(), dsl::Value::Integer(v)))
                .collect(),
            NaiveDate::from_ymd_opt(2024, 5, 1).unwrap(),
        )
        .unwrap();
    (spec, state)
}

fn now() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 5, 1)
        .unwrap()
        .and_hms_opt(9, 0, 0)
        .unwrap()
}

fn scenario() -> Scenario {
    let (spec, state) = fixture();
    Scenario::new("s1", "test", &spec, state, now())
}

#[test]
fn seeds_one_active_group_per_declaration() {
    let s = scenario();
    assert_eq!(s.rules.len(), 3);
    assert!(s
        .rules
        .iter()
        .all(|g| g.active_version.as_deref() == Some("v1")));
    assert_eq!(s.effective_spec().acts.len(), 3);
}

#[test]
fn tree_expands_allowed_and_indefinite_only() {
    let s = scenario();
    let tree = build_tree(&s, 2, DEFAULT_MAX_DEPTH).unwrap();
    // root: apply (indefinite), grant (not allowed), close (not allowed)
    let root_children: Vec<_> = tree.nodes.iter().filter(|n| n.parent == Some(0)).collect();
    assert_eq!(root_children.len(), 3);
    assert_eq!(root_children[0].status, Some(Status::Indefinite));
    assert!(root_children[0].motivation_required);
    assert!(root_children[0].digest.is_some());
    assert!(root_children[1..]
        .iter()
        .all(|n| n.digest.is_none() && n.status == Some(Status::NotAllowed)));
    // apply's child level has grant and close, both not allowed
    let second: Vec<_> = tree.nodes.iter().filter(|n| n.depth == 2).collect();
    assert_eq!(second.len(), 2);
    assert!(!tree.truncated);
}

#[test]
fn depth_bounds() {
    let s = scenario();
    assert_eq!(
        build_tree(&s, 0, 4).unwrap_err(),
        SimulationError::DepthOutOfRange { depth: 0, max: 4 }
    );
    assert!(build_tree(&s, 5, 4).is_err());
    assert!(build_tree(&s, 4, 4).is_ok());
}

#[test]
fn deactivate_all_gives_single_node() {
    let mut s = scenario();
    s.set_all_active(false);
    assert!(s.effective_spec().acts.is_empty());
    let tree = build_tree(&s, 3, 4).unwrap();
    assert_eq!(tree.nodes.len(), 1);
    s.set_all_active(true);
    assert_eq!(
        build_tree(&s, 3, 4).unwrap().nodes.len(),
        build_tree(&scenario(), 3, 4).unwrap().nodes.len()
    );
}

#[test]
fn new_version_is_added_inactive_and_activatable() {
    let mut s = scenario();
    let before = build_tree(&s, 1, 4).unwrap();
    let text =
        "act grant\n  actor b\n  recipient a\n  conditioned by amount <= 20\n  source \"Pilot\"\n";
    let v = s.add_rule_version("grant", text, now()).unwrap();
    assert_eq!(v, "v2");
    assert_eq!(
        s.group("grant").unwrap().active_version.as_deref(),
        Some("v1")
    );
    assert_eq!(build_tree(&s, 1, 4).unwrap(), before);

    s.toggle_rule("grant", Some("v2")).unwrap();
    let after = build_tree(&s, 1, 4).unwrap();
    let grant = after
        .nodes
        .iter()
        .find(|n| n.act.as_deref() == Some("grant"))
        .unwrap();
    assert_eq!(grant.status, Some(Status::Allowed));

    let ex = explain_node(&s, &after, grant.id).unwrap();
    assert_eq!(
        ex.versions,
        vec![AppliedVersion {
            rule_id: "grant".into(),
            version_id: "v2".into()
        }]
    );
    assert_eq!(ex.sources[0].title, "Pilot");

    // re-activating is idempotent
    s.toggle_rule("grant", Some("v2")).unwrap();
    assert_eq!(build_tree(&s, 1, 4).unwrap(), after);
}

#[test]
fn invalid_versions_leave_scenario_unchanged() {
    let mut s = scenario();
    let orig = s.clone();
    assert!(matches!(
        s.add_rule_version(
            "grant",
            "act grant\n  actor b\n  recipient a\n  conditioned by nope\n",
            now()
        ),
        Err(SimulationError::InvalidRule(_))
    ));
    assert!(matches!(
        s.add_rule_version("grant", "act other\n  actor b\n  recipient a\n", now()),
        Err(SimulationError::RuleMismatch { .. })
    ));
    assert!(matches!(
        s.add_rule_version("missing", "act missing\n  actor b\n  recipient a\n", now()),
        Err(SimulationError::UnknownRule(_))
    ));
    assert!(matches!(
        s.toggle_rule("grant", Some("v9")),
        Err(SimulationError::UnknownVersion { .. })
    ));
    assert_eq!(s, orig);
}

#[test]
fn explain_root_and_unknown_node() {
    let s = scenario();
    let tree = build_tree(&s, 1, 4).unwrap();
    let root = explain_node(&s, &tree, 0).unwrap();
    assert!(root.act.is_none() && root.versions.is_empty());
    assert!(root.summary.contains("2 known facts"));
    assert_eq!(
        explain_node(&s, &tree, 99).unwrap_err(),
        SimulationError::UnknownNode(99)
    );
}

#[test]
fn explanation_includes_contributing_steps() {
    let s = scenario();
    let tree = build_tree(&s, 2, 4).unwrap();
    // a second-level node whose condition does not read `ok`: only its own version
    let n = tree
        .nodes
        .iter()
        .find(|n| n.depth == 2 && n.act.as_deref() == Some("grant"))
        .unwrap();
    let ex = explain_node(&s, &tree, n.id).unwrap();
    assert_eq!(ex.versions.len(), 1);
    assert_eq!(tree.path(n.id), ["apply", "grant"]);
}
