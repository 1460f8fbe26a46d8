mod common;

use std::sync::Arc;

use chrono::Duration;
use normcase::dsl::SourceRef;
use normcase::engine::{Status, ViolationKind};
use normcase::service::{
    CasePatch, CaseQuery, CaseStatus, CreateCase, DecisionOutcome, ManualClock, NewClient,
    ScenarioSource, Service, ServiceError, UrgencyClock,
};
use serde_json::json;

fn service() -> (tempfile::TempDir, Arc<ManualClock>, Service) {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(common::start()));
    let svc = common::open(dir.path(), clock.clone());
    (dir, clock, svc)
}

fn goal1_input() -> CreateCase {
    let b = common::bundle();
    CreateCase {
        client: Some(NewClient {
            name: Some("Jansen".into()),
            kind: Some("civilian".into()),
        }),
        answers: b.fixture("usertest-goal1").unwrap().answers.clone(),
        ..CreateCase::default()
    }
}

fn allowed(svc: &Service, user: &normcase::service::User, id: &str) -> Vec<String> {
    svc.case_actions(user, id)
        .unwrap()
        .vervolg
        .into_iter()
        .filter(|a| a.status == Status::Allowed)
        .map(|a| a.naam)
        .collect()
}

#[test]
fn seeded_store_matches_fixtures() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let page = svc.list_cases(&user, &CaseQuery::default()).unwrap();
    let names: Vec<&str> = page.items.iter().map(|c| c.naam.as_str()).collect();
    assert_eq!(names, ["UserTest2", "UserTest3", "UserTest1", "UserTest4"]);

    let t1 = page.items.iter().find(|c| c.naam == "UserTest1").unwrap();
    let case = svc.get_case(&user, &t1.id).unwrap();
    assert_eq!(case.violations.len(), 1);
    assert_eq!(case.status, CaseStatus::Afgerond);
    assert_eq!(case.outcome, Some(DecisionOutcome::Approved));

    let t3 = page.items.iter().find(|c| c.naam == "UserTest3").unwrap();
    assert_eq!(t3.status, CaseStatus::WachtenOpBericht);
}

#[test]
fn goal1_create_case_defaults_and_single_allowed_grant() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let case = svc.create_case(&user, goal1_input()).unwrap();
    assert_eq!(case.created_on, common::start().date());
    assert_eq!(
        case.decision_term,
        common::start().date() + Duration::days(56)
    );
    assert_eq!(case.client.name, "Jansen");
    assert_eq!(case.audit.len(), 1);
    assert_eq!(allowed(&svc, &user, &case.id), ["grant-iit-single-parent"]);
    assert_eq!(case.next_action.as_deref(), Some("grant-iit-single-parent"));
    let actions = svc.case_actions(&user, &case.id).unwrap();
    assert_eq!(actions.afgerond[0].naam, "submit-application");
}

#[test]
fn unknown_registration_allows_nothing() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let mut input = goal1_input();
    input
        .answers
        .insert("registered-in-municipality".into(), serde_json::Value::Null);
    let case = svc.create_case(&user, input).unwrap();
    assert!(allowed(&svc, &user, &case.id).is_empty());
}

#[test]
fn create_case_reports_every_missing_field() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let mut input = goal1_input();
    input.client = Some(NewClient {
        name: Some("  ".into()),
        kind: Some("alien".into()),
    });
    input.answers.remove("age");
    input
        .answers
        .insert("single".into(), serde_json::Value::Null);
    let err = svc.create_case(&user, input).unwrap_err();
    assert_eq!(
        err,
        ServiceError::Validation(vec![
            "naam klant".into(),
            "soort klant".into(),
            "age".into(),
            "single".into()
        ])
    );
    assert_eq!(err.http_status(), 400);

    let mut bad = goal1_input();
    bad.answers.insert("age".into(), json!("thirty"));
    assert_eq!(
        svc.create_case(&user, bad).unwrap_err(),
        ServiceError::TypeMismatch(vec!["age".into()])
    );
}

#[test]
fn goal3_edit_swaps_grant_variant_only() {
    let (_d, clock, svc) = service();
    let user = common::login(&svc, "officer");
    let case = svc.create_case(&user, goal1_input()).unwrap();
    let before = svc.case_actions(&user, &case.id).unwrap().vervolg;
    clock.advance(Duration::hours(2));
    let patch = CasePatch {
        answers: Some(json!({"child-at-home": false}).as_object().unwrap().clone()),
        ..Default::default()
    };
    let res = svc.edit_case(&user, &case.id, patch).unwrap();
    assert_eq!(allowed(&svc, &user, &case.id), ["grant-iit-single"]);
    let changed: Vec<&str> = res
        .changed_statuses
        .iter()
        .map(|c| c.naam.as_str())
        .collect();
    assert_eq!(changed, ["grant-iit-single", "grant-iit-single-parent"]);
    let after = svc.case_actions(&user, &case.id).unwrap().vervolg;
    for (b, a) in before.iter().zip(&after) {
        if !changed.contains(&b.naam.as_str()) {
            assert_eq!(b.status, a.status, "{}", b.naam);
        }
    }
    assert!(res.case.last_modified > case.last_modified);
    assert_eq!(res.case.audit.len(), 2);
}

#[test]
fn noop_edit_still_audited() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let case = svc.create_case(&user, goal1_input()).unwrap();
    let res = svc
        .edit_case(&user, &case.id, CasePatch::default())
        .unwrap();
    assert!(res.changed_statuses.is_empty());
    assert_eq!(res.case.audit.len(), 2);
    assert!(res.case.last_modified > case.last_modified);
}

#[test]
fn executing_not_allowed_needs_motivation_and_records_violation() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let case = svc.create_case(&user, goal1_input()).unwrap();
    let err = svc
        .execute_action(&user, &case.id, "grant-iit-couple", None)
        .unwrap_err();
    assert_eq!(
        err,
        ServiceError::MotivationRequired("grant-iit-couple".into())
    );
    assert_eq!(
        svc.get_case(&user, &case.id).unwrap().audit.len(),
        1,
        "rejected execution leaves no trace"
    );

    let res = svc
        .execute_action(
            &user,
            &case.id,
            "grant-iit-couple",
            Some("special circumstances"),
        )
        .unwrap();
    let v = res.violation.unwrap();
    assert_eq!(v.kind, ViolationKind::NonPermittedExecution);
    assert_eq!(v.motivation.as_deref(), Some("special circumstances"));
    assert!(v.explanation.contains("not single"));
    assert_eq!(res.case.status, CaseStatus::Afgerond);
    assert_eq!(res.case.amount, Some(normcase::policy::Money(500)));

    let completed = svc.case_actions(&user, &case.id).unwrap().afgerond;
    let grant = completed
        .iter()
        .find(|a| a.naam == "grant-iit-couple")
        .unwrap();
    assert_eq!(grant.status, Status::NotAllowed);
    assert!(grant.violation.is_some());

    assert_eq!(
        svc.execute_action(&user, &case.id, "grant-iit-couple", Some("again"))
            .unwrap_err(),
        ServiceError::AlreadyExecuted("grant-iit-couple".into())
    );
    assert_eq!(
        svc.execute_action(&user, &case.id, "grant-iit-single-parent", None)
            .unwrap_err(),
        ServiceError::AlreadyDecided(case.id.clone())
    );
    assert_eq!(
        svc.execute_action(&user, &case.id, "fly", None)
            .unwrap_err(),
        ServiceError::UnknownAct("fly".into())
    );
}

#[test]
fn sorting_filtering_and_reverse_order() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    for key in ["naam", "termijn", "actie", "gewijzigd"] {
        let q = |order: &str| CaseQuery {
            sort: Some(key.into()),
            order: Some(order.into()),
            ..Default::default()
        };
        let asc: Vec<String> = svc
            .list_cases(&user, &q("asc"))
            .unwrap()
            .items
            .into_iter()
            .map(|c| c.id)
            .collect();
        let mut desc: Vec<String> = svc
            .list_cases(&user, &q("desc"))
            .unwrap()
            .items
            .into_iter()
            .map(|c| c.id)
            .collect();
        desc.reverse();
        assert_eq!(asc, desc, "{key}");
    }
    let bad = CaseQuery {
        sort: Some("colour".into()),
        ..Default::default()
    };
    assert!(matches!(
        svc.list_cases(&user, &bad),
        Err(ServiceError::InvalidQuery { field: "sort", .. })
    ));

    let q = CaseQuery {
        q: Some("usertest4".into()),
        ..Default::default()
    };
    let page = svc.list_cases(&user, &q).unwrap();
    assert_eq!(page.total, 1);
    assert_eq!(page.items[0].naam, "UserTest4");

    let waiting = CaseQuery {
        status: Some("wachten_op_bericht".into()),
        ..Default::default()
    };
    assert_eq!(svc.list_cases(&user, &waiting).unwrap().total, 1);

    let far = common::start().date() + Duration::days(1000);
    let none = CaseQuery {
        from: Some(far),
        ..Default::default()
    };
    assert_eq!(svc.list_cases(&user, &none).unwrap().total, 0);
}

#[test]
fn open_actions_exclude_waiting_and_decided_cases() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let open = svc.open_actions(&user).unwrap();
    let names: Vec<&str> = open.iter().map(|o| o.case.naam.as_str()).collect();
    assert_eq!(names, ["UserTest2", "UserTest4"]);
    assert_eq!(open[0].action, "grant-iit-couple");
    assert_eq!(open[1].action, "grant-iit-single");
    for o in &open {
        svc.execute_action(&user, &o.case.id, &o.action, None)
            .unwrap();
    }
    assert!(svc.open_actions(&user).unwrap().is_empty());
}

#[test]
fn goal4_nearest_deadline_first_and_clean_execution() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let q = CaseQuery {
        sort: Some("termijn".into()),
        order: Some("asc".into()),
        ..Default::default()
    };
    let first = svc.list_cases(&user, &q).unwrap().items.remove(0);
    assert_eq!(first.urgency.clock, UrgencyClock::Red);
    let act = allowed(&svc, &user, &first.id).remove(0);
    let res = svc.execute_action(&user, &first.id, &act, None).unwrap();
    assert!(res.violation.is_none());
    assert_eq!(res.case.status, CaseStatus::Afgerond);
}

#[test]
fn duty_sweep_marks_overdue_decisions_once() {
    let (_d, clock, svc) = service();
    let user = common::login(&svc, "officer");
    // UserTest2's term is 4 days out
    clock.advance(Duration::days(5));
    assert_eq!(svc.sweep_duties().unwrap(), 1);
    assert_eq!(svc.sweep_duties().unwrap(), 0);
    let q = CaseQuery {
        q: Some("UserTest2".into()),
        ..Default::default()
    };
    let row = svc.list_cases(&user, &q).unwrap().items.remove(0);
    assert!(row.urgency.overdue);
    let case = svc.get_case(&user, &row.id).unwrap();
    assert_eq!(case.violations.len(), 1);
    assert_eq!(case.violations[0].kind, ViolationKind::DutyViolated);
    assert_eq!(case.audit.last().unwrap().action, "duty.checked");
}

#[test]
fn audit_count_equals_successful_mutations() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let case = svc.create_case(&user, goal1_input()).unwrap();
    let mut ok = 1;
    let edits = [
        json!({"income": 1100}),
        json!({"wealth": null}),
        json!({"age": "x"}),
    ];
    for e in edits {
        let patch = CasePatch {
            answers: Some(e.as_object().unwrap().clone()),
            ..Default::default()
        };
        if svc.edit_case(&user, &case.id, patch).is_ok() {
            ok += 1;
        }
    }
    if svc
        .execute_action(&user, &case.id, "reject-iit", None)
        .is_ok()
    {
        ok += 1;
    }
    if svc
        .execute_action(&user, &case.id, "request-information", Some("check"))
        .is_ok()
    {
        ok += 1;
    }
    assert_eq!(svc.get_case(&user, &case.id).unwrap().audit.len(), ok);
    assert_eq!(ok, 4);
}

#[test]
fn clients_are_shared_between_cases() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let a = svc.create_case(&user, goal1_input()).unwrap();
    let mut again = goal1_input();
    again.client = None;
    again.client_id = Some(a.client.id.clone());
    let b = svc.create_case(&user, again).unwrap();
    assert_eq!(a.client.id, b.client.id);
    let patch = CasePatch {
        client: Some(normcase::service::ClientPatch {
            name: Some("Jansen-de Vries".into()),
            kind: None,
        }),
        ..Default::default()
    };
    svc.edit_case(&user, &a.id, patch).unwrap();
    assert_eq!(
        svc.get_case(&user, &b.id).unwrap().client.name,
        "Jansen-de Vries"
    );
}

#[test]
fn sources_union_spec_and_manual() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let before = svc.list_sources();
    assert!(before
        .iter()
        .any(|s| s.title.starts_with("Participatiewet")));
    let added = SourceRef {
        title: "Werkinstructie IIT".into(),
        url: Some("https://example.org/iit".into()),
        applicable_from: None,
    };
    svc.add_source(&user, added.clone()).unwrap();
    let after = svc.list_sources();
    assert_eq!(after.len(), before.len() + 1);
    assert_eq!(after.last().unwrap(), &added);
    let empty = SourceRef {
        title: " ".into(),
        url: None,
        applicable_from: None,
    };
    assert_eq!(
        svc.add_source(&user, empty).unwrap_err(),
        ServiceError::Validation(vec!["title".into()])
    );
}

#[test]
fn auth_rules() {
    let (_d, _c, svc) = service();
    svc.register("anna", "long enough").unwrap();
    assert!(matches!(
        svc.register("anna", "long enough"),
        Err(ServiceError::DuplicateName(_))
    ));
    assert!(
        matches!(svc.register("", "short"), Err(ServiceError::Validation(f)) if f == ["name", "secret"])
    );
    assert_eq!(
        svc.login("anna", "wrong secret").unwrap_err(),
        ServiceError::InvalidCredentials
    );
    assert_eq!(
        svc.login("nobody", "long enough").unwrap_err(),
        ServiceError::InvalidCredentials
    );
    let token = svc.login("anna", "long enough").unwrap();
    assert_eq!(svc.authenticate(Some(&token)).unwrap().name, "anna");
    assert_eq!(
        svc.authenticate(None).unwrap_err(),
        ServiceError::Unauthorized
    );
    assert!(svc.logout(&token));
    assert_eq!(
        svc.authenticate(Some(&token)).unwrap_err(),
        ServiceError::Unauthorized
    );
}

#[test]
fn permission_hook_is_consulted() {
    struct ReadOnly;
    impl normcase::service::PermissionHook for ReadOnly {
        fn permits(&self, _u: &normcase::service::User, p: normcase::service::Permission) -> bool {
            p == normcase::service::Permission::ReadCases
        }
    }
    let clock = Arc::new(ManualClock::new(common::start()));
    let cfg = normcase::service::ServiceConfig {
        seed_fixtures: false,
        ..Default::default()
    };
    let svc =
        Service::in_memory(cfg, common::bundle(), clock).with_permission_hook(Arc::new(ReadOnly));
    let user = common::login(&svc, "viewer");
    assert!(svc
        .list_cases(&user, &CaseQuery::default())
        .unwrap()
        .items
        .is_empty());
    assert_eq!(
        svc.create_case(&user, goal1_input()).unwrap_err(),
        ServiceError::Forbidden
    );
}

#[test]
fn scenarios_are_isolated_from_cases() {
    let (_d, _c, svc) = service();
    let user = common::login(&svc, "officer");
    let case = svc.create_case(&user, goal1_input()).unwrap();
    let s = svc
        .create_scenario(&user, ScenarioSource::Case(case.id.clone()), None)
        .unwrap();
    assert_eq!(s.base_state, case.norm_state);
    assert_eq!(
        s.rules.len(),
        svc.bundle().spec.acts.len() + svc.bundle().spec.duties.len()
    );
    for g in &s.rules {
        svc.toggle_rule(&user, &s.id, &g.rule_id, None).unwrap();
    }
    let tree = svc.scenario_tree(&user, &s.id, 3).unwrap();
    assert_eq!(tree.nodes.len(), 1);
    assert_eq!(
        svc.get_case(&user, &case.id).unwrap().norm_state,
        case.norm_state
    );
    assert!(matches!(
        svc.create_scenario(&user, ScenarioSource::Case("Z-99999".into()), None),
        Err(ServiceError::NotFound(_))
    ));
    assert!(matches!(
        svc.scenario_tree(&user, &s.id, 0),
        Err(ServiceError::DepthOutOfRange { .. })
    ));
}
