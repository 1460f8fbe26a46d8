mod common;

use std::fs::OpenOptions;
use std::io::Write;
use std::sync::Arc;

use normcase::service::{ManualClock, ScenarioSource};

#[test]
fn restart_reproduces_every_case_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(common::start()));
    let (before, seq) = {
        let svc = common::open(dir.path(), clock.clone());
        let user = common::login(&svc, "officer");
        common::random_ops(&svc, &clock, &user, 7, 50);
        (common::case_dump(&svc), svc.sequence())
    };
    assert!(before.len() > 4);
    let svc = common::open(dir.path(), clock.clone());
    assert_eq!(common::case_dump(&svc), before);
    assert_eq!(svc.sequence(), seq);
    // seeding happens only on an empty store
    assert_eq!(svc.case_ids().len(), before.len());
}

#[test]
fn replay_without_snapshot_matches_snapshot_restore() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(common::start()));
    let before = {
        let svc = common::open(dir.path(), clock.clone());
        let user = common::login(&svc, "officer");
        common::random_ops(&svc, &clock, &user, 11, 60);
        common::case_dump(&svc)
    };
    std::fs::remove_file(dir.path().join("snapshot.json")).unwrap();
    let svc = common::open(dir.path(), clock);
    assert_eq!(common::case_dump(&svc), before);
}

#[test]
fn torn_tail_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(common::start()));
    let before = {
        let svc = common::open(dir.path(), clock.clone());
        common::case_dump(&svc)
    };
    let log = dir.path().join("events.jsonl");
    let mut f = OpenOptions::new().append(true).open(&log).unwrap();
    f.write_all(br#"{"seq":9999,"record":{"type":"case_cre"#)
        .unwrap();
    drop(f);
    let svc = common::open(dir.path(), clock.clone());
    assert_eq!(common::case_dump(&svc), before);
    let user = common::login(&svc, "after-crash");
    common::random_ops(&svc, &clock, &user, 3, 10);
    let after = common::case_dump(&svc);
    drop(svc);
    assert_eq!(common::case_dump(&common::open(dir.path(), clock)), after);
}

#[test]
fn corrupt_middle_line_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(common::start()));
    drop(common::open(dir.path(), clock.clone()));
    let log = dir.path().join("events.jsonl");
    let text = std::fs::read_to_string(&log).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[0] = "not json";
    std::fs::write(&log, lines.join("\n") + "\n").unwrap();
    std::fs::remove_file(dir.path().join("snapshot.json")).ok();
    let err = normcase::service::Service::open(common::config(dir.path()), common::bundle(), clock)
        .err()
        .unwrap();
    assert!(err.to_string().contains("line 1"), "{err}");
}

#[test]
fn scenarios_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(common::start()));
    let (id, view) = {
        let svc = common::open(dir.path(), clock.clone());
        let user = common::login(&svc, "officer");
        let s = svc
            .create_scenario(
                &user,
                ScenarioSource::Fixture("usertest2".into()),
                Some("what if".into()),
            )
            .unwrap();
        let text = "act reject-iit\n  actor officer\n  recipient applicant\n  conditioned by true\n  creates outcome = \"denied\"\n";
        svc.add_rule_version(&user, &s.id, "reject-iit", text)
            .unwrap();
        let v = svc
            .toggle_rule(&user, &s.id, "reject-iit", Some("v2"))
            .unwrap();
        (s.id, v)
    };
    let svc = common::open(dir.path(), clock);
    let user = common::login(&svc, "officer");
    assert_eq!(svc.get_scenario(&user, &id).unwrap(), view);
}
