//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use normcase::engine::{Engine, NormState, Status};
use normcase::policy::{load_bundled_policy, PolicyBundle};
use normcase::service::{ManualClock, Service, ServiceConfig, User};

pub fn bundle() -> Arc<PolicyBundle> {
    Arc::new(load_bundled_policy().expect("bundled policy"))
}

pub fn start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 3, 1)
        .unwrap()
        .and_hms_opt(9, 0, 0)
        .unwrap()
}

pub fn config(dir: &Path) -> ServiceConfig {
    ServiceConfig {
        data_dir: dir.to_path_buf(),
        snapshot_every: 7,
        ..ServiceConfig::default()
    }
}

pub fn open(dir: &Path, clock: Arc<ManualClock>) -> Service {
    Service::open(config(dir), bundle(), clock).expect("service opens")
}

/// Registers `name` and returns the authenticated user.
pub fn login(svc: &Service, name: &str) -> User {
    if svc.login(name, "secret-123").is_err() {
        svc.register(name, "secret-123").unwrap();
    }
    let token = svc.login(name, "secret-123").unwrap();
    svc.authenticate(Some(&token)).unwrap()
}

/// Every act sequence reachable from `state` in at most `depth` steps, by
/// plain recursion over cloned states. Each entry is
/// `(path, status of the last act, digest after it)`; NotAllowed acts are
/// recorded without a digest and not explored.
pub fn enumerate_paths(
    engine: &Engine<'_>,
    state: &NormState,
    depth: usize,
) -> BTreeSet<(Vec<String>, Option<Status>, Option<String>)> {
    let mut out = BTreeSet::new();
    out.insert((Vec::new(), None, Some(state.digest())));
    fn go(
        engine: &Engine<'_>,
        state: &NormState,
        path: &mut Vec<String>,
        left: usize,
        out: &mut BTreeSet<(Vec<String>, Option<Status>, Option<String>)>,
    ) {
        if left == 0 {
            return;
        }
        for act in &engine.spec().acts {
            if state.history().iter().any(|h| h.act == act.name) {
                continue;
            }
            let status = engine.action_status(state, &act.name).unwrap().status;
            path.push(act.name.clone());
            if status == Status::NotAllowed {
                out.insert((path.clone(), Some(status), None));
            } else {
                let at = state.clock().and_hms_opt(0, 0, 0).unwrap();
                let motivation = (status != Status::Allowed).then_some("simulated override");
                let (next, _) = engine
                    .execute(state, &act.name, &act.actor, at, motivation)
                    .unwrap();
                out.insert((path.clone(), Some(status), Some(next.digest())));
                go(engine, &next, path, left - 1, out);
            }
            path.pop();
        }
    }
    let mut path = Vec::new();
    go(engine, state, &mut path, depth, &mut out);
    out
}

pub fn tree_paths(
    tree: &normcase::simulation::ActionTree,
) -> BTreeSet<(Vec<String>, Option<Status>, Option<String>)> {
    tree.nodes
        .iter()
        .map(|n| {
            (
                tree.path(n.id).into_iter().map(str::to_string).collect(),
                n.status,
                n.digest.clone(),
            )
        })
        .collect()
}

pub fn fixture_state(bundle: &PolicyBundle, name: &str) -> NormState {
    let f = bundle.fixture(name).unwrap();
    let engine = bundle.engine();
    engine
        .init_state(bundle.assignments_for(&f.answers).unwrap(), start().date())
        .unwrap()
}

pub fn statuses(bundle: &PolicyBundle, state: &NormState) -> BTreeMap<String, Status> {
    bundle
        .engine()
        .available_actions(state)
        .into_iter()
        .map(|(a, s)| (a.name.clone(), s.status))
        .collect()
}

/// Applies pseudo-random service operations (creates, edits, executions,
/// duty sweeps, clock moves) until `n` of them have been committed. Rejected
/// operations are mixed in too; they must leave no trace.
pub fn random_ops(svc: &Service, clock: &ManualClock, user: &User, seed: u64, n: u64) {
    use normcase::service::{CasePatch, CreateCase, NewClient};
    use rand::{Rng, SeedableRng};
    use serde_json::json;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let b = bundle();
    let acts: Vec<String> = b.spec.acts.iter().map(|a| a.name.clone()).collect();
    let start = svc.sequence();
    let mut i = 0;
    while svc.sequence() - start < n {
        i += 1;
        assert!(i < 100 * n, "random walk stopped committing");
        let ids = svc.case_ids();
        match rng.gen_range(0..10) {
            0 | 1 => {
                let mut answers = b.fixture("usertest-goal1").unwrap().answers.clone();
                answers.insert("income".into(), json!(rng.gen_range(800..2000)));
                answers.insert("single".into(), json!(rng.gen_bool(0.5)));
                let input = CreateCase {
                    client: Some(NewClient {
                        name: Some(format!("Client {i}")),
                        kind: Some("civilian".into()),
                    }),
                    answers,
                    ..CreateCase::default()
                };
                svc.create_case(user, input).unwrap();
            }
            2..=4 if !ids.is_empty() => {
                let id = &ids[rng.gen_range(0..ids.len())];
                let answers = match rng.gen_range(0..4) {
                    0 => json!({ "wealth": rng.gen_range(0..20000) }),
                    1 => json!({ "child-at-home": null }),
                    2 => json!({ "documents-complete": rng.gen_bool(0.5) }),
                    _ => json!({ "age": "unknown" }),
                };
                let patch = CasePatch {
                    answers: answers.as_object().cloned(),
                    ..Default::default()
                };
                let _ = svc.edit_case(user, id, patch);
            }
            5..=7 if !ids.is_empty() => {
                let id = &ids[rng.gen_range(0..ids.len())];
                let act = &acts[rng.gen_range(0..acts.len())];
                let motivation = rng.gen_bool(0.5).then_some("random walk");
                let _ = svc.execute_action(user, id, act, motivation);
            }
            8 => {
                svc.sweep_duties().unwrap();
            }
            _ => clock.advance(chrono::Duration::days(rng.gen_range(1..10))),
        }
    }
}

/// Every case as persisted, keyed by id.
pub fn case_dump(svc: &Service) -> BTreeMap<String, String> {
    svc.case_ids()
        .into_iter()
        .map(|id| (id.clone(), svc.case_snapshot(&id).unwrap()))
        .collect()
}

pub fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

pub fn iit_spec_path() -> std::path::PathBuf {
    manifest_dir().join("policy/iit.norm")
}

/// Runs the built binary and returns (exit code, stdout, stderr).
pub fn normcase(args: &[&std::ffi::OsStr]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_normcase"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Every scenario in the corpus as (file, expected exit code, actual exit
/// code). The expected code is the digit after `exit` in the file name.
pub fn scenario_exit_codes() -> Vec<(String, i32, i32)> {
    let dir = manifest_dir().join("tests/scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let spec = iit_spec_path();
    files
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let expected = name
                .strip_prefix("exit")
                .and_then(|s| s[..1].parse().ok())
                .expect("exitN- prefix");
            let (code, _, _) = normcase(&["run".as_ref(), spec.as_os_str(), p.as_os_str()]);
            (name, expected, code)
        })
        .collect()
}
