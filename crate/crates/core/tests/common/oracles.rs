//! Independent reference checks shared by the dedicated test targets and the
//! acceptance report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDate;
use normcase::dsl::{self, ActDecl, CmpOp, Expr, NormSpec, SpecText, Value};
use normcase::engine::{Engine, FactInstance, Status, TruthValue};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};

// ---- three-valued logic -------------------------------------------------

pub const KLEENE_FACTS: [&str; 4] = ["p", "q", "r", "s"];

/// Kleene's strong tables written out case by case, with `None` as unknown.
fn k_not(a: Option<bool>) -> Option<bool> {
    match a {
        Some(true) => Some(false),
        Some(false) => Some(true),
        None => None,
    }
}

fn k_and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn k_or(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

fn reference(e: &Expr, m: &[Option<bool>; 4]) -> Option<bool> {
    match e {
        Expr::Fact(r) => m[KLEENE_FACTS.iter().position(|f| *f == r.name).unwrap()],
        Expr::Not(a) => k_not(reference(a, m)),
        Expr::And(a, b) => k_and(reference(a, m), reference(b, m)),
        Expr::Or(a, b) => k_or(reference(a, m), reference(b, m)),
        other => unreachable!("{other:?}"),
    }
}

/// Every expression over the four facts with connective nesting at most
/// `depth`.
pub fn expressions_up_to(depth: usize) -> Vec<Expr> {
    let mut all: Vec<Expr> = KLEENE_FACTS.iter().map(|f| Expr::fact(f)).collect();
    for _ in 0..depth {
        let prev = all.clone();
        let mut next = prev.clone();
        next.extend(prev.iter().cloned().map(Expr::not));
        for a in &prev {
            for b in &prev {
                next.push(Expr::and(a.clone(), b.clone()));
                next.push(Expr::or(a.clone(), b.clone()));
            }
        }
        // keep each expression once, at its lowest depth
        let mut seen = std::collections::HashSet::new();
        all = next
            .into_iter()
            .filter(|e| seen.insert(format!("{e:?}")))
            .collect();
    }
    all
}

fn all_assignments() -> Vec<[Option<bool>; 4]> {
    let vals = [Some(true), Some(false), None];
    let mut out = Vec::new();
    for a in vals {
        for b in vals {
            for c in vals {
                for d in vals {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

pub struct KleeneReport {
    pub exhaustive: usize,
    pub sampled: usize,
    pub evaluations: usize,
    pub mismatches: Vec<String>,
}

/// Compares the engine with the reference tables on every expression of
/// depth two or less and on `not` of each of them, plus `samples` random
/// binary expressions of depth three, across all 81 assignments.
pub fn kleene_check(samples: usize) -> KleeneReport {
    let spec =
        dsl::parse_spec(&SpecText::new("fact p\nfact q\nfact r\nfact s\n", "kleene")).unwrap();
    let engine = Engine::new(&spec);
    let clock = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    let states: Vec<_> = all_assignments()
        .into_iter()
        .map(|m| {
            let a: BTreeMap<FactInstance, Value> = KLEENE_FACTS
                .iter()
                .zip(m)
                .filter_map(|(f, v)| v.map(|b| (FactInstance::new(*f), Value::Boolean(b))))
                .collect();
            (m, engine.init_state(a, clock).unwrap())
        })
        .collect();

    let shallow = expressions_up_to(2);
    let mut exprs: Vec<Expr> = shallow.clone();
    exprs.extend(shallow.iter().cloned().map(Expr::not));
    let exhaustive = exprs.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6b6c65656e65);
    for _ in 0..samples {
        let a = shallow[rng.gen_range(0..shallow.len())].clone();
        let b = shallow[rng.gen_range(0..shallow.len())].clone();
        exprs.push(if rng.gen_bool(0.5) {
            Expr::and(a, b)
        } else {
            Expr::or(a, b)
        });
    }

    let mut mismatches = Vec::new();
    let mut evaluations = 0;
    for e in &exprs {
        for (m, st) in &states {
            evaluations += 1;
            let want = match reference(e, m) {
                Some(b) => TruthValue::from_bool(b),
                None => TruthValue::Unknown,
            };
            let got = engine.eval(st, e);
            if got != want && mismatches.len() < 5 {
                mismatches.push(format!(
                    "{e:?} under {m:?}: engine {got:?}, reference {want:?}"
                ));
            }
        }
    }
    KleeneReport {
        exhaustive,
        sampled: samples,
        evaluations,
        mismatches,
    }
}

// ---- monotonicity ---------------------------------------------------------

const BOOLS: [&str; 3] = ["b1", "b2", "b3"];
const INTS: [&str; 2] = ["n1", "n2"];
const INT_RANGE: std::ops::Range<i64> = -2..3;
const TEXTS: [&str; 3] = ["a", "b", "c"];

fn date(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, d).unwrap()
}

const FACT_DECLS: &str = "\
fact b1
fact b2
fact b3
fact n1 : integer
fact n2 : integer
fact label : text
fact due : date
fact flagged(item : integer) : boolean
";

/// Every value a fact may be resolved to in the monotonicity search.
fn domain(fact: &FactInstance) -> Vec<Value> {
    match fact.name.as_str() {
        "n1" | "n2" => INT_RANGE.map(Value::Integer).collect(),
        "label" => TEXTS.iter().map(|t| Value::Text(t.to_string())).collect(),
        "due" => (1..=4).map(|d| Value::Date(date(d))).collect(),
        _ => vec![Value::Boolean(true), Value::Boolean(false)],
    }
}

fn all_instances() -> Vec<FactInstance> {
    let mut v: Vec<FactInstance> = BOOLS
        .iter()
        .chain(INTS.iter())
        .map(|f| FactInstance::new(*f))
        .collect();
    v.push(FactInstance::new("label"));
    v.push(FactInstance::new("due"));
    for i in 1..=2 {
        v.push(FactInstance::with_args("flagged", vec![Value::Integer(i)]));
    }
    v
}

fn arb_leaf() -> BoxedStrategy<Expr> {
    let op = prop::sample::select(vec![
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ]);
    prop_oneof![
        prop::sample::select(BOOLS.to_vec()).prop_map(Expr::fact),
        any::<bool>().prop_map(|b| Expr::Lit(Value::Boolean(b))),
        (prop::sample::select(INTS.to_vec()), op.clone(), INT_RANGE)
            .prop_map(|(f, op, k)| Expr::cmp(op, Expr::fact(f), Expr::Lit(Value::Integer(k)))),
        (op.clone()).prop_map(|op| Expr::cmp(op, Expr::fact("n1"), Expr::fact("n2"))),
        (any::<bool>(), prop::sample::select(TEXTS.to_vec())).prop_map(|(eq, t)| {
            let op = if eq { CmpOp::Eq } else { CmpOp::Ne };
            Expr::cmp(op, Expr::fact("label"), Expr::Lit(Value::Text(t.into())))
        }),
        (op, 1u32..=4).prop_map(|(op, d)| Expr::cmp(
            op,
            Expr::fact("due"),
            Expr::Lit(Value::Date(date(d)))
        )),
        (1i64..=2).prop_map(|i| Expr::Fact(dsl::FactRef {
            name: "flagged".into(),
            args: vec![Value::Integer(i)],
            loc: Default::default()
        })),
    ]
    .boxed()
}

pub fn arb_condition() -> impl Strategy<Value = Expr> {
    arb_leaf().prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::or(a, b)),
            inner.prop_map(Expr::not),
        ]
    })
}

pub fn arb_spec() -> impl Strategy<Value = NormSpec> {
    prop::collection::vec(arb_condition(), 1..5).prop_map(|conds| {
        let mut spec = dsl::parse_spec(&SpecText::new(FACT_DECLS, "monotonicity")).unwrap();
        for (i, condition) in conds.into_iter().enumerate() {
            spec.acts.push(ActDecl {
                name: format!("act-{i}"),
                actor: "officer".into(),
                recipient: "client".into(),
                condition,
                creates: Vec::new(),
                terminates: Vec::new(),
                imposes: Vec::new(),
                sources: Vec::new(),
                loc: Default::default(),
            });
        }
        spec
    })
}

/// A partial assignment: each instance is known with probability one half.
pub fn arb_partial() -> impl Strategy<Value = BTreeMap<FactInstance, Value>> {
    let per_fact: Vec<_> = all_instances()
        .into_iter()
        .map(|f| {
            let values = domain(&f);
            prop::option::of(prop::sample::select(values)).prop_map(move |v| (f.clone(), v))
        })
        .collect();
    per_fact.prop_map(|pairs| {
        pairs
            .into_iter()
            .filter_map(|(f, v)| v.map(|v| (f, v)))
            .collect()
    })
}

/// Resolves each unknown fact, one at a time, to every value of its domain
/// and checks that no act moves between Allowed and NotAllowed, and that
/// no known status changes at all.
pub fn check_monotone(
    spec: &NormSpec,
    partial: &BTreeMap<FactInstance, Value>,
) -> Result<usize, String> {
    let engine = Engine::new(spec);
    let clock = date(2);
    let state = engine.init_state(partial.clone(), clock).unwrap();
    let before: Vec<Status> = spec
        .acts
        .iter()
        .map(|a| engine.status_of(&state, a).status)
        .collect();
    let mut checks = 0;
    for fact in all_instances()
        .into_iter()
        .filter(|f| !partial.contains_key(f))
    {
        for value in domain(&fact) {
            let resolved = engine
                .assign_fact(&state, &fact, Some(value.clone()))
                .unwrap();
            for (act, old) in spec.acts.iter().zip(&before) {
                checks += 1;
                let new = engine.status_of(&resolved, act).status;
                if *old != Status::Indefinite && new != *old {
                    return Err(format!(
                        "{} went from {old} to {new} after {fact} := {value}; condition {:?}",
                        act.name, act.condition
                    ));
                }
            }
        }
    }
    Ok(checks)
}

pub struct MonotonicityReport {
    pub cases: u32,
    pub checks: usize,
    pub counterexample: Option<String>,
}

/// Runs `cases` generated (spec, state) pairs through [`check_monotone`].
pub fn monotonicity_check(cases: u32) -> MonotonicityReport {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(
        config,
        proptest::test_runner::TestRng::deterministic_rng(
            proptest::test_runner::RngAlgorithm::ChaCha,
        ),
    );
    let checks = std::cell::Cell::new(0usize);
    let result = runner.run(&(arb_spec(), arb_partial()), |(spec, partial)| {
        let n = check_monotone(&spec, &partial).map_err(TestCaseError::fail)?;
        checks.set(checks.get() + n);
        Ok(())
    });
    MonotonicityReport {
        cases,
        checks: checks.get(),
        counterexample: result.err().map(|e| e.to_string()),
    }
}

// ---- DSL round trip -------------------------------------------------------

/// Every spec file the project ships: the bundled policy and the test
/// corpus.
pub fn spec_corpus() -> Vec<PathBuf> {
    let root = super::manifest_dir();
    let mut out = Vec::new();
    for dir in [root.join("policy"), root.join("tests/specs")] {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|e| e == "norm") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// parse, print, parse again: the two trees must be equal and printing
/// the second must reproduce the first print. Returns one line per file
/// that fails.
pub fn round_trip_failures(files: &[PathBuf]) -> Vec<String> {
    let mut out = Vec::new();
    for path in files {
        let text = SpecText::read(path).unwrap();
        let first = match dsl::parse_spec(&text) {
            Ok(s) => s,
            Err(d) => {
                out.push(format!("{}: does not parse: {}", path.display(), d[0]));
                continue;
            }
        };
        let printed = dsl::print_spec(&first);
        match dsl::parse_spec(&SpecText::new(printed.clone(), "printed")) {
            Ok(second) if second == first && dsl::print_spec(&second) == printed => {}
            Ok(_) => out.push(format!(
                "{}: printed form differs after reparse",
                path.display()
            )),
            Err(d) => out.push(format!(
                "{}: printed form does not parse: {}",
                path.display(),
                d[0]
            )),
        }
    }
    out
}
