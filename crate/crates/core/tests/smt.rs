//! Solver round trips. Skipped (with a note) when `z3` is not installed.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use tickcheck::smt::{self, model_violations, serialize, solve, SolveResult};
use tickcheck::{
    encode, families, instantiate, oracle, unroll, verify, SolverConfig, Verdict, VerifyOptions,
};

use common::{corpus, solver_available};

macro_rules! require_solver {
    () => {
        if !solver_available() {
            eprintln!("z3 not found, skipping");
            return;
        }
    };
}

fn toy_script(l11: i64) -> String {
    let p = families::toy(l11);
    let up = unroll(&p, 1, 3).unwrap();
    let insts = instantiate(&p.properties[0], &up).unwrap();
    serialize(&encode(&up, Some(&insts)), &up)
}

#[test]
fn toy_matches_golden_file() {
    let golden = include_str!("golden/toy.smt2");
    assert_eq!(toy_script(1), golden);
}

#[test]
fn serialization_is_stable_and_injective() {
    let mut seen = BTreeSet::new();
    for name in [
        "toy.tick",
        "toy_mutated.tick",
        "producer_consumer.tick",
        "conflict.tick",
        "pipeline_k5.tick",
    ] {
        let p = corpus(name);
        let up = unroll(&p, 2, tickcheck::default_rounds(&p, 2)).unwrap();
        let insts = instantiate(&p.properties[0], &up).unwrap();
        let a = serialize(&encode(&up, Some(&insts)), &up);
        assert_eq!(a, serialize(&encode(&up, Some(&insts)), &up));
        assert!(seen.insert(a), "{name} collides");
    }
}

#[test]
fn toy_verdicts() {
    require_solver!();
    let cfg = SolverConfig::default();
    assert_eq!(solve(&toy_script(1), &cfg).unwrap(), SolveResult::Unsat);
    let SolveResult::Sat(model) = solve(&toy_script(2), &cfg).unwrap() else {
        panic!("mutated toy should be sat");
    };
    let up = unroll(&families::toy(2), 1, 3).unwrap();
    let s = smt::decode(&model, &up).unwrap();
    assert_eq!(s.order(), vec![(1, 1), (2, 2), (1, 2)]);
    assert_eq!(
        [s.end_time(1, 1), s.end_time(2, 2), s.end_time(1, 2)],
        [Some(2), Some(4), Some(6)]
    );
    // the interleaved oracle schedule is the same one
    let oracle_bad: Vec<_> = oracle::enumerate_schedules(&up)
        .into_iter()
        .filter(|o| o.order() == s.order())
        .collect();
    assert_eq!(oracle_bad, vec![s]);
}

#[test]
fn empty_assertion_set_is_sat() {
    require_solver!();
    let up = unroll(&families::toy(1), 1, 3).unwrap();
    let script = serialize(&[], &up);
    assert!(matches!(
        solve(&script, &SolverConfig::default()).unwrap(),
        SolveResult::Sat(_)
    ));
}

#[test]
fn malformed_script_is_an_error() {
    require_solver!();
    let r = solve("(assert (= x\n(check-sat)\n", &SolverConfig::default());
    assert!(r.is_err(), "{r:?}");
}

#[test]
fn enumerate_toy() {
    require_solver!();
    let cfg = SolverConfig::default();
    let up = unroll(&families::toy(1), 1, 3).unwrap();
    assert_eq!(
        smt::enumerate(&encode(&up, None), &up, &cfg, 10).unwrap().len(),
        1
    );
    let up = unroll(&families::toy(2), 1, 3).unwrap();
    assert_eq!(
        smt::enumerate(&encode(&up, None), &up, &cfg, 10).unwrap().len(),
        2
    );
    assert!(matches!(
        smt::enumerate(&encode(&up, None), &up, &cfg, 0),
        Err(smt::SmtError::ZeroLimit)
    ));
}

#[test]
fn conflict_found_in_second_iteration() {
    require_solver!();
    let opts = VerifyOptions {
        loop_iterations: 2,
        ..VerifyOptions::default()
    };
    let (_, reports) = verify(&corpus("conflict.tick"), &opts).unwrap();
    let Verdict::Violated { failed, .. } = &reports[0].verdict else {
        panic!("{:?}", reports[0].verdict);
    };
    assert!(failed.iter().all(|f| f.index_value == Some(2)));
}

#[test]
fn corpus_enumeration_matches_oracle() {
    require_solver!();
    let cfg = SolverConfig::default();
    for (name, l) in [
        ("toy.tick", 1),
        ("toy_mutated.tick", 1),
        ("producer_consumer.tick", 2),
        ("conflict.tick", 2),
        ("pipeline_k5.tick", 1),
    ] {
        let p = corpus(name);
        let up = unroll(&p, l, tickcheck::default_rounds(&p, l)).unwrap();
        let expected: BTreeSet<_> = oracle::enumerate_schedules(&up).into_iter().collect();
        let got: BTreeSet<_> = smt::enumerate(&encode(&up, None), &up, &cfg, 1000)
            .unwrap()
            .into_iter()
            .collect();
        assert_eq!(got, expected, "{name}");
    }
}

// Enumeration through the solver yields exactly the simulator's schedules,
// and every model satisfies the raw-variable invariants.
#[test]
fn random_enumeration_matches_oracle() {
    require_solver!();
    let cfg = SolverConfig::default();
    let mut runner = TestRunner::new(Config {
        cases: 40,
        failure_persistence: None,
        ..Config::default()
    });
    let programs = (
        prop::collection::vec(
            prop::collection::vec(
                prop_oneof![
                    3 => (1i64..=3).prop_map(|d| tickcheck::Stmt::Ordinary { label: None, duration: d }),
                    2 => (1i64..=3).prop_map(tickcheck::Stmt::sleep),
                ],
                1..=4,
            ),
            1..=3,
        ),
        1usize..=6,
    );
    runner
        .run(&programs, |(threads, n)| {
            let p = tickcheck::SourceProgram {
                threads: threads
                    .into_iter()
                    .enumerate()
                    .map(|(i, body)| tickcheck::ThreadDef::new(format!("t{}", i + 1), body))
                    .collect(),
                properties: vec![],
            };
            let up = unroll(&p, 1, n).unwrap();
            let expected: BTreeSet<_> = oracle::enumerate_schedules(&up).into_iter().collect();
            let mut script = encode(&up, None);
            let mut got = BTreeSet::new();
            loop {
                match solve(&serialize(&script, &up), &cfg).unwrap() {
                    SolveResult::Unsat => break,
                    SolveResult::Sat(model) => {
                        let problems = model_violations(&model, &up);
                        prop_assert!(problems.is_empty(), "{:?}", problems);
                        let pcs: Vec<_> = model
                            .iter()
                            .filter(|(v, _)| matches!(v, tickcheck::SVar::Pc { .. }))
                            .map(|(v, x)| (*v, *x))
                            .collect();
                        script.push(tickcheck::Assertion {
                            comment: "block".into(),
                            formula: smt::blocking_clause(&pcs),
                        });
                        prop_assert!(got.insert(smt::decode(&model, &up).unwrap()));
                        prop_assert!(got.len() <= expected.len());
                    }
                }
            }
            prop_assert_eq!(got, expected);
            Ok(())
        })
        .unwrap();
}
