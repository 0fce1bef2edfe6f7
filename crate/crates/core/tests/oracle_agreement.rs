//! The encoder against the brute-force simulator, without a solver.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tickcheck::{encode, families, oracle, unroll, Formula, SourceProgram, Stmt, ThreadDef};

use common::assignment_of;

fn sched(up: &tickcheck::UnrolledProgram) -> Formula {
    Formula::and(encode(up, None).into_iter().map(|a| a.formula).collect())
}

fn small_program() -> impl Strategy<Value = SourceProgram> {
    let stmt = prop_oneof![
        3 => (1i64..=3).prop_map(|d| Stmt::Ordinary { label: None, duration: d }),
        2 => (1i64..=3).prop_map(Stmt::sleep),
    ];
    let thread = prop::collection::vec(stmt, 1..=4);
    prop::collection::vec(thread, 1..=3).prop_map(|threads| SourceProgram {
        threads: threads
            .into_iter()
            .enumerate()
            .map(|(n, body)| ThreadDef::new(format!("t{}", n + 1), body))
            .collect(),
        properties: vec![],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    // Soundness direction of the encoding: every simulated schedule is a
    // model of sched, whatever the meaningless ending times are.
    #[test]
    fn oracle_schedules_satisfy_sched(p in small_program(), n in 1usize..=6, seed in any::<u64>()) {
        let up = unroll(&p, 1, n).unwrap();
        let f = sched(&up);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in oracle::enumerate_schedules(&up) {
            prop_assert!(s.violations(&up).is_empty(), "{:?}", s.violations(&up));
            let a = assignment_of(&up, &s, || rng.gen_range(-5..40));
            prop_assert_eq!(f.eval(&a, &up), Ok(true), "schedule {:?}", s);
        }
    }

    // Perturbing one time value of a simulated schedule breaks sched.
    #[test]
    fn shifted_times_violate_sched(p in small_program(), n in 1usize..=6, pick in any::<prop::sample::Index>()) {
        let up = unroll(&p, 1, n).unwrap();
        let f = sched(&up);
        for s in oracle::enumerate_schedules(&up) {
            let executed: Vec<_> = s.rounds.iter().filter(|r| r.executed.is_some()).collect();
            if executed.is_empty() {
                continue;
            }
            let r = executed[pick.index(executed.len())];
            let mut a = assignment_of(&up, &s, || 0);
            *a.get_mut(&tickcheck::SVar::X(r.k)).unwrap() += 1;
            prop_assert_eq!(f.eval(&a, &up), Ok(false));
        }
    }

    #[test]
    fn node_count_is_deterministic(p in small_program(), n in 1usize..=6) {
        let up = unroll(&p, 1, n).unwrap();
        prop_assert_eq!(sched(&up), sched(&up));
    }
}

#[test]
fn toy_schedules() {
    let up = unroll(&families::toy(1), 1, 3).unwrap();
    let all = oracle::enumerate_schedules(&up);
    assert_eq!(all.len(), 1);
    assert_eq!(all[0].order(), vec![(1, 1), (1, 2), (2, 2)]);

    let up = unroll(&families::toy(2), 1, 3).unwrap();
    let orders: Vec<_> = oracle::enumerate_schedules(&up)
        .iter()
        .map(|s| s.order())
        .collect();
    assert_eq!(
        orders,
        vec![vec![(1, 1), (1, 2), (2, 2)], vec![(1, 1), (2, 2), (1, 2)]]
    );
}

#[test]
fn conflict_only_fails_in_second_iteration() {
    let p = families::conflict();
    let up = unroll(&p, 2, tickcheck::default_rounds(&p, 2)).unwrap();
    let insts = tickcheck::instantiate(&p.properties[0], &up).unwrap();
    let all = oracle::enumerate_schedules(&up);
    let failures: Vec<_> = all.iter().flat_map(|s| oracle::failing(s, &insts)).collect();
    assert_eq!((all.len(), failures.len()), (11, 2));
    assert!(failures.iter().all(|f| f.index_value == Some(2)));
}
