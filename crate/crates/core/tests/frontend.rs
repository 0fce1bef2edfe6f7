mod common;

use proptest::prelude::*;
use tickcheck::{
    families, normalize_sleeps, parse_program, IterIndex, PropExpr, Property, SourceProgram, Stmt, StmtRef,
    ThreadDef,
};

#[test]
fn corpus_matches_families() {
    assert_eq!(common::corpus("toy.tick"), families::toy(1));
    assert_eq!(common::corpus("toy_mutated.tick"), families::toy(2));
    assert_eq!(
        common::corpus("producer_consumer.tick"),
        families::producer_consumer()
    );
    assert_eq!(common::corpus("conflict.tick"), families::conflict());
    assert_eq!(common::corpus("pipeline_k5.tick"), families::pipeline(5));
}

fn flat_stmt(labels: bool) -> impl Strategy<Value = Stmt> {
    prop_oneof![
        (1i64..=9).prop_map(move |d| Stmt::Ordinary {
            label: labels.then(String::new),
            duration: d
        }),
        (1i64..=9).prop_map(Stmt::sleep),
    ]
}

fn body() -> impl Strategy<Value = Vec<Stmt>> {
    (
        prop::collection::vec(flat_stmt(true), 0..4),
        prop::option::of(prop::collection::vec(flat_stmt(true), 1..4)),
        prop::collection::vec(flat_stmt(true), 0..3),
    )
        .prop_filter_map("empty thread", |(pre, lp, post)| {
            let mut b = pre;
            if let Some(inner) = lp {
                b.push(Stmt::Loop { body: inner });
            }
            b.extend(post);
            (!b.is_empty()).then_some(b)
        })
}

/// Gives every ordinary statement a unique label `l<n>`.
fn label(body: &mut [Stmt], next: &mut usize) {
    for s in body {
        match s {
            Stmt::Ordinary { label: Some(l), .. } => {
                *next += 1;
                *l = format!("l{next}");
            }
            Stmt::Loop { body } => label(body, next),
            _ => {}
        }
    }
}

fn program() -> impl Strategy<Value = SourceProgram> {
    prop::collection::vec(body(), 1..4).prop_map(|bodies| {
        let threads: Vec<ThreadDef> = bodies
            .into_iter()
            .enumerate()
            .map(|(n, mut b)| {
                label(&mut b, &mut 0);
                ThreadDef::new(format!("t{}", n + 1), b)
            })
            .collect();
        // one property over the first two ordinary statements found
        let refs: Vec<StmtRef> = threads
            .iter()
            .flat_map(|t| {
                let in_loop = |l: &str| t.label_in_loop(l) == Some(true);
                let mut out = Vec::new();
                collect_labels(&t.body, &mut out);
                out.into_iter()
                    .map(|l| StmtRef {
                        thread: t.name.clone(),
                        index: in_loop(&l).then(|| IterIndex {
                            var: "i".into(),
                            offset: 0,
                        }),
                        label: l,
                    })
                    .collect::<Vec<_>>()
            })
            .take(2)
            .collect();
        let properties = match refs.as_slice() {
            [a, b] => vec![Property {
                name: "p".into(),
                expr: PropExpr::Not(Box::new(PropExpr::Before(a.clone(), b.clone()))),
            }],
            _ => vec![],
        };
        SourceProgram { threads, properties }
    })
}

fn collect_labels(body: &[Stmt], out: &mut Vec<String>) {
    for s in body {
        match s {
            Stmt::Ordinary { label: Some(l), .. } => out.push(l.clone()),
            Stmt::Loop { body } => collect_labels(body, out),
            _ => {}
        }
    }
}

fn sleep_total(body: &[Stmt]) -> i64 {
    body.iter()
        .map(|s| match s {
            Stmt::Sleep { duration } => *duration,
            Stmt::Loop { body } => sleep_total(body),
            _ => 0,
        })
        .sum()
}

proptest! {
    #[test]
    fn pretty_print_round_trips(p in program()) {
        let text = p.to_string();
        prop_assert_eq!(parse_program(&text).unwrap(), p);
    }

    #[test]
    fn normalize_merges_and_preserves(b in body()) {
        let once = normalize_sleeps(&b);
        prop_assert_eq!(normalize_sleeps(&once), once.clone());
        prop_assert_eq!(sleep_total(&once), sleep_total(&b));
        prop_assert!(once.windows(2).all(|w| !(w[0].is_sleep() && w[1].is_sleep())));
    }
}
