//! Parameterised benchmark programs.

use crate::model::{SourceProgram, Stmt, ThreadDef, Time};
use crate::property::{IterIndex, PropExpr, Property, StmtRef};

fn at(thread: &str, label: &str) -> StmtRef {
    StmtRef {
        thread: thread.into(),
        label: label.into(),
        index: None,
    }
}

fn at_iter(thread: &str, label: &str, offset: u32) -> StmtRef {
    StmtRef {
        thread: thread.into(),
        label: label.into(),
        index: Some(IterIndex {
            var: "i".into(),
            offset,
        }),
    }
}

fn before(a: StmtRef, b: StmtRef) -> PropExpr {
    PropExpr::Before(a, b)
}

fn all(mut parts: Vec<PropExpr>) -> PropExpr {
    let first = parts.remove(0);
    parts
        .into_iter()
        .fold(first, |acc, p| PropExpr::And(Box::new(acc), Box::new(p)))
}

/// Two threads: `t1` runs `l11` then `l12`, `t2` sleeps 2 then runs `l22`.
/// `l22` must finish after `l12`. Holds when `l11_duration` is 1.
pub fn toy(l11_duration: Time) -> SourceProgram {
    SourceProgram {
        threads: vec![
            ThreadDef::new(
                "t1",
                vec![Stmt::ordinary("l11", l11_duration), Stmt::ordinary("l12", 2)],
            ),
            ThreadDef::new("t2", vec![Stmt::sleep(2), Stmt::ordinary("l22", 2)]),
        ],
        properties: vec![Property {
            name: "order".into(),
            expr: before(at("t1", "l12"), at("t2", "l22")),
        }],
    }
}

/// One producer `p` and `k` consumers; consumer `cj` sleeps `2j+1` before
/// copying from its predecessor.
pub fn pipeline(k: usize) -> SourceProgram {
    assert!(k >= 1, "pipeline needs at least one consumer");
    let mut threads = vec![ThreadDef::new(
        "p",
        vec![Stmt::ordinary("l1", 1), Stmt::ordinary("l2", 2)],
    )];
    let mut chain = vec![before(at("p", "l2"), at("c1", "l4"))];
    for j in 1..=k {
        let name = format!("c{j}");
        threads.push(ThreadDef::new(
            name.clone(),
            vec![Stmt::sleep(2 * j as Time + 1), Stmt::ordinary("l4", 2)],
        ));
        if j > 1 {
            chain.push(before(at(&format!("c{}", j - 1), "l4"), at(&name, "l4")));
        }
    }
    SourceProgram {
        threads,
        properties: vec![Property {
            name: "chain".into(),
            expr: all(chain),
        }],
    }
}

/// Looping producer and consumer: the `i`-th `l5` ends between the `i`-th
/// and `(i+1)`-st `l2`. Checked with `N = 2L + 1`.
pub fn producer_consumer() -> SourceProgram {
    SourceProgram {
        threads: vec![
            ThreadDef::new(
                "t1",
                vec![
                    Stmt::ordinary("l1", 1),
                    Stmt::Loop {
                        body: vec![Stmt::ordinary("l2", 2), Stmt::sleep(2)],
                    },
                ],
            ),
            ThreadDef::new(
                "t2",
                vec![Stmt::Loop {
                    body: vec![Stmt::sleep(2), Stmt::ordinary("l5", 2)],
                }],
            ),
        ],
        properties: vec![Property {
            name: "alternate".into(),
            expr: all(vec![
                before(at_iter("t1", "l2", 0), at_iter("t2", "l5", 0)),
                before(at_iter("t2", "l5", 0), at_iter("t1", "l2", 1)),
            ]),
        }],
    }
}

/// Round bound used for [`producer_consumer`] unrolled `l` times.
pub fn producer_consumer_rounds(l: u32) -> usize {
    2 * l as usize + 1
}

/// Producer/consumer with mismatched sleeps: `l8` must end after both `l2`
/// and `l3` of the same iteration, which fails once the loops drift.
pub fn conflict() -> SourceProgram {
    SourceProgram {
        threads: vec![
            ThreadDef::new(
                "t1",
                vec![
                    Stmt::ordinary("l1", 1),
                    Stmt::Loop {
                        body: vec![
                            Stmt::ordinary("l2", 2),
                            Stmt::ordinary("l3", 5),
                            Stmt::sleep(10),
                            Stmt::ordinary("l5", 2),
                        ],
                    },
                ],
            ),
            ThreadDef::new(
                "t2",
                vec![
                    Stmt::ordinary("l6", 1),
                    Stmt::sleep(9),
                    Stmt::Loop {
                        body: vec![Stmt::ordinary("l8", 4), Stmt::sleep(8), Stmt::ordinary("l10", 1)],
                    },
                ],
            ),
        ],
        properties: vec![Property {
            name: "copy_after_update".into(),
            expr: all(vec![
                before(at_iter("t1", "l2", 0), at_iter("t2", "l8", 0)),
                before(at_iter("t1", "l3", 0), at_iter("t2", "l8", 0)),
            ]),
        }],
    }
}
