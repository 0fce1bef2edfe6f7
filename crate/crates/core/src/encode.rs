//! Constraint generation: the schedule formula `sched` and the guarded
//! precedence property.
//!
//! Round `k` uses `pc_t_k` (next ordinary statement of each thread), `Y_k`
//! and `X_k` (start and end of the round) and the ending times `E_t_i`, of
//! which there is a single copy per statement. Variables for round `N + 1`
//! always exist so every round can be generated the same way.

use thiserror::Error;

use crate::formula::{CmpOp, Formula, Term};
use crate::model::UnrolledProgram;
use crate::property::{InstExpr, Instantiation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("statement {stmt} of thread {thread} is not an ordinary statement")]
    NotOrdinary { thread: usize, stmt: usize },
}

/// Which side of the comparison the `E_prev` placeholder sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `E_prev ~ expr`
    Left,
    /// `expr ~ E_prev`
    Right,
}

fn conj(mut parts: Vec<Formula>) -> Formula {
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::And(parts)
    }
}

fn disj(mut parts: Vec<Formula>) -> Formula {
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::Or(parts)
    }
}

fn threads(up: &UnrolledProgram) -> std::ops::RangeInclusive<usize> {
    1..=up.thread_count()
}

fn terminated_at(up: &UnrolledProgram, t: usize, k: usize) -> Formula {
    Formula::eq(Term::pc(t, k), Term::int(up.thread(t).end()))
}

fn live_at(up: &UnrolledProgram, t: usize, k: usize) -> Formula {
    Formula::ne(Term::pc(t, k), Term::int(up.thread(t).end()))
}

/// Initial program counters, start time of round 1 and ending times of
/// initial sleeps.
pub fn gen_init(up: &UnrolledProgram) -> Formula {
    let mut parts = Vec::new();
    for t in threads(up) {
        let first = if up.is_ordinary(t, 1) { 1 } else { 2 };
        parts.push(Formula::eq(Term::pc(t, 1), Term::int(first)));
    }

    let sleepers: Vec<usize> = threads(up).filter(|&t| !up.is_ordinary(t, 1)).collect();
    if sleepers.len() < up.thread_count() {
        parts.push(Formula::eq(Term::y(1), Term::Const(0)));
    } else {
        // Everybody starts asleep: round 1 begins when the first thread that
        // still has work to do wakes up.
        let live: Vec<usize> = sleepers
            .iter()
            .copied()
            .filter(|&t| !up.thread(t).ordinary_positions().is_empty())
            .collect();
        let candidates = if live.is_empty() { &sleepers } else { &live };
        let choices = candidates
            .iter()
            .map(|&t| {
                let mut c: Vec<Formula> = candidates
                    .iter()
                    .filter(|&&o| o != t)
                    .map(|&o| Formula::le(Term::dur(t, 1), Term::dur(o, 1)))
                    .collect();
                c.push(Formula::eq(Term::y(1), Term::dur(t, 1)));
                conj(c)
            })
            .collect();
        parts.push(disj(choices));
        if live.is_empty() {
            parts.push(Formula::eq(Term::x(1), Term::y(1)));
        }
    }

    for &t in &sleepers {
        parts.push(Formula::eq(Term::e(t, 1), Term::dur(t, 1)));
    }
    conj(parts)
}

/// Execution of ordinary statement `i` of thread `t` in round `k`.
pub fn gen_exec(up: &UnrolledProgram, t: usize, i: usize, k: usize) -> Result<Formula, EncodeError> {
    if !up.is_ordinary(t, i) {
        return Err(EncodeError::NotOrdinary { thread: t, stmt: i });
    }
    let followed_by_sleep = i < up.len(t) && !up.is_ordinary(t, i + 1);
    let mut parts = vec![
        Formula::eq(Term::pc(t, k), Term::int(i)),
        Formula::eq(Term::x(k), Term::y(k).plus(Term::dur(t, i))),
        Formula::eq(Term::e(t, i), Term::x(k)),
    ];
    if followed_by_sleep {
        // the sleep starts as soon as the statement completes
        parts.push(Formula::eq(
            Term::e(t, i + 1),
            Term::x(k).plus(Term::dur(t, i + 1)),
        ));
        parts.push(Formula::eq(Term::pc(t, k + 1), Term::int(i + 2)));
    } else {
        parts.push(Formula::eq(Term::pc(t, k + 1), Term::int(i + 1)));
    }
    for other in threads(up).filter(|&o| o != t) {
        parts.push(Formula::eq(Term::pc(other, k + 1), Term::pc(other, k)));
    }
    Ok(Formula::And(parts))
}

/// Expands `E_prev_t^(k) ~ expr`: the ending time of the statement just
/// before thread `t`'s program counter at round `k`.
pub fn expand_eprev(
    up: &UnrolledProgram,
    t: usize,
    k: usize,
    cmp: CmpOp,
    expr: &Term,
    side: Side,
) -> Formula {
    disj(
        (1..=up.len(t))
            .map(|i| {
                let atom = match side {
                    Side::Left => Formula::cmp(cmp, Term::e(t, i), expr.clone()),
                    Side::Right => Formula::cmp(cmp, expr.clone(), Term::e(t, i)),
                };
                Formula::And(vec![Formula::eq(Term::pc(t, k), Term::int(i + 1)), atom])
            })
            .collect(),
    )
}

/// `E_prev_t^(k) <= E_prev_u^(k)`, expanded over the joint pc cases.
fn eprev_le_eprev(up: &UnrolledProgram, t: usize, u: usize, k: usize) -> Formula {
    let mut cases = Vec::with_capacity(up.len(t) * up.len(u));
    for i in 1..=up.len(t) {
        for j in 1..=up.len(u) {
            cases.push(Formula::And(vec![
                Formula::eq(Term::pc(t, k), Term::int(i + 1)),
                Formula::eq(Term::pc(u, k), Term::int(j + 1)),
                Formula::le(Term::e(t, i), Term::e(u, j)),
            ]));
        }
    }
    disj(cases)
}

/// All threads finished before round `k`; time stands still afterwards.
pub fn gen_terminated(up: &UnrolledProgram, k: usize) -> Formula {
    let mut parts = Vec::new();
    for t in threads(up) {
        parts.push(terminated_at(up, t, k));
        parts.push(Formula::eq(Term::pc(t, k + 1), Term::pc(t, k)));
    }
    parts.push(Formula::eq(Term::y(k + 1), Term::x(k)));
    parts.push(Formula::eq(Term::x(k + 1), Term::x(k)));
    Formula::And(parts)
}

/// Some live thread can run at `X_k`, the end of round `k`.
pub fn gen_some_executable(up: &UnrolledProgram, k: usize) -> Formula {
    disj(
        threads(up)
            .map(|t| {
                Formula::And(vec![
                    live_at(up, t, k + 1),
                    Formula::Or(vec![
                        Formula::eq(Term::pc(t, k + 1), Term::int(1)),
                        expand_eprev(up, t, k + 1, CmpOp::Le, &Term::x(k), Side::Left),
                    ]),
                ])
            })
            .collect(),
    )
}

/// Round `k + 1` starts when the earliest live thread wakes up.
pub fn gen_set_min_end_time(up: &UnrolledProgram, k: usize) -> Formula {
    let next = k + 1;
    disj(
        threads(up)
            .map(|t| {
                let mut parts = vec![live_at(up, t, next)];
                for other in threads(up).filter(|&o| o != t) {
                    parts.push(Formula::implies(
                        live_at(up, other, next),
                        eprev_le_eprev(up, t, other, next),
                    ));
                }
                parts.push(expand_eprev(up, t, next, CmpOp::Eq, &Term::y(next), Side::Right));
                Formula::And(parts)
            })
            .collect(),
    )
}

/// Start time of round `k + 1`.
///
/// Besides the two eager cases, a third case covers the round in which the
/// last live thread finishes: neither eager case can hold then, and time
/// simply stops at `X_k`.
pub fn gen_fix_starting_time(up: &UnrolledProgram, k: usize) -> Formula {
    let some = gen_some_executable(up, k);
    let mut done: Vec<Formula> = threads(up).map(|t| terminated_at(up, t, k + 1)).collect();
    done.push(Formula::eq(Term::y(k + 1), Term::x(k)));
    done.push(Formula::eq(Term::x(k + 1), Term::x(k)));
    Formula::Or(vec![
        Formula::And(vec![some.clone(), Formula::eq(Term::y(k + 1), Term::x(k))]),
        Formula::And(vec![Formula::not(some), gen_set_min_end_time(up, k)]),
        Formula::And(done),
    ])
}

/// Round `k`: either everything has terminated, or exactly one ready
/// ordinary statement runs and the next round's start time is fixed.
pub fn gen_round(up: &UnrolledProgram, k: usize) -> Formula {
    let mut choices = Vec::new();
    for t in threads(up) {
        for &i in up.thread(t).ordinary_positions() {
            let exec = gen_exec(up, t, i, k).expect("position taken from NS_t");
            choices.push(if i == 1 {
                exec
            } else {
                Formula::And(vec![exec, Formula::le(Term::e(t, i - 1), Term::y(k))])
            });
        }
    }
    let exec_thread = Formula::And(vec![disj(choices), gen_fix_starting_time(up, k)]);
    Formula::Or(vec![gen_terminated(up, k), exec_thread])
}

/// `init` and one formula per round, `1..=N`.
pub fn gen_sched(up: &UnrolledProgram) -> Formula {
    let mut parts = vec![gen_init(up)];
    parts.extend((1..=up.rounds()).map(|k| gen_round(up, k)));
    Formula::And(parts)
}

fn inst_formula(expr: &InstExpr) -> Formula {
    match expr {
        InstExpr::Before(a, b) => Formula::lt(Term::e(a.thread, a.position), Term::e(b.thread, b.position)),
        InstExpr::And(a, b) => Formula::And(vec![inst_formula(a), inst_formula(b)]),
        InstExpr::Or(a, b) => Formula::Or(vec![inst_formula(a), inst_formula(b)]),
        InstExpr::Not(a) => Formula::not(inst_formula(a)),
        InstExpr::Implies(a, b) => Formula::implies(inst_formula(a), inst_formula(b)),
    }
}

/// The property `λ` for a set of ground instantiations. Each one only
/// constrains schedules in which every statement it mentions ran within
/// the bound.
pub fn gen_property(up: &UnrolledProgram, instantiations: &[Instantiation]) -> Formula {
    let last = up.rounds() + 1;
    conj(
        instantiations
            .iter()
            .map(|inst| {
                let guard = conj(
                    inst.expr
                        .instances()
                        .into_iter()
                        .map(|(t, pos)| Formula::gt(Term::pc(t, last), Term::int(pos)))
                        .collect(),
                );
                Formula::implies(guard, inst_formula(&inst.expr))
            })
            .collect(),
    )
}

/// A named top-level assertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub comment: String,
    pub formula: Formula,
}

/// `sched` split into `init` and per-round assertions, plus `¬λ` when a
/// property is given.
pub fn encode(up: &UnrolledProgram, property: Option<&[Instantiation]>) -> Vec<Assertion> {
    let mut out = vec![Assertion {
        comment: "init".into(),
        formula: gen_init(up),
    }];
    for k in 1..=up.rounds() {
        out.push(Assertion {
            comment: format!("round {k}"),
            formula: gen_round(up, k),
        });
    }
    if let Some(insts) = property {
        let names: Vec<&str> = {
            let mut v: Vec<&str> = insts.iter().map(|i| i.property.as_str()).collect();
            v.dedup();
            v
        };
        out.push(Assertion {
            comment: format!("negated property: {}", names.join(", ")),
            formula: Formula::not(gen_property(up, insts)),
        });
    }
    out
}
