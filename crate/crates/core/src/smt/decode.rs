//! Turns solver models into schedules.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{Assignment, SVar};
use crate::model::{Time, UnrolledProgram};
use crate::schedule::{Round, Schedule};

/// A model that does not describe a valid schedule. Always an encoder bug.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("model has no value for `{0}`")]
    Missing(String),
    #[error("round {round}: {message}")]
    Round { round: usize, message: String },
    #[error("invalid schedule: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

fn value(model: &Assignment, v: SVar) -> Result<Time, DecodeError> {
    model
        .get(&v)
        .copied()
        .ok_or_else(|| DecodeError::Missing(v.to_string()))
}

/// Recovers the schedule described by a model of `sched`.
///
/// In round `k` the executed statement is the unique `(t, i)` with
/// `pc_t_k = i < pc_t_(k+1)`; rounds in which every thread has terminated
/// execute nothing. Ending times are kept only where they are determined.
pub fn decode(model: &Assignment, up: &UnrolledProgram) -> Result<Schedule, DecodeError> {
    for v in SVar::all(up) {
        value(model, v)?;
    }
    let pc = |t: usize, k: usize| model[&SVar::Pc { thread: t, round: k }] as usize;
    let mut rounds = Vec::with_capacity(up.rounds());
    let mut end_times = BTreeMap::new();
    for t in 1..=up.thread_count() {
        if !up.is_ordinary(t, 1) {
            end_times.insert((t, 1), model[&SVar::E { thread: t, stmt: 1 }]);
        }
    }
    for k in 1..=up.rounds() {
        let moved: Vec<usize> = (1..=up.thread_count())
            .filter(|&t| pc(t, k + 1) != pc(t, k))
            .collect();
        let all_done = (1..=up.thread_count()).all(|t| pc(t, k) == up.thread(t).end());
        let executed = match (all_done, moved.as_slice()) {
            (true, []) => None,
            (false, [t]) => {
                let (t, i) = (*t, pc(*t, k));
                if pc(t, k + 1) < i || !up.is_ordinary(t, i) {
                    return Err(DecodeError::Round {
                        round: k,
                        message: format!("thread {t} moves from {i} to {}", pc(t, k + 1)),
                    });
                }
                end_times.insert((t, i), model[&SVar::E { thread: t, stmt: i }]);
                if i < up.len(t) && !up.is_ordinary(t, i + 1) {
                    end_times.insert(
                        (t, i + 1),
                        model[&SVar::E {
                            thread: t,
                            stmt: i + 1,
                        }],
                    );
                }
                Some((t, i))
            }
            _ => {
                return Err(DecodeError::Round {
                    round: k,
                    message: format!("{} thread(s) advance", moved.len()),
                })
            }
        };
        rounds.push(Round {
            k,
            executed,
            start: model[&SVar::Y(k)],
            end: model[&SVar::X(k)],
        });
    }
    let schedule = Schedule { rounds, end_times };
    let problems = schedule.violations(up);
    if problems.is_empty() {
        Ok(schedule)
    } else {
        Err(DecodeError::Invalid(problems))
    }
}

/// Invariants every model of `sched` satisfies, checked directly on the
/// raw variable values. Returns one message per violation.
///
/// - program counters take values in `NS_t ∪ {n_t + 1}` and never decrease;
/// - `Y_(k+1) >= X_k` for every round, including `N`;
/// - when some live thread is awake at `X_k`, round `k + 1` starts at `X_k`;
/// - everything [`Schedule::violations`] checks on the decoded schedule.
pub fn model_violations(model: &Assignment, up: &UnrolledProgram) -> Vec<String> {
    for v in SVar::all(up) {
        if let Err(e) = value(model, v) {
            return vec![e.to_string()];
        }
    }
    let mut out = Vec::new();
    let n = up.rounds();
    let pc = |t: usize, k: usize| model[&SVar::Pc { thread: t, round: k }];
    for t in 1..=up.thread_count() {
        let thread = up.thread(t);
        for k in 1..=n + 1 {
            let p = pc(t, k);
            let valid = p == thread.end() as i64 || thread.ordinary_positions().contains(&(p as usize));
            if !valid {
                out.push(format!("pc_{t}_{k} = {p} is not a valid program counter"));
            }
            if k > 1 && p < pc(t, k - 1) {
                out.push(format!("pc_{t} decreases at round {k}"));
            }
        }
    }
    for k in 1..=n {
        let (x, y_next) = (model[&SVar::X(k)], model[&SVar::Y(k + 1)]);
        if y_next < x {
            out.push(format!("Y_{} < X_{k}", k + 1));
        }
        let awake = (1..=up.thread_count()).any(|t| {
            let p = pc(t, k + 1);
            if p == up.thread(t).end() as i64 {
                return false;
            }
            p == 1
                || model
                    .get(&SVar::E {
                        thread: t,
                        stmt: (p - 1) as usize,
                    })
                    .is_some_and(|&e| e <= x)
        });
        if awake && y_next != x {
            out.push(format!(
                "round {}: a thread is ready at X_{k} but Y_{} != X_{k}",
                k + 1,
                k + 1
            ));
        }
    }
    if out.is_empty() {
        match decode(model, up) {
            Ok(s) => out.extend(s.violations(up)),
            Err(e) => out.push(e.to_string()),
        }
    }
    out
}
