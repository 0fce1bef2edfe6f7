//! Explicit-state enumeration of eager single-processor schedules.
//!
//! This is deliberately naive: a depth-first search that, at every point
//! where more than one thread could run, tries each of them. It shares
//! nothing with the constraint encoding except the unrolled program, and
//! is the ground truth the encoder is tested against.
//!
//! Execution model:
//! - one processor; an ordinary statement runs to completion once started;
//! - a sleep starts the instant the statement before it completes, and any
//!   number of threads may sleep at once;
//! - whenever some live thread is awake, one of them runs (eagerness); time
//!   only skips ahead when every live thread is asleep;
//! - a thread whose program counter is past its last ordinary statement
//!   counts as terminated, even while a final sleep is still running.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Time, UnrolledProgram};
use crate::property::Instantiation;
use crate::schedule::{Round, Schedule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadState {
    /// 1-based index of the next statement; `n_t + 1` once terminated.
    pub next: usize,
    /// Earliest time the thread may run again (end of its previous
    /// statement or sleep).
    pub ready_at: Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    pub now: Time,
    pub threads: Vec<ThreadState>,
    pub trace: Vec<Round>,
    pub end_times: BTreeMap<(usize, usize), Time>,
}

impl SimState {
    pub fn initial(up: &UnrolledProgram) -> SimState {
        let mut end_times = BTreeMap::new();
        let mut threads = Vec::with_capacity(up.thread_count());
        for t in 1..=up.thread_count() {
            let first = up.thread(t).stmt(1);
            if first.is_ordinary() {
                threads.push(ThreadState { next: 1, ready_at: 0 });
            } else {
                end_times.insert((t, 1), first.duration);
                threads.push(ThreadState {
                    next: 2,
                    ready_at: first.duration,
                });
            }
        }
        let mut state = SimState {
            now: 0,
            threads,
            trace: Vec::new(),
            end_times,
        };
        let any_ordinary_first = (1..=up.thread_count()).any(|t| up.thread(t).stmt(1).is_ordinary());
        if !any_ordinary_first {
            state.now = state
                .earliest_wakeup(up)
                .unwrap_or_else(|| state.threads.iter().map(|s| s.ready_at).min().unwrap_or(0));
        }
        state
    }

    pub fn is_terminated(&self, up: &UnrolledProgram, t: usize) -> bool {
        self.threads[t - 1].next > up.len(t)
    }

    fn earliest_wakeup(&self, up: &UnrolledProgram) -> Option<Time> {
        (1..=up.thread_count())
            .filter(|&t| !self.is_terminated(up, t))
            .map(|t| self.threads[t - 1].ready_at)
            .min()
    }

    /// Runs the next statement of thread `t`, starting now.
    fn run(&mut self, up: &UnrolledProgram, t: usize) {
        let thread = up.thread(t);
        let state = &mut self.threads[t - 1];
        let i = state.next;
        let start = self.now;
        let end = start + thread.stmt(i).duration;
        self.end_times.insert((t, i), end);
        self.trace.push(Round {
            k: self.trace.len() + 1,
            executed: Some((t, i)),
            start,
            end,
        });
        state.next = i + 1;
        state.ready_at = end;
        if i < thread.len() && !thread.stmt(i + 1).is_ordinary() {
            let wake = end + thread.stmt(i + 1).duration;
            self.end_times.insert((t, i + 1), wake);
            state.next = i + 2;
            state.ready_at = wake;
        }
        self.now = end;
    }

    fn finish(mut self, rounds: usize) -> Schedule {
        let stop = self.trace.last().map_or(self.now, |r| r.end);
        while self.trace.len() < rounds {
            self.trace.push(Round {
                k: self.trace.len() + 1,
                executed: None,
                start: stop,
                end: stop,
            });
        }
        Schedule {
            rounds: self.trace,
            end_times: self.end_times,
        }
    }
}

/// Threads that may run at `state.now`: live and awake.
pub fn step_candidates(state: &SimState, up: &UnrolledProgram) -> Vec<usize> {
    (1..=up.thread_count())
        .filter(|&t| !state.is_terminated(up, t) && state.threads[t - 1].ready_at <= state.now)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("more than {cap} schedules (interleaving bound {estimate:.3e})")]
pub struct CapExceeded {
    pub cap: usize,
    pub estimate: f64,
}

/// Every eager schedule of at most `up.rounds()` executed statements.
pub fn enumerate_schedules(up: &UnrolledProgram) -> Vec<Schedule> {
    let mut out = Vec::new();
    explore(up, SimState::initial(up), &mut out, usize::MAX);
    out
}

/// Like [`enumerate_schedules`], but refuses up front when the number of
/// interleavings could exceed `cap`, and stops if it actually does.
pub fn enumerate_schedules_capped(up: &UnrolledProgram, cap: usize) -> Result<Vec<Schedule>, CapExceeded> {
    let estimate = interleaving_bound(up);
    if estimate > cap as f64 {
        return Err(CapExceeded { cap, estimate });
    }
    let mut out = Vec::new();
    if explore(up, SimState::initial(up), &mut out, cap) {
        Ok(out)
    } else {
        Err(CapExceeded { cap, estimate })
    }
}

/// Returns false once more than `cap` schedules were found.
fn explore(up: &UnrolledProgram, mut state: SimState, out: &mut Vec<Schedule>, cap: usize) -> bool {
    if state.trace.len() == up.rounds() {
        out.push(state.finish(up.rounds()));
        return out.len() <= cap;
    }
    let Some(wake) = state.earliest_wakeup(up) else {
        out.push(state.finish(up.rounds()));
        return out.len() <= cap;
    };
    let mut candidates = step_candidates(&state, up);
    if candidates.is_empty() {
        state.now = wake;
        candidates = step_candidates(&state, up);
    }
    let last = candidates.len() - 1;
    for (n, t) in candidates.into_iter().enumerate() {
        let mut branch = if n == last {
            std::mem::replace(&mut state, SimState::empty())
        } else {
            state.clone()
        };
        branch.run(up, t);
        if !explore(up, branch, out, cap) {
            return false;
        }
    }
    true
}

impl SimState {
    fn empty() -> SimState {
        SimState {
            now: 0,
            threads: Vec::new(),
            trace: Vec::new(),
            end_times: BTreeMap::new(),
        }
    }
}

/// Upper bound on the number of execution orders: the number of ways to
/// interleave the threads' ordinary statements into a sequence of length
/// `min(N, total)`, ignoring timing.
pub fn interleaving_bound(up: &UnrolledProgram) -> f64 {
    let counts: Vec<usize> = up
        .threads()
        .iter()
        .map(|t| t.ordinary_positions().len())
        .collect();
    let total: usize = counts.iter().sum();
    let len = total.min(up.rounds());
    // sequences of length `len` with at most counts[t] entries of thread t;
    // bounded by the multinomial T^len and by the full multinomial
    let ln_fact = |n: usize| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
    let full = ln_fact(total) - counts.iter().map(|&c| ln_fact(c)).sum::<f64>();
    let prefix = len as f64 * (counts.iter().filter(|&&c| c > 0).count().max(1) as f64).ln();
    full.min(prefix).exp().max(1.0)
}

/// True when every instantiation whose statements all ran holds on the
/// schedule's ending times.
pub fn check(schedule: &Schedule, instantiations: &[Instantiation]) -> bool {
    failing(schedule, instantiations).is_empty()
}

/// Instantiations violated by `schedule`.
pub fn failing<'a>(schedule: &Schedule, instantiations: &'a [Instantiation]) -> Vec<&'a Instantiation> {
    instantiations
        .iter()
        .filter(|inst| {
            let scheduled = inst
                .expr
                .instances()
                .iter()
                .all(|&(t, i)| schedule.is_executed(t, i));
            scheduled
                && !inst.expr.eval(&|t, i| {
                    schedule
                        .end_time(t, i)
                        .expect("executed statements have an ending time")
                })
        })
        .collect()
}
