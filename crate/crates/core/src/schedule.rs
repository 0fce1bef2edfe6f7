//! Concrete schedules, as decoded from solver models or produced by the
//! explicit simulator.

use std::collections::BTreeMap;

use crate::model::{Time, UnrolledProgram};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Round {
    /// 1-based round number.
    pub k: usize,
    /// `(thread, statement)`, both 1-based; `None` once every thread has
    /// terminated.
    pub executed: Option<(usize, usize)>,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Schedule {
    pub rounds: Vec<Round>,
    /// Ending times of every statement whose ending time is determined:
    /// executed ordinary statements, initial sleeps, and sleeps right after
    /// an executed statement.
    pub end_times: BTreeMap<(usize, usize), Time>,
}

impl Schedule {
    /// Executed statements, in order.
    pub fn order(&self) -> Vec<(usize, usize)> {
        self.rounds.iter().filter_map(|r| r.executed).collect()
    }

    pub fn end_time(&self, t: usize, i: usize) -> Option<Time> {
        self.end_times.get(&(t, i)).copied()
    }

    pub fn is_executed(&self, t: usize, i: usize) -> bool {
        self.rounds.iter().any(|r| r.executed == Some((t, i)))
    }

    /// Checks the structural invariants every schedule of `up` must meet.
    /// Returns one message per violation.
    pub fn violations(&self, up: &UnrolledProgram) -> Vec<String> {
        let mut out = Vec::new();
        if self.rounds.len() != up.rounds() {
            out.push(format!("{} rounds, expected {}", self.rounds.len(), up.rounds()));
        }
        let mut intervals = Vec::new();
        let mut padding = false;
        for (idx, r) in self.rounds.iter().enumerate() {
            if r.k != idx + 1 {
                out.push(format!("round {} out of order", r.k));
            }
            match r.executed {
                Some((t, i)) => {
                    if padding {
                        out.push(format!("round {}: execution after termination", r.k));
                    }
                    if !up.is_ordinary(t, i) {
                        out.push(format!("round {}: ({t},{i}) is not ordinary", r.k));
                        continue;
                    }
                    if r.end != r.start + up.duration(t, i) {
                        out.push(format!("round {}: X != Y + D", r.k));
                    }
                    if self.end_time(t, i) != Some(r.end) {
                        out.push(format!("round {}: E_{t}_{i} != X", r.k));
                    }
                    intervals.push((r.start, r.end, r.k));
                }
                None => {
                    padding = true;
                    if r.start != r.end {
                        out.push(format!("round {}: padding round has Y != X", r.k));
                    }
                }
            }
            if let Some(next) = self.rounds.get(idx + 1) {
                if next.start < r.end {
                    out.push(format!("round {}: Y_(k+1) < X_k", r.k));
                }
                if padding && next.end != r.end {
                    out.push(format!("round {}: time moves after termination", next.k));
                }
            }
        }
        intervals.sort();
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                out.push(format!("rounds {} and {} overlap", w[0].2, w[1].2));
            }
        }
        // program order: each thread runs its ordinary statements in sequence
        let mut progress: BTreeMap<usize, usize> = BTreeMap::new();
        for (t, i) in self.order() {
            if t == 0 || t > up.thread_count() {
                out.push(format!("unknown thread {t}"));
                continue;
            }
            let done = progress.entry(t).or_insert(0);
            if up.thread(t).ordinary_positions().get(*done) != Some(&i) {
                out.push(format!("({t},{i}) executed out of program order"));
            }
            *done += 1;
        }
        out
    }
}
