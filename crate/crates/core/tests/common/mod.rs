#![allow(dead_code)]

use std::path::PathBuf;

use tickcheck::{parse_program, Assignment, SVar, Schedule, SourceProgram, Time, UnrolledProgram};

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

pub fn corpus(name: &str) -> SourceProgram {
    let text = std::fs::read_to_string(corpus_path(name)).unwrap();
    parse_program(&text).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn solver_available() -> bool {
    std::process::Command::new("z3")
        .arg("-version")
        .output()
        .is_ok_and(|o| o.status.success())
}

fn next_pc(up: &UnrolledProgram, t: usize, after: usize) -> usize {
    up.thread(t)
        .ordinary_positions()
        .iter()
        .copied()
        .find(|&p| p > after)
        .unwrap_or(up.thread(t).end())
}

/// Values of every schedule variable along a concrete schedule. Ending
/// times the schedule leaves open are taken from `filler`.
pub fn assignment_of(up: &UnrolledProgram, s: &Schedule, mut filler: impl FnMut() -> Time) -> Assignment {
    let mut a = Assignment::new();
    let mut pcs: Vec<usize> = (1..=up.thread_count()).map(|t| next_pc(up, t, 0)).collect();
    for (t, pc) in pcs.iter().enumerate() {
        a.insert(
            SVar::Pc {
                thread: t + 1,
                round: 1,
            },
            *pc as Time,
        );
    }
    for r in &s.rounds {
        if let Some((t, i)) = r.executed {
            pcs[t - 1] = next_pc(up, t, i);
        }
        for (t, pc) in pcs.iter().enumerate() {
            a.insert(
                SVar::Pc {
                    thread: t + 1,
                    round: r.k + 1,
                },
                *pc as Time,
            );
        }
        a.insert(SVar::Y(r.k), r.start);
        a.insert(SVar::X(r.k), r.end);
    }
    // round N + 1 is never run, but its start time is still determined
    let n = up.rounds();
    let last = s.rounds[n - 1].end;
    let ready: Vec<Time> = (1..=up.thread_count())
        .filter(|&t| pcs[t - 1] != up.thread(t).end())
        .map(|t| {
            if pcs[t - 1] == 1 {
                0
            } else {
                s.end_time(t, pcs[t - 1] - 1).unwrap()
            }
        })
        .collect();
    let next = match ready.iter().min() {
        Some(&r) if r > last => r,
        _ => last,
    };
    a.insert(SVar::Y(n + 1), next);
    a.insert(SVar::X(n + 1), if ready.is_empty() { last } else { filler() });
    for t in 1..=up.thread_count() {
        for i in 1..=up.len(t) {
            let e = s.end_time(t, i).unwrap_or_else(&mut filler);
            a.insert(SVar::E { thread: t, stmt: i }, e);
        }
    }
    a
}
