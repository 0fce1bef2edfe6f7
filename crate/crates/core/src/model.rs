//! Annotated programs, sleep normalization and loop unrolling.
//!
//! A [`SourceProgram`] is what the parser produces: threads made of ordinary
//! statements (which occupy the processor for their annotated duration),
//! sleeps, and at most one loop per thread. [`unroll`] flattens it into an
//! [`UnrolledProgram`], the loop-free form the encoder and the simulator
//! both work on. All statement and thread indices on the unrolled form are
//! 1-based, matching the variable naming used in the emitted encoding.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::property::Property;

/// Time values and durations, in abstract time units.
pub type Time = i64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    /// Occupies the processor for `duration` time units.
    Ordinary {
        label: Option<String>,
        duration: Time,
    },
    /// Suspends the thread without occupying the processor.
    Sleep {
        duration: Time,
    },
    Loop {
        body: Vec<Stmt>,
    },
}

impl Stmt {
    pub fn ordinary(label: impl Into<String>, duration: Time) -> Self {
        Stmt::Ordinary {
            label: Some(label.into()),
            duration,
        }
    }

    pub fn sleep(duration: Time) -> Self {
        Stmt::Sleep { duration }
    }

    pub fn is_sleep(&self) -> bool {
        matches!(self, Stmt::Sleep { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadDef {
    pub name: String,
    pub body: Vec<Stmt>,
}

impl ThreadDef {
    pub fn new(name: impl Into<String>, body: Vec<Stmt>) -> Self {
        ThreadDef {
            name: name.into(),
            body,
        }
    }

    /// Whether `label` names a statement inside this thread's loop.
    pub fn label_in_loop(&self, label: &str) -> Option<bool> {
        fn find(stmts: &[Stmt], label: &str, in_loop: bool) -> Option<bool> {
            stmts.iter().find_map(|s| match s {
                Stmt::Ordinary { label: Some(l), .. } if l == label => Some(in_loop),
                Stmt::Loop { body } => find(body, label, true),
                _ => None,
            })
        }
        find(&self.body, label, false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceProgram {
    pub threads: Vec<ThreadDef>,
    pub properties: Vec<Property>,
}

impl SourceProgram {
    pub fn thread(&self, name: &str) -> Option<&ThreadDef> {
        self.threads.iter().find(|t| t.name == name)
    }

    /// Checks the structural invariants the parser also enforces, for
    /// programs built by hand.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.threads.is_empty() {
            return Err(ModelError::NoThreads);
        }
        let mut names = HashSet::new();
        for thread in &self.threads {
            if !names.insert(thread.name.as_str()) {
                return Err(ModelError::DuplicateThread(thread.name.clone()));
            }
            if thread.body.is_empty() {
                return Err(ModelError::EmptyThread(thread.name.clone()));
            }
            let mut labels = HashSet::new();
            let mut loops = 0;
            check_stmts(&thread.name, &thread.body, false, &mut labels, &mut loops)?;
        }
        Ok(())
    }
}

fn check_stmts<'a>(
    thread: &str,
    stmts: &'a [Stmt],
    in_loop: bool,
    labels: &mut HashSet<&'a str>,
    loops: &mut usize,
) -> Result<(), ModelError> {
    for stmt in stmts {
        match stmt {
            Stmt::Ordinary { label, duration } => {
                if *duration < 1 {
                    return Err(ModelError::InvalidDuration {
                        thread: thread.to_string(),
                        duration: *duration,
                    });
                }
                if let Some(label) = label {
                    if !labels.insert(label.as_str()) {
                        return Err(ModelError::DuplicateLabel {
                            thread: thread.to_string(),
                            label: label.clone(),
                        });
                    }
                }
            }
            Stmt::Sleep { duration } => {
                if *duration < 1 {
                    return Err(ModelError::InvalidDuration {
                        thread: thread.to_string(),
                        duration: *duration,
                    });
                }
            }
            Stmt::Loop { body } => {
                if in_loop {
                    return Err(ModelError::NestedLoop(thread.to_string()));
                }
                *loops += 1;
                if *loops > 1 {
                    return Err(ModelError::MultipleLoops(thread.to_string()));
                }
                if body.is_empty() {
                    return Err(ModelError::EmptyLoop(thread.to_string()));
                }
                check_stmts(thread, body, true, labels, loops)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("no threads declared")]
    NoThreads,
    #[error("duplicate thread `{0}`")]
    DuplicateThread(String),
    #[error("thread `{0}` has no statements")]
    EmptyThread(String),
    #[error("thread `{0}` has an empty loop")]
    EmptyLoop(String),
    #[error("thread `{thread}`: duration must be a positive integer, got {duration}")]
    InvalidDuration { thread: String, duration: Time },
    #[error("thread `{thread}`: duplicate label `{label}`")]
    DuplicateLabel { thread: String, label: String },
    #[error("thread `{0}`: nested loops are not supported")]
    NestedLoop(String),
    #[error("thread `{0}`: at most one loop per thread")]
    MultipleLoops(String),
    #[error("loop iteration count must be at least 1")]
    ZeroLoopIterations,
    #[error("round bound must be at least 1")]
    ZeroRounds,
}

/// Merges adjacent sleeps into one, recursing into loop bodies.
///
/// `sleep m; sleep n` behaves exactly like `sleep (m + n)`.
pub fn normalize_sleeps(stmts: &[Stmt]) -> Vec<Stmt> {
    let mut out: Vec<Stmt> = Vec::with_capacity(stmts.len());
    for stmt in stmts {
        match stmt {
            Stmt::Sleep { duration } => {
                if let Some(Stmt::Sleep { duration: prev }) = out.last_mut() {
                    *prev += duration;
                } else {
                    out.push(stmt.clone());
                }
            }
            Stmt::Loop { body } => out.push(Stmt::Loop {
                body: normalize_sleeps(body),
            }),
            Stmt::Ordinary { .. } => out.push(stmt.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Ordinary,
    Sleep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrolledStmt {
    /// Label of the source statement; sleeps are unlabeled.
    pub label: Option<String>,
    /// 1-based loop iteration the statement came from, 0 outside loops.
    pub iteration: u32,
    pub kind: StmtKind,
    pub duration: Time,
}

impl UnrolledStmt {
    pub fn is_ordinary(&self) -> bool {
        self.kind == StmtKind::Ordinary
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrolledThread {
    pub name: String,
    stmts: Vec<UnrolledStmt>,
    ordinary: Vec<usize>,
}

impl UnrolledThread {
    fn new(name: String, stmts: Vec<UnrolledStmt>) -> Self {
        let ordinary = stmts
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_ordinary())
            .map(|(i, _)| i + 1)
            .collect();
        UnrolledThread {
            name,
            stmts,
            ordinary,
        }
    }

    pub fn stmts(&self) -> &[UnrolledStmt] {
        &self.stmts
    }

    /// Number of statements, `n_t`.
    pub fn len(&self) -> usize {
        self.stmts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stmts.is_empty()
    }

    /// 1-based positions of the ordinary statements, `NS_t`.
    pub fn ordinary_positions(&self) -> &[usize] {
        &self.ordinary
    }

    /// Statement at 1-based position `i`.
    pub fn stmt(&self, i: usize) -> &UnrolledStmt {
        &self.stmts[i - 1]
    }

    /// The program counter value of a terminated thread, `n_t + 1`.
    pub fn end(&self) -> usize {
        self.stmts.len() + 1
    }

    pub fn position_of(&self, label: &str, iteration: u32) -> Option<usize> {
        self.stmts
            .iter()
            .position(|s| s.label.as_deref() == Some(label) && s.iteration == iteration)
            .map(|p| p + 1)
    }

    /// Human-readable name of the statement at position `i`, e.g. `l2[3]`.
    pub fn describe(&self, i: usize) -> String {
        let s = self.stmt(i);
        let base = match (&s.label, s.kind) {
            (Some(l), _) => l.clone(),
            (None, StmtKind::Sleep) => format!("sleep {}", s.duration),
            (None, StmtKind::Ordinary) => format!("#{i}"),
        };
        if s.iteration > 0 && s.kind == StmtKind::Ordinary {
            format!("{base}[{}]", s.iteration)
        } else {
            base
        }
    }
}

/// The loop-free program the encoding is defined on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrolledProgram {
    threads: Vec<UnrolledThread>,
    rounds: usize,
    loop_iterations: u32,
}

impl UnrolledProgram {
    pub fn threads(&self) -> &[UnrolledThread] {
        &self.threads
    }

    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    /// Thread at 1-based index `t`.
    pub fn thread(&self, t: usize) -> &UnrolledThread {
        &self.threads[t - 1]
    }

    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.threads.iter().position(|t| t.name == name).map(|i| i + 1)
    }

    /// The schedule length bound `N`.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn loop_iterations(&self) -> u32 {
        self.loop_iterations
    }

    pub fn len(&self, t: usize) -> usize {
        self.thread(t).len()
    }

    pub fn duration(&self, t: usize, i: usize) -> Time {
        self.thread(t).stmt(i).duration
    }

    pub fn is_ordinary(&self, t: usize, i: usize) -> bool {
        i >= 1 && i <= self.len(t) && self.thread(t).stmt(i).is_ordinary()
    }

    pub fn total_statements(&self) -> usize {
        self.threads.iter().map(UnrolledThread::len).sum()
    }

    pub fn total_ordinary(&self) -> usize {
        self.threads.iter().map(|t| t.ordinary.len()).sum()
    }

    pub fn describe(&self, t: usize, i: usize) -> String {
        format!("{}.{}", self.thread(t).name, self.thread(t).describe(i))
    }
}

fn replicate(thread: &ThreadDef, loop_iterations: u32) -> Vec<UnrolledStmt> {
    let mut flat = Vec::new();
    for stmt in normalize_sleeps(&thread.body) {
        match stmt {
            Stmt::Loop { body } => {
                for iteration in 1..=loop_iterations {
                    for inner in &body {
                        flat.push(flat_stmt(inner, iteration));
                    }
                }
            }
            other => flat.push(flat_stmt(&other, 0)),
        }
    }
    merge_flat_sleeps(flat)
}

fn flat_stmt(stmt: &Stmt, iteration: u32) -> UnrolledStmt {
    match stmt {
        Stmt::Ordinary { label, duration } => UnrolledStmt {
            label: label.clone(),
            iteration,
            kind: StmtKind::Ordinary,
            duration: *duration,
        },
        Stmt::Sleep { duration } => UnrolledStmt {
            label: None,
            iteration,
            kind: StmtKind::Sleep,
            duration: *duration,
        },
        Stmt::Loop { .. } => unreachable!("nested loops are rejected by validation"),
    }
}

fn merge_flat_sleeps(stmts: Vec<UnrolledStmt>) -> Vec<UnrolledStmt> {
    let mut out: Vec<UnrolledStmt> = Vec::with_capacity(stmts.len());
    for stmt in stmts {
        match out.last_mut() {
            Some(prev) if prev.kind == StmtKind::Sleep && stmt.kind == StmtKind::Sleep => {
                prev.duration += stmt.duration;
            }
            _ => out.push(stmt),
        }
    }
    out
}

/// Truncates to the shortest prefix holding `keep` ordinary statements,
/// plus the sleep right after the last one if there is one.
fn truncate(mut stmts: Vec<UnrolledStmt>, keep: usize) -> Vec<UnrolledStmt> {
    if keep == 0 {
        return stmts;
    }
    let mut seen = 0;
    for (idx, stmt) in stmts.iter().enumerate() {
        if stmt.is_ordinary() {
            seen += 1;
            if seen == keep {
                let mut len = idx + 1;
                if stmts.get(len).is_some_and(|s| s.kind == StmtKind::Sleep) {
                    len += 1;
                }
                stmts.truncate(len);
                break;
            }
        }
    }
    stmts
}

/// Number of ordinary statements across all threads once every loop is
/// replicated `loop_iterations` times. This is the default round bound:
/// no schedule can execute more statements than that.
pub fn default_rounds(program: &SourceProgram, loop_iterations: u32) -> usize {
    program
        .threads
        .iter()
        .map(|t| {
            replicate(t, loop_iterations)
                .iter()
                .filter(|s| s.is_ordinary())
                .count()
        })
        .sum::<usize>()
        .max(1)
}

/// Replicates every loop body `loop_iterations` times, merges adjacent
/// sleeps and truncates each thread to at most `rounds` ordinary statements.
pub fn unroll(
    program: &SourceProgram,
    loop_iterations: u32,
    rounds: usize,
) -> Result<UnrolledProgram, ModelError> {
    if loop_iterations == 0 {
        return Err(ModelError::ZeroLoopIterations);
    }
    if rounds == 0 {
        return Err(ModelError::ZeroRounds);
    }
    program.validate()?;
    let threads = program
        .threads
        .iter()
        .map(|thread| {
            let flat = replicate(thread, loop_iterations);
            let ordinary = flat.iter().filter(|s| s.is_ordinary()).count();
            UnrolledThread::new(thread.name.clone(), truncate(flat, ordinary.min(rounds)))
        })
        .collect();
    Ok(UnrolledProgram {
        threads,
        rounds,
        loop_iterations,
    })
}

impl fmt::Display for UnrolledProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# N = {}, loops unrolled {} time(s)",
            self.rounds, self.loop_iterations
        )?;
        for thread in &self.threads {
            writeln!(f, "thread {} {{", thread.name)?;
            for (i, s) in thread.stmts.iter().enumerate() {
                match s.kind {
                    StmtKind::Ordinary => writeln!(
                        f,
                        "  {:>3}: {} dur {};",
                        i + 1,
                        thread.describe(i + 1),
                        s.duration
                    )?,
                    StmtKind::Sleep => writeln!(f, "  {:>3}: sleep {};", i + 1, s.duration)?,
                }
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn program(threads: Vec<ThreadDef>) -> SourceProgram {
        SourceProgram {
            threads,
            properties: vec![],
        }
    }

    #[test]
    fn merges_leading_sleeps() {
        let out = normalize_sleeps(&[Stmt::sleep(2), Stmt::sleep(3), Stmt::ordinary("a", 1)]);
        assert_eq!(out, vec![Stmt::sleep(5), Stmt::ordinary("a", 1)]);
    }

    #[test]
    fn no_sleeps_is_identity() {
        let body = vec![Stmt::ordinary("a", 1)];
        assert_eq!(normalize_sleeps(&body), body);
    }

    #[test]
    fn merges_three_sleeps() {
        let out = normalize_sleeps(&[Stmt::sleep(1), Stmt::sleep(1), Stmt::sleep(1)]);
        assert_eq!(out, vec![Stmt::sleep(3)]);
    }

    #[test]
    fn normalizes_inside_loops() {
        let out = normalize_sleeps(&[Stmt::Loop {
            body: vec![Stmt::ordinary("a", 1), Stmt::sleep(1), Stmt::sleep(4)],
        }]);
        assert_eq!(
            out,
            vec![Stmt::Loop {
                body: vec![Stmt::ordinary("a", 1), Stmt::sleep(5)]
            }]
        );
    }

    #[test]
    fn unrolls_producer() {
        let p = program(vec![ThreadDef::new(
            "t1",
            vec![
                Stmt::ordinary("l1", 1),
                Stmt::Loop {
                    body: vec![Stmt::ordinary("l2", 2), Stmt::sleep(2)],
                },
            ],
        )]);
        let up = unroll(&p, 2, 3).unwrap();
        let t = up.thread(1);
        let got: Vec<_> = t
            .stmts()
            .iter()
            .map(|s| (s.label.clone(), s.iteration, s.kind, s.duration))
            .collect();
        assert_eq!(
            got,
            vec![
                (Some("l1".into()), 0, StmtKind::Ordinary, 1),
                (Some("l2".into()), 1, StmtKind::Ordinary, 2),
                (None, 1, StmtKind::Sleep, 2),
                (Some("l2".into()), 2, StmtKind::Ordinary, 2),
                (None, 2, StmtKind::Sleep, 2),
            ]
        );
        assert_eq!(t.ordinary_positions(), &[1, 2, 4]);
        assert_eq!(t.end(), 6);
    }

    #[test]
    fn sleep_only_loop_collapses() {
        let p = program(vec![ThreadDef::new(
            "t",
            vec![Stmt::Loop {
                body: vec![Stmt::sleep(1), Stmt::sleep(2)],
            }],
        )]);
        let up = unroll(&p, 2, 1).unwrap();
        assert_eq!(up.thread(1).stmts().len(), 1);
        assert_eq!(up.duration(1, 1), 6);
        assert!(up.thread(1).ordinary_positions().is_empty());
    }

    #[test]
    fn loop_sleep_merges_with_next_replica() {
        let p = program(vec![ThreadDef::new(
            "t",
            vec![Stmt::Loop {
                body: vec![Stmt::sleep(1), Stmt::ordinary("a", 1), Stmt::sleep(2)],
            }],
        )]);
        let up = unroll(&p, 2, 10).unwrap();
        let durs: Vec<_> = up.thread(1).stmts().iter().map(|s| s.duration).collect();
        assert_eq!(durs, vec![1, 1, 3, 1, 2]);
    }

    #[test]
    fn truncation_keeps_trailing_sleep() {
        let p = program(vec![ThreadDef::new(
            "t",
            vec![
                Stmt::sleep(1),
                Stmt::ordinary("a", 1),
                Stmt::sleep(2),
                Stmt::ordinary("b", 1),
                Stmt::ordinary("c", 1),
            ],
        )]);
        let up = unroll(&p, 1, 1).unwrap();
        assert_eq!(up.thread(1).len(), 3);
        assert_eq!(up.thread(1).ordinary_positions(), &[2]);
        let up = unroll(&p, 1, 2).unwrap();
        assert_eq!(up.thread(1).len(), 4);
    }

    #[test]
    fn loop_free_program_unchanged() {
        let body = vec![Stmt::ordinary("a", 1), Stmt::sleep(2), Stmt::ordinary("b", 3)];
        let p = program(vec![ThreadDef::new("t", body)]);
        let a = unroll(&p, 1, 5).unwrap();
        let b = unroll(&p, 4, 5).unwrap();
        assert_eq!(a.threads(), b.threads());
        assert_eq!(a.thread(1).len(), 3);
    }

    #[test]
    fn rejects_zero_bounds() {
        let p = program(vec![ThreadDef::new("t", vec![Stmt::ordinary("a", 1)])]);
        assert_eq!(unroll(&p, 0, 1), Err(ModelError::ZeroLoopIterations));
        assert_eq!(unroll(&p, 1, 0), Err(ModelError::ZeroRounds));
    }

    #[test]
    fn rejects_nested_loop() {
        let p = program(vec![ThreadDef::new(
            "t",
            vec![Stmt::Loop {
                body: vec![Stmt::Loop {
                    body: vec![Stmt::ordinary("a", 1)],
                }],
            }],
        )]);
        assert!(matches!(p.validate(), Err(ModelError::NestedLoop(_))));
    }

    #[test]
    fn default_rounds_counts_unrolled_ordinaries() {
        let p = program(vec![
            ThreadDef::new(
                "p",
                vec![
                    Stmt::ordinary("l1", 1),
                    Stmt::Loop {
                        body: vec![Stmt::ordinary("l2", 2), Stmt::sleep(2)],
                    },
                ],
            ),
            ThreadDef::new(
                "c",
                vec![Stmt::Loop {
                    body: vec![Stmt::sleep(2), Stmt::ordinary("l5", 2)],
                }],
            ),
        ]);
        assert_eq!(default_rounds(&p, 3), 7);
    }
}
