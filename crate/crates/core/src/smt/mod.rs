//! SMT-LIB v2 (QF_LIA) emission, external solver driving, model decoding
//! and schedule enumeration.

mod decode;
mod solver;

use std::fmt::Write as _;

use thiserror::Error;

pub use decode::{decode, model_violations, DecodeError};
pub use solver::{parse_output, solve, SolveResult, SolverConfig, SolverError, DEFAULT_SOLVER, SOLVER_ENV};

use crate::encode::Assertion;
use crate::formula::{CmpOp, Formula, SVar, Term};
use crate::model::UnrolledProgram;
use crate::schedule::Schedule;

const WIDTH: usize = 100;

/// Renders the assertions as a self-contained SMT-LIB v2 script.
///
/// Durations become named constants `D_t_i` fixed by one assertion each,
/// so they can be edited in place. The script ends with `(check-sat)` and
/// a `(get-value ...)` over every schedule variable. Output depends only on
/// the inputs.
pub fn serialize(assertions: &[Assertion], up: &UnrolledProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "; tickcheck encoding: {} thread(s), N = {}, loops unrolled {} time(s)",
        up.thread_count(),
        up.rounds(),
        up.loop_iterations()
    );
    out.push_str("(set-option :produce-models true)\n(set-logic QF_LIA)\n");
    out.push_str("; statement durations\n");
    for t in 1..=up.thread_count() {
        for i in 1..=up.len(t) {
            let _ = writeln!(out, "(declare-const D_{t}_{i} Int)");
            let _ = writeln!(
                out,
                "(assert (= D_{t}_{i} {})) ; {}",
                up.duration(t, i),
                up.describe(t, i)
            );
        }
    }
    out.push_str("; schedule variables\n");
    let vars = SVar::all(up);
    for v in &vars {
        let _ = writeln!(out, "(declare-const {v} Int)");
    }
    for a in assertions {
        let _ = writeln!(out, "; {}", a.comment);
        out.push_str("(assert ");
        write_formula(&mut out, &a.formula, 8);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n(get-value (");
    for (n, v) in vars.iter().enumerate() {
        if n > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push_str("))\n");
    out
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Const(c) if *c < 0 => {
            let _ = write!(out, "(- {})", c.unsigned_abs());
        }
        Term::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Term::Var(v) => {
            let _ = write!(out, "{v}");
        }
        Term::Duration { thread, stmt } => {
            let _ = write!(out, "D_{thread}_{stmt}");
        }
        Term::Sum(parts) if parts.is_empty() => out.push('0'),
        Term::Sum(parts) => {
            out.push_str("(+");
            for p in parts {
                out.push(' ');
                write_term(out, p);
            }
            out.push(')');
        }
    }
}

fn term_len(t: &Term) -> usize {
    let mut s = String::new();
    write_term(&mut s, t);
    s.len()
}

fn op_name(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq | CmpOp::Ne => "=",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Ge => ">=",
        CmpOp::Gt => ">",
    }
}

fn children(f: &Formula) -> (&'static str, Vec<&Formula>) {
    match f {
        Formula::And(parts) => ("and", parts.iter().collect()),
        Formula::Or(parts) => ("or", parts.iter().collect()),
        Formula::Not(a) => ("not", vec![a]),
        Formula::Implies(a, b) => ("=>", vec![a, b]),
        Formula::Cmp(..) => unreachable!("comparisons are leaves"),
    }
}

/// Length of the single-line rendering.
fn flat_len(f: &Formula) -> usize {
    match f {
        Formula::Cmp(op, a, b) => {
            let base = 4 + op_name(*op).len() + term_len(a) + term_len(b);
            if *op == CmpOp::Ne {
                base + 6
            } else {
                base
            }
        }
        Formula::And(p) if p.is_empty() => 4,
        Formula::Or(p) if p.is_empty() => 5,
        _ => {
            let (head, kids) = children(f);
            1 + head.len() + kids.iter().map(|k| 1 + flat_len(k)).sum::<usize>() + 1
        }
    }
}

fn write_flat(out: &mut String, f: &Formula) {
    match f {
        Formula::Cmp(op, a, b) => {
            if *op == CmpOp::Ne {
                out.push_str("(not ");
            }
            let _ = write!(out, "({} ", op_name(*op));
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
            if *op == CmpOp::Ne {
                out.push(')');
            }
        }
        Formula::And(p) if p.is_empty() => out.push_str("true"),
        Formula::Or(p) if p.is_empty() => out.push_str("false"),
        _ => {
            let (head, kids) = children(f);
            let _ = write!(out, "({head}");
            for k in kids {
                out.push(' ');
                write_flat(out, k);
            }
            out.push(')');
        }
    }
}

fn write_formula(out: &mut String, f: &Formula, indent: usize) {
    if matches!(f, Formula::Cmp(..)) || indent + flat_len(f) <= WIDTH {
        write_flat(out, f);
        return;
    }
    let (head, kids) = children(f);
    let _ = write!(out, "({head}");
    for k in kids {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', indent + 2));
        write_formula(out, k, indent + 2);
    }
    out.push(')');
}

#[derive(Debug, Error)]
pub enum SmtError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("enumeration limit must be at least 1")]
    ZeroLimit,
}

/// Excludes every model with the same program-counter trajectory.
pub fn blocking_clause(schedule_pcs: &[(SVar, i64)]) -> Formula {
    Formula::not(Formula::And(
        schedule_pcs
            .iter()
            .map(|(v, value)| Formula::eq(Term::Var(*v), Term::Const(*value)))
            .collect(),
    ))
}

/// Enumerates up to `limit` schedules with pairwise distinct execution
/// orders, blocking each found program-counter trajectory in turn.
pub fn enumerate(
    assertions: &[Assertion],
    up: &UnrolledProgram,
    solver: &SolverConfig,
    limit: usize,
) -> Result<Vec<Schedule>, SmtError> {
    if limit == 0 {
        return Err(SmtError::ZeroLimit);
    }
    let mut all = assertions.to_vec();
    let mut found = Vec::new();
    while found.len() < limit {
        let bindings = match solve(&serialize(&all, up), solver)? {
            SolveResult::Unsat => break,
            SolveResult::Sat(b) => b,
        };
        let schedule = decode(&bindings, up)?;
        let pcs: Vec<(SVar, i64)> = bindings
            .iter()
            .filter(|(v, _)| matches!(v, SVar::Pc { .. }))
            .map(|(v, val)| (*v, *val))
            .collect();
        all.push(Assertion {
            comment: format!("block schedule {}", found.len() + 1),
            formula: blocking_clause(&pcs),
        });
        found.push(schedule);
    }
    Ok(found)
}
