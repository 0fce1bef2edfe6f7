//! Quantifier-free linear integer arithmetic over schedule variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{Time, UnrolledProgram};

/// Integer variables of the encoding. All indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SVar {
    /// Next ordinary statement thread `thread` runs at round `round`.
    Pc { thread: usize, round: usize },
    /// Start time of a round.
    Y(usize),
    /// End time of a round.
    X(usize),
    /// Ending time of statement `stmt` of thread `thread`.
    E { thread: usize, stmt: usize },
}

impl SVar {
    pub fn parse(name: &str) -> Option<SVar> {
        let num = |s: &str| s.parse::<usize>().ok().filter(|&n| n >= 1);
        let pair = |s: &str| {
            let (a, b) = s.split_once('_')?;
            Some((num(a)?, num(b)?))
        };
        if let Some(rest) = name.strip_prefix("pc_") {
            let (thread, round) = pair(rest)?;
            Some(SVar::Pc { thread, round })
        } else if let Some(rest) = name.strip_prefix("E_") {
            let (thread, stmt) = pair(rest)?;
            Some(SVar::E { thread, stmt })
        } else if let Some(rest) = name.strip_prefix("Y_") {
            num(rest).map(SVar::Y)
        } else if let Some(rest) = name.strip_prefix("X_") {
            num(rest).map(SVar::X)
        } else {
            None
        }
    }

    /// Whether the variable exists for this program and bound.
    pub fn is_well_formed(&self, up: &UnrolledProgram) -> bool {
        let t_ok = |t: usize| t >= 1 && t <= up.thread_count();
        let k_ok = |k: usize| k >= 1 && k <= up.rounds() + 1;
        match *self {
            SVar::Pc { thread, round } => t_ok(thread) && k_ok(round),
            SVar::Y(k) | SVar::X(k) => k_ok(k),
            SVar::E { thread, stmt } => t_ok(thread) && stmt >= 1 && stmt <= up.len(thread),
        }
    }

    /// Every variable of the encoding for `up`, in declaration order.
    pub fn all(up: &UnrolledProgram) -> Vec<SVar> {
        let rounds = up.rounds() + 1;
        let mut out = Vec::new();
        for t in 1..=up.thread_count() {
            out.extend((1..=rounds).map(|round| SVar::Pc { thread: t, round }));
        }
        for k in 1..=rounds {
            out.push(SVar::Y(k));
            out.push(SVar::X(k));
        }
        for t in 1..=up.thread_count() {
            out.extend((1..=up.len(t)).map(|stmt| SVar::E { thread: t, stmt }));
        }
        out
    }
}

impl fmt::Display for SVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SVar::Pc { thread, round } => write!(f, "pc_{thread}_{round}"),
            SVar::Y(k) => write!(f, "Y_{k}"),
            SVar::X(k) => write!(f, "X_{k}"),
            SVar::E { thread, stmt } => write!(f, "E_{thread}_{stmt}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Const(i64),
    Var(SVar),
    /// Named duration constant `D_t_i`, bound to its annotated value.
    Duration {
        thread: usize,
        stmt: usize,
    },
    Sum(Vec<Term>),
}

impl Term {
    pub fn pc(thread: usize, round: usize) -> Term {
        Term::Var(SVar::Pc { thread, round })
    }

    pub fn y(k: usize) -> Term {
        Term::Var(SVar::Y(k))
    }

    pub fn x(k: usize) -> Term {
        Term::Var(SVar::X(k))
    }

    pub fn e(thread: usize, stmt: usize) -> Term {
        Term::Var(SVar::E { thread, stmt })
    }

    pub fn dur(thread: usize, stmt: usize) -> Term {
        Term::Duration { thread, stmt }
    }

    pub fn int(v: usize) -> Term {
        Term::Const(v as i64)
    }

    pub fn plus(self, other: Term) -> Term {
        Term::Sum(vec![self, other])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Ge,
    Gt,
    Ne,
}

impl CmpOp {
    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Cmp(CmpOp, Term, Term),
    /// Empty conjunction is true.
    And(Vec<Formula>),
    /// Empty disjunction is false.
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Eq, a, b)
    }

    pub fn le(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Le, a, b)
    }

    pub fn lt(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Lt, a, b)
    }

    pub fn gt(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Gt, a, b)
    }

    pub fn ne(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Ne, a, b)
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        Formula::Or(parts)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Number of AST nodes, terms included.
    pub fn node_count(&self) -> usize {
        fn term(t: &Term) -> usize {
            match t {
                Term::Sum(parts) => 1 + parts.iter().map(term).sum::<usize>(),
                _ => 1,
            }
        }
        match self {
            Formula::Cmp(_, a, b) => 1 + term(a) + term(b),
            Formula::And(parts) | Formula::Or(parts) => {
                1 + parts.iter().map(Formula::node_count).sum::<usize>()
            }
            Formula::Not(a) => 1 + a.node_count(),
            Formula::Implies(a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn vars(&self) -> BTreeSet<SVar> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            if let Term::Var(v) = t {
                out.insert(*v);
            }
        });
        out
    }

    fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        fn walk(t: &Term, f: &mut impl FnMut(&Term)) {
            f(t);
            if let Term::Sum(parts) = t {
                parts.iter().for_each(|p| walk(p, f));
            }
        }
        match self {
            Formula::Cmp(_, a, b) => {
                walk(a, f);
                walk(b, f);
            }
            Formula::And(parts) | Formula::Or(parts) => {
                parts.iter().for_each(|p| p.visit_terms(f));
            }
            Formula::Not(a) => a.visit_terms(f),
            Formula::Implies(a, b) => {
                a.visit_terms(f);
                b.visit_terms(f);
            }
        }
    }

    /// Returns the first variable or duration constant that does not exist
    /// for `up`.
    pub fn check_well_formed(&self, up: &UnrolledProgram) -> Result<(), String> {
        let mut bad = None;
        self.visit_terms(&mut |t| {
            if bad.is_some() {
                return;
            }
            match t {
                Term::Var(v) if !v.is_well_formed(up) => bad = Some(v.to_string()),
                Term::Duration { thread, stmt }
                    if *thread == 0
                        || *thread > up.thread_count()
                        || *stmt == 0
                        || *stmt > up.len(*thread) =>
                {
                    bad = Some(format!("D_{thread}_{stmt}"))
                }
                _ => {}
            }
        });
        bad.map_or(Ok(()), Err)
    }

    /// Evaluates under a total assignment; durations come from `up`.
    pub fn eval(&self, vars: &Assignment, up: &UnrolledProgram) -> Result<bool, EvalError> {
        Ok(match self {
            Formula::Cmp(op, a, b) => op.holds(term_value(a, vars, up)?, term_value(b, vars, up)?),
            Formula::And(parts) => {
                for p in parts {
                    if !p.eval(vars, up)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(parts) => {
                for p in parts {
                    if p.eval(vars, up)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Not(a) => !a.eval(vars, up)?,
            Formula::Implies(a, b) => !a.eval(vars, up)? || b.eval(vars, up)?,
        })
    }
}

pub type Assignment = BTreeMap<SVar, Time>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no value for `{0}`")]
pub struct EvalError(pub String);

fn term_value(t: &Term, vars: &Assignment, up: &UnrolledProgram) -> Result<i64, EvalError> {
    match t {
        Term::Const(c) => Ok(*c),
        Term::Var(v) => vars.get(v).copied().ok_or_else(|| EvalError(v.to_string())),
        Term::Duration { thread, stmt } => Ok(up.duration(*thread, *stmt)),
        Term::Sum(parts) => parts.iter().map(|p| term_value(p, vars, up)).sum(),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Duration { thread, stmt } => write!(f, "D_{thread}_{stmt}"),
            Term::Sum(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Infix rendering, used in test failure messages and debug output.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, parts: &[Formula], op: &str, empty: &str| {
            if parts.is_empty() {
                return f.write_str(empty);
            }
            f.write_str("(")?;
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::And(parts) => join(f, parts, "&", "true"),
            Formula::Or(parts) => join(f, parts, "|", "false"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}
