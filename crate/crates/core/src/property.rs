//! Precedence properties over statement ending times.
//!
//! A property is a Boolean combination of `before(a, b)` atoms, each meaning
//! "statement instance `a` ends before `b` ends". References into a loop
//! carry a symbolic iteration index (`l[i]` or `l[i+1]`); the property is
//! implicitly quantified over every value of that index.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{Time, UnrolledProgram};

/// Symbolic loop index `var + offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterIndex {
    pub var: String,
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StmtRef {
    pub thread: String,
    pub label: String,
    pub index: Option<IterIndex>,
}

impl fmt::Display for StmtRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.thread, self.label)?;
        match &self.index {
            Some(IterIndex { var, offset: 0 }) => write!(f, "[{var}]"),
            Some(IterIndex { var, offset }) => write!(f, "[{var}+{offset}]"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropExpr {
    /// `a` ends strictly before `b`.
    Before(StmtRef, StmtRef),
    And(Box<PropExpr>, Box<PropExpr>),
    Or(Box<PropExpr>, Box<PropExpr>),
    Not(Box<PropExpr>),
    Implies(Box<PropExpr>, Box<PropExpr>),
}

impl PropExpr {
    pub fn refs(&self) -> Vec<&StmtRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a StmtRef>) {
        match self {
            PropExpr::Before(a, b) => {
                out.push(a);
                out.push(b);
            }
            PropExpr::And(a, b) | PropExpr::Or(a, b) | PropExpr::Implies(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            PropExpr::Not(a) => a.collect_refs(out),
        }
    }

    /// Splits nested top-level conjunctions into their conjuncts.
    fn clauses(&self) -> Vec<&PropExpr> {
        match self {
            PropExpr::And(a, b) => {
                let mut out = a.clauses();
                out.extend(b.clauses());
                out
            }
            other => vec![other],
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            PropExpr::Implies(..) => 0,
            PropExpr::Or(..) => 1,
            PropExpr::And(..) => 2,
            PropExpr::Not(..) | PropExpr::Before(..) => 3,
        }
    }
}

impl fmt::Display for PropExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &PropExpr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            PropExpr::Before(a, b) => write!(f, "before({a}, {b})"),
            PropExpr::And(a, b) => {
                wrap(f, a, 2)?;
                f.write_str(" and ")?;
                wrap(f, b, 3)
            }
            PropExpr::Or(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" or ")?;
                wrap(f, b, 2)
            }
            PropExpr::Implies(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" -> ")?;
                wrap(f, b, 0)
            }
            PropExpr::Not(a) => {
                f.write_str("not ")?;
                wrap(f, a, 3)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub expr: PropExpr,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "property {} {{ {} }}", self.name, self.expr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyError {
    #[error("unknown thread `{0}`")]
    UnknownThread(String),
    #[error("unknown statement `{0}`")]
    UnknownLabel(String),
    #[error("`{0}` is inside a loop and needs an iteration index")]
    MissingIndex(String),
    #[error("`{0}` is not inside a loop and cannot take an iteration index")]
    UnexpectedIndex(String),
    #[error("property `{0}` uses more than one index variable")]
    MultipleIndexVars(String),
    #[error("`{reference}` is unreachable under bound N={rounds}; raise --rounds")]
    Unreachable { reference: String, rounds: usize },
}

/// A concrete statement instance in the unrolled program (1-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Instance {
    pub thread: usize,
    pub position: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstExpr {
    Before(Instance, Instance),
    And(Box<InstExpr>, Box<InstExpr>),
    Or(Box<InstExpr>, Box<InstExpr>),
    Not(Box<InstExpr>),
    Implies(Box<InstExpr>, Box<InstExpr>),
}

impl InstExpr {
    /// Distinct referenced instances, in (thread, position) order.
    pub fn instances(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<(usize, usize)>) {
        match self {
            InstExpr::Before(a, b) => {
                out.insert((a.thread, a.position));
                out.insert((b.thread, b.position));
            }
            InstExpr::And(a, b) | InstExpr::Or(a, b) | InstExpr::Implies(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            InstExpr::Not(a) => a.collect(out),
        }
    }

    /// Evaluates with the given ending times.
    pub fn eval(&self, end: &impl Fn(usize, usize) -> Time) -> bool {
        match self {
            InstExpr::Before(a, b) => end(a.thread, a.position) < end(b.thread, b.position),
            InstExpr::And(a, b) => a.eval(end) && b.eval(end),
            InstExpr::Or(a, b) => a.eval(end) || b.eval(end),
            InstExpr::Not(a) => !a.eval(end),
            InstExpr::Implies(a, b) => !a.eval(end) || b.eval(end),
        }
    }
}

impl fmt::Display for InstExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstExpr::Before(a, b) => write!(f, "before({}, {})", a.name, b.name),
            InstExpr::And(a, b) => write!(f, "({a} and {b})"),
            InstExpr::Or(a, b) => write!(f, "({a} or {b})"),
            InstExpr::Not(a) => write!(f, "not {a}"),
            InstExpr::Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

/// One ground instance of a property clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instantiation {
    pub property: String,
    /// Index of the top-level conjunct this came from.
    pub clause: usize,
    /// Value of the index variable, if the clause has one.
    pub index_value: Option<u32>,
    pub expr: InstExpr,
}

impl fmt::Display for Instantiation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.property, self.expr)?;
        if let Some(v) = self.index_value {
            write!(f, " (i = {v})")?;
        }
        Ok(())
    }
}

/// Checks a property against the source-level thread structure.
pub(crate) fn check_ref(program: &crate::model::SourceProgram, r: &StmtRef) -> Result<(), PropertyError> {
    let thread = program
        .thread(&r.thread)
        .ok_or_else(|| PropertyError::UnknownThread(r.thread.clone()))?;
    let in_loop = thread
        .label_in_loop(&r.label)
        .ok_or_else(|| PropertyError::UnknownLabel(format!("{}.{}", r.thread, r.label)))?;
    match (in_loop, &r.index) {
        (true, None) => Err(PropertyError::MissingIndex(r.to_string())),
        (false, Some(_)) => Err(PropertyError::UnexpectedIndex(r.to_string())),
        _ => Ok(()),
    }
}

pub(crate) fn index_var(prop: &Property) -> Result<Option<&str>, PropertyError> {
    let vars: BTreeSet<&str> = prop
        .expr
        .refs()
        .into_iter()
        .filter_map(|r| r.index.as_ref().map(|i| i.var.as_str()))
        .collect();
    match vars.len() {
        0 => Ok(None),
        1 => Ok(vars.into_iter().next()),
        _ => Err(PropertyError::MultipleIndexVars(prop.name.clone())),
    }
}

/// Grounds a property against an unrolled program.
///
/// Each top-level conjunct is instantiated separately, for every index
/// value in `1..=L` at which all instances it references exist after loop
/// replication. An instance that exists but was cut off by the round bound
/// is an error rather than a vacuous pass.
pub fn instantiate(prop: &Property, up: &UnrolledProgram) -> Result<Vec<Instantiation>, PropertyError> {
    index_var(prop)?;
    let mut out = Vec::new();
    for (clause_no, clause) in prop.expr.clauses().into_iter().enumerate() {
        let indexed = clause.refs().iter().any(|r| r.index.is_some());
        let values: Vec<Option<u32>> = if indexed {
            (1..=up.loop_iterations()).map(Some).collect()
        } else {
            vec![None]
        };
        for value in values {
            if let Some(expr) = ground(clause, value, up)? {
                out.push(Instantiation {
                    property: prop.name.clone(),
                    clause: clause_no,
                    index_value: value,
                    expr,
                });
            }
        }
    }
    Ok(out)
}

type Grounded<T> = Result<Option<T>, PropertyError>;

/// `Ok(None)` when some referenced iteration does not exist at this value.
fn ground(expr: &PropExpr, value: Option<u32>, up: &UnrolledProgram) -> Grounded<InstExpr> {
    let bin = |a: &PropExpr, b: &PropExpr| -> Grounded<(Box<InstExpr>, Box<InstExpr>)> {
        Ok(match (ground(a, value, up)?, ground(b, value, up)?) {
            (Some(a), Some(b)) => Some((Box::new(a), Box::new(b))),
            _ => None,
        })
    };
    Ok(match expr {
        PropExpr::Before(a, b) => match (resolve(a, value, up)?, resolve(b, value, up)?) {
            (Some(a), Some(b)) => Some(InstExpr::Before(a, b)),
            _ => None,
        },
        PropExpr::And(a, b) => bin(a, b)?.map(|(a, b)| InstExpr::And(a, b)),
        PropExpr::Or(a, b) => bin(a, b)?.map(|(a, b)| InstExpr::Or(a, b)),
        PropExpr::Implies(a, b) => bin(a, b)?.map(|(a, b)| InstExpr::Implies(a, b)),
        PropExpr::Not(a) => ground(a, value, up)?.map(|a| InstExpr::Not(Box::new(a))),
    })
}

fn resolve(r: &StmtRef, value: Option<u32>, up: &UnrolledProgram) -> Result<Option<Instance>, PropertyError> {
    let t = up
        .thread_index(&r.thread)
        .ok_or_else(|| PropertyError::UnknownThread(r.thread.clone()))?;
    let iteration = match (&r.index, value) {
        (Some(idx), Some(v)) => {
            let it = v + idx.offset;
            if it > up.loop_iterations() {
                return Ok(None);
            }
            it
        }
        (Some(_), None) => unreachable!("indexed clauses always get a value"),
        (None, _) => 0,
    };
    let name = if iteration > 0 {
        format!("{}.{}[{}]", r.thread, r.label, iteration)
    } else {
        format!("{}.{}", r.thread, r.label)
    };
    match up.thread(t).position_of(&r.label, iteration) {
        Some(position) => Ok(Some(Instance {
            thread: t,
            position,
            name,
        })),
        None => Err(PropertyError::Unreachable {
            reference: name,
            rounds: up.rounds(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{unroll, SourceProgram, Stmt, ThreadDef};

    fn r(thread: &str, label: &str, idx: Option<u32>) -> StmtRef {
        StmtRef {
            thread: thread.into(),
            label: label.into(),
            index: idx.map(|offset| IterIndex {
                var: "i".into(),
                offset,
            }),
        }
    }

    fn loop_program() -> SourceProgram {
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
            properties: vec![],
        }
    }

    #[test]
    fn conjuncts_instantiate_independently() {
        let prop = Property {
            name: "p".into(),
            expr: PropExpr::And(
                Box::new(PropExpr::Before(r("t1", "l2", Some(0)), r("t2", "l5", Some(0)))),
                Box::new(PropExpr::Before(r("t2", "l5", Some(0)), r("t1", "l2", Some(1)))),
            ),
        };
        let up = unroll(&loop_program(), 2, 5).unwrap();
        let inst = instantiate(&prop, &up).unwrap();
        let got: Vec<_> = inst.iter().map(|i| (i.clause, i.index_value)).collect();
        assert_eq!(got, vec![(0, Some(1)), (0, Some(2)), (1, Some(1))]);
        assert_eq!(inst[2].expr.to_string(), "before(t2.l5[1], t1.l2[2])");
    }

    #[test]
    fn truncated_reference_is_unreachable() {
        let prop = Property {
            name: "p".into(),
            expr: PropExpr::Before(r("t1", "l2", Some(0)), r("t2", "l5", Some(0))),
        };
        let up = unroll(&loop_program(), 2, 1).unwrap();
        assert!(matches!(
            instantiate(&prop, &up),
            Err(PropertyError::Unreachable { .. })
        ));
    }

    #[test]
    fn display_round_trips_precedence() {
        let a = PropExpr::Before(r("t1", "a", None), r("t2", "b", None));
        let e = PropExpr::Implies(
            Box::new(PropExpr::Or(Box::new(a.clone()), Box::new(a.clone()))),
            Box::new(PropExpr::Not(Box::new(PropExpr::And(
                Box::new(a.clone()),
                Box::new(a),
            )))),
        );
        assert_eq!(
            e.to_string(),
            "before(t1.a, t2.b) or before(t1.a, t2.b) -> not (before(t1.a, t2.b) and before(t1.a, t2.b))"
        );
    }
}
