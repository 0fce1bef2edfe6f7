//! Bounded verification of precedence properties for multi-threaded
//! programs whose statements carry execution-time annotations.
//!
//! The pipeline is: parse a `.tick` file ([`frontend`]), unroll loops and
//! fix a round bound ([`model`]), ground the properties ([`property`]),
//! build `sched ∧ ¬λ` ([`encode`]), hand it to an SMT solver and decode any
//! model into a [`Schedule`] ([`smt`]). [`oracle`] enumerates the same
//! schedules by brute force and is used to cross-check the encoder.

pub mod encode;
pub mod families;
pub mod formula;
pub mod frontend;
pub mod model;
pub mod oracle;
pub mod property;
pub mod schedule;
pub mod smt;
pub mod verify;

use thiserror::Error;

pub use encode::{encode, Assertion};
pub use formula::{Assignment, CmpOp, Formula, SVar, Term};
pub use frontend::{parse_program, parse_property, ParseDiagnostic};
pub use model::{
    default_rounds, normalize_sleeps, unroll, ModelError, SourceProgram, Stmt, StmtKind, ThreadDef, Time,
    UnrolledProgram, UnrolledStmt, UnrolledThread,
};
pub use property::{
    instantiate, InstExpr, Instance, Instantiation, IterIndex, PropExpr, Property, PropertyError, StmtRef,
};
pub use schedule::{Round, Schedule};
pub use smt::{SolveResult, SolverConfig, SolverError};
pub use verify::{
    check_property, prepare, verify, Prepared, PropertyReport, Timings, Verdict, VerifyOptions,
};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<ParseDiagnostic>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Smt(#[from] smt::SmtError),
    #[error("solver model decodes to a schedule that does not violate `{0}`")]
    SpuriousModel(String),
}

impl From<smt::DecodeError> for Error {
    fn from(e: smt::DecodeError) -> Self {
        Error::Smt(e.into())
    }
}
