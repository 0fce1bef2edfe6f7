//! End-to-end checking of a program's properties: unroll, encode, solve,
//! decode.

use std::time::{Duration, Instant};

use crate::encode::{encode, Assertion};
use crate::model::{default_rounds, unroll, SourceProgram, UnrolledProgram};
use crate::oracle;
use crate::property::{instantiate, Instantiation, Property};
use crate::schedule::Schedule;
use crate::smt::{decode, serialize, solve, SolveResult, SolverConfig};
use crate::Error;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Round bound `N`; defaults to the number of ordinary statements.
    pub rounds: Option<usize>,
    /// Loop unrolling depth `L`.
    pub loop_iterations: u32,
    pub solver: SolverConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            rounds: None,
            loop_iterations: 1,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// A schedule on which the listed instantiations fail.
    Violated {
        schedule: Schedule,
        failed: Vec<Instantiation>,
    },
    SolverError(String),
}

impl Verdict {
    pub fn is_holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timings {
    pub encode: Duration,
    pub solve: Duration,
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub property: String,
    pub instantiations: Vec<Instantiation>,
    pub verdict: Verdict,
    /// Formula nodes in `sched ∧ ¬λ`.
    pub node_count: usize,
    pub timings: Timings,
}

/// The unrolled program together with every property's ground instances.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub program: UnrolledProgram,
    pub properties: Vec<(Property, Vec<Instantiation>)>,
}

/// Unrolls the program and grounds all of its properties.
pub fn prepare(
    program: &SourceProgram,
    rounds: Option<usize>,
    loop_iterations: u32,
) -> Result<Prepared, Error> {
    let n = rounds.unwrap_or_else(|| default_rounds(program, loop_iterations));
    let up = unroll(program, loop_iterations, n)?;
    let properties = program
        .properties
        .iter()
        .map(|p| Ok((p.clone(), instantiate(p, &up)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Prepared {
        program: up,
        properties,
    })
}

/// Total formula nodes over a list of assertions.
pub fn node_count(assertions: &[Assertion]) -> usize {
    assertions.iter().map(|a| a.formula.node_count()).sum()
}

/// Checks one property with a single solver query on `sched ∧ ¬λ`.
///
/// A satisfying model is decoded into a schedule and the violated
/// instantiations are recomputed from its ending times. A model that
/// decodes but violates nothing means the encoder is wrong, and is
/// returned as an error.
pub fn check_property(
    up: &UnrolledProgram,
    property: &Property,
    instantiations: &[Instantiation],
    solver: &SolverConfig,
) -> Result<PropertyReport, Error> {
    let started = Instant::now();
    let assertions = encode(up, Some(instantiations));
    let script = serialize(&assertions, up);
    let encode_time = started.elapsed();
    let nodes = node_count(&assertions);

    let started = Instant::now();
    let outcome = solve(&script, solver);
    let solve_time = started.elapsed();

    let verdict = match outcome {
        Err(e) => Verdict::SolverError(e.to_string()),
        Ok(SolveResult::Unsat) => Verdict::Holds,
        Ok(SolveResult::Sat(model)) => {
            let schedule = decode(&model, up)?;
            let failed: Vec<Instantiation> = oracle::failing(&schedule, instantiations)
                .into_iter()
                .cloned()
                .collect();
            if failed.is_empty() {
                return Err(Error::SpuriousModel(property.name.clone()));
            }
            Verdict::Violated { schedule, failed }
        }
    };
    Ok(PropertyReport {
        property: property.name.clone(),
        instantiations: instantiations.to_vec(),
        verdict,
        node_count: nodes,
        timings: Timings {
            encode: encode_time,
            solve: solve_time,
        },
    })
}

/// Checks every property of the program in declaration order.
pub fn verify(
    program: &SourceProgram,
    options: &VerifyOptions,
) -> Result<(Prepared, Vec<PropertyReport>), Error> {
    let prepared = prepare(program, options.rounds, options.loop_iterations)?;
    let reports = prepared
        .properties
        .iter()
        .map(|(p, insts)| check_property(&prepared.program, p, insts, &options.solver))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((prepared, reports))
}
