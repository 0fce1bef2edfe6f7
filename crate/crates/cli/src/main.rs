mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tickcheck::oracle::{enumerate_schedules_capped, failing};
use tickcheck::smt::{serialize, DEFAULT_SOLVER, SOLVER_ENV};
use tickcheck::verify::{check_property, node_count, prepare, Prepared};
use tickcheck::{encode, parse_program, Instantiation, SolverConfig, SourceProgram, Verdict};

use report::{Report, Timings};

/// Bounded verification of timing-annotated multi-threaded programs.
#[derive(Parser)]
#[command(name = "tickcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every property with an SMT solver.
    Verify(RunArgs),
    /// Write the SMT-LIB encoding without solving it.
    Emit {
        #[command(flatten)]
        run: RunArgs,
        /// Output file (standard output if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Enumerate every schedule by brute force and check the properties on each.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Refuse when the program may have more schedules than this.
        #[arg(long, default_value_t = 100_000)]
        cap: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Program file.
    input: PathBuf,
    /// Round bound N (default: number of ordinary statements after unrolling).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rounds: Option<u64>,
    /// Loop unrolling depth L.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    unroll: u32,
    /// Solver command line; `{}` stands for a script file, otherwise the
    /// script is piped to standard input.
    #[arg(long, env = SOLVER_ENV, default_value = DEFAULT_SOLVER)]
    solver: String,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(1..))]
    timeout: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

/// Error that has already been reported to the user.
struct Reported;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(run) => cmd_verify(&run),
        Command::Emit { run, output } => cmd_emit(&run, output.as_deref()),
        Command::Simulate { run, cap } => cmd_simulate(&run, cap),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if e.downcast_ref::<Reported>().is_none() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}

impl std::fmt::Debug for Reported {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("reported")
    }
}

impl std::fmt::Display for Reported {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("reported")
    }
}

impl std::error::Error for Reported {}

fn load(path: &Path) -> Result<SourceProgram> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&text).map_err(|diags| {
        for d in &diags {
            eprint!("{}", d.render(&path.display().to_string(), &text));
        }
        anyhow::Error::new(Reported)
    })
}

fn load_prepared(run: &RunArgs) -> Result<(Prepared, Duration)> {
    let started = Instant::now();
    let program = load(&run.input)?;
    let prepared = prepare(&program, run.rounds.map(|n| n as usize), run.unroll)?;
    Ok((prepared, started.elapsed()))
}

fn all_instantiations(prepared: &Prepared) -> Vec<Instantiation> {
    prepared
        .properties
        .iter()
        .flat_map(|(_, insts)| insts.iter().cloned())
        .collect()
}

fn cmd_verify(run: &RunArgs) -> Result<u8> {
    let (prepared, parse_time) = load_prepared(run)?;
    let solver = SolverConfig::new(&run.solver, Duration::from_secs(run.timeout))?;
    let up = &prepared.program;
    let mut report = Report::new("verify", up);
    let mut timings = Timings::new(parse_time);
    let mut code = 0;
    for (prop, insts) in &prepared.properties {
        let r = check_property(up, prop, insts, &solver)?;
        timings.add(&r.property, r.timings.encode, r.timings.solve);
        code = code.max(match &r.verdict {
            Verdict::Holds => 0,
            Verdict::Violated { .. } => 1,
            Verdict::SolverError(_) => 2,
        });
        report.add_property(up, &r);
    }
    emit_report(run.format, &report, &timings);
    Ok(code)
}

fn cmd_emit(run: &RunArgs, output: Option<&Path>) -> Result<u8> {
    let (prepared, parse_time) = load_prepared(run)?;
    let up = &prepared.program;
    let started = Instant::now();
    let insts = all_instantiations(&prepared);
    let assertions = encode(up, (!prepared.properties.is_empty()).then_some(insts.as_slice()));
    let script = serialize(&assertions, up);
    let encode_time = started.elapsed();
    match output {
        Some(path) => fs::write(path, &script).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{script}"),
    }
    eprintln!(
        "encoded {} assertion(s), {} formula nodes, N = {}, L = {} in {:.3} ms (parse {:.3} ms)",
        assertions.len(),
        node_count(&assertions),
        up.rounds(),
        up.loop_iterations(),
        encode_time.as_secs_f64() * 1e3,
        parse_time.as_secs_f64() * 1e3,
    );
    Ok(0)
}

fn cmd_simulate(run: &RunArgs, cap: usize) -> Result<u8> {
    let (prepared, parse_time) = load_prepared(run)?;
    let up = &prepared.program;
    let started = Instant::now();
    let schedules = match enumerate_schedules_capped(up, cap) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: refusing to simulate: {e}; raise --cap or lower --rounds");
            return Ok(2);
        }
    };
    let insts = all_instantiations(&prepared);
    let mut report = Report::new("simulate", up);
    let mut any_bad = false;
    for s in &schedules {
        let failed: Vec<&Instantiation> = failing(s, &insts);
        any_bad |= !failed.is_empty();
        report.add_schedule(up, s, &failed);
    }
    report.set_verdict(if any_bad { "violated" } else { "holds" });
    let mut timings = Timings::new(parse_time);
    timings.add("simulate", started.elapsed(), Duration::ZERO);
    emit_report(run.format, &report, &timings);
    Ok(u8::from(any_bad))
}

fn emit_report(format: Format, report: &Report, timings: &Timings) {
    match format {
        Format::Text => print!("{}", report.render_text()),
        Format::Structured => println!("{}", report::structured(report, timings)),
    }
}
