//! Runs an external SMT-LIB v2 solver as a subprocess.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::{Assignment, SVar};

/// Environment variable holding the default solver command line.
pub const SOLVER_ENV: &str = "TICKCHECK_SOLVER";

/// Used when [`SOLVER_ENV`] is unset. Reads the script from standard input.
pub const DEFAULT_SOLVER: &str = "z3 -in";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Program followed by its arguments. An argument `{}` is replaced by
    /// the path of a temporary file holding the script; without one, the
    /// script goes to standard input.
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl SolverConfig {
    pub fn new(command_line: &str, timeout: Duration) -> Result<Self, SolverError> {
        let command: Vec<String> = command_line.split_whitespace().map(String::from).collect();
        if command.is_empty() {
            return Err(SolverError::Config("empty solver command".into()));
        }
        if timeout.is_zero() {
            return Err(SolverError::Config("timeout must be positive".into()));
        }
        Ok(SolverConfig { command, timeout })
    }

    /// `$TICKCHECK_SOLVER`, or `z3 -in`, with a 60 second timeout.
    pub fn from_env() -> Self {
        let line = std::env::var(SOLVER_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .unwrap_or_else(|| DEFAULT_SOLVER.to_string());
        SolverConfig::new(&line, Duration::from_secs(60)).expect("non-empty command")
    }

    pub fn command_line(&self) -> String {
        self.command.join(" ")
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::from_env()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("could not start solver `{command}`: {message}")]
    Spawn { command: String, message: String },
    #[error("solver exited with {status}:\n{output}")]
    Exit { status: String, output: String },
    #[error("solver timed out after {secs:.1}s")]
    Timeout { secs: f64, output: String },
    #[error("solver answered unknown:\n{output}")]
    Unknown { output: String },
    #[error("unparseable solver output ({message}):\n{output}")]
    Parse { message: String, output: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
}

static SCRIPT_COUNTER: AtomicUsize = AtomicUsize::new(0);

struct Captured {
    status: std::process::ExitStatus,
    stdout: String,
    stderr: String,
}

/// Runs the solver on `script` and parses its verdict.
///
/// Solvers typically complain that no model is available when asked for
/// values after `unsat`; anything following an `unsat` answer is ignored.
pub fn solve(script: &str, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    let captured = run(script, config)?;
    let combined = || format!("{}{}", captured.stdout, captured.stderr);
    match parse_output(&captured.stdout) {
        Ok(SolveResult::Unsat) => Ok(SolveResult::Unsat),
        Ok(result) if captured.status.success() => Ok(result),
        Ok(_) => Err(SolverError::Exit {
            status: captured.status.to_string(),
            output: combined(),
        }),
        Err(e) if !captured.status.success() => Err(SolverError::Exit {
            status: captured.status.to_string(),
            output: match e {
                SolverError::Parse { .. } => combined(),
                other => other.to_string(),
            },
        }),
        Err(SolverError::Parse { message, .. }) => Err(SolverError::Parse {
            message,
            output: combined(),
        }),
        Err(e) => Err(e),
    }
}

fn run(script: &str, config: &SolverConfig) -> Result<Captured, SolverError> {
    let script_path = if config.command.iter().any(|a| a.contains("{}")) {
        let n = SCRIPT_COUNTER.fetch_add(1, Ordering::Relaxed);
        let path = std::env::temp_dir().join(format!("tickcheck-{}-{n}.smt2", std::process::id()));
        std::fs::write(&path, script).map_err(|e| SolverError::Spawn {
            command: config.command_line(),
            message: format!("writing {}: {e}", path.display()),
        })?;
        Some(path)
    } else {
        None
    };
    let result = run_process(script, config, script_path.as_deref());
    if let Some(path) = script_path {
        let _ = std::fs::remove_file(path);
    }
    result
}

fn run_process(
    script: &str,
    config: &SolverConfig,
    script_path: Option<&std::path::Path>,
) -> Result<Captured, SolverError> {
    let args: Vec<String> = config.command[1..]
        .iter()
        .map(|a| match script_path {
            Some(p) => a.replace("{}", &p.to_string_lossy()),
            None => a.clone(),
        })
        .collect();
    let mut child = Command::new(&config.command[0])
        .args(&args)
        .stdin(if script_path.is_some() {
            Stdio::null()
        } else {
            Stdio::piped()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SolverError::Spawn {
            command: config.command_line(),
            message: e.to_string(),
        })?;

    let writer = child.stdin.take().map(|mut stdin| {
        let script = script.to_owned();
        // a solver that exits early closes the pipe; its output says why
        thread::spawn(move || {
            let _ = stdin.write_all(script.as_bytes());
        })
    });
    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let started = Instant::now();
    let mut pause = Duration::from_micros(200);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if started.elapsed() >= config.timeout => {
                let _ = child.kill();
                let _ = child.wait();
                let output = out_reader.join().unwrap_or_default();
                return Err(SolverError::Timeout {
                    secs: config.timeout.as_secs_f64(),
                    output,
                });
            }
            Ok(None) => {
                thread::sleep(pause);
                pause = (pause * 2).min(Duration::from_millis(10));
            }
            Err(e) => {
                return Err(SolverError::Spawn {
                    command: config.command_line(),
                    message: e.to_string(),
                })
            }
        }
    };
    if let Some(w) = writer {
        let _ = w.join();
    }
    Ok(Captured {
        status,
        stdout: out_reader.join().unwrap_or_default(),
        stderr: err_reader.join().unwrap_or_default(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                let list = stack
                    .pop()
                    .filter(|_| !stack.is_empty())
                    .ok_or("unbalanced `)`")?;
                stack.last_mut().expect("non-empty").push(Sexp::List(list));
            }
            ';' => while chars.next().is_some_and(|c| c != '\n') {},
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') if chars.peek() == Some(&'"') => {
                            chars.next();
                            s.push('"');
                        }
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => return Err("unterminated string".into()),
                    }
                }
                stack.last_mut().expect("non-empty").push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                stack.last_mut().expect("non-empty").push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().expect("one level"))
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(minus), inner] if minus == "-" => int_value(inner).map(|v| -v),
            _ => None,
        },
    }
}

fn error_message(s: &Sexp) -> Option<String> {
    match s {
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(head), Sexp::Atom(msg)] if head == "error" => Some(msg.clone()),
            _ => None,
        },
        _ => None,
    }
}

/// Parses a solver's standard output: the `check-sat` answer, then for
/// `sat` the `get-value` response.
pub fn parse_output(stdout: &str) -> Result<SolveResult, SolverError> {
    let parse_err = |message: String| SolverError::Parse {
        message,
        output: stdout.to_string(),
    };
    let items = tokenize(stdout).map_err(parse_err)?;
    let mut rest = items
        .iter()
        .skip_while(|s| matches!(s, Sexp::Atom(a) if a == "success"));
    let verdict = match rest.next() {
        Some(Sexp::Atom(a)) => a.as_str(),
        Some(other) => {
            return Err(parse_err(
                error_message(other).unwrap_or_else(|| "expected sat, unsat or unknown".into()),
            ))
        }
        None => return Err(parse_err("no answer".into())),
    };
    match verdict {
        "unsat" => Ok(SolveResult::Unsat),
        "unknown" => Err(SolverError::Unknown {
            output: stdout.to_string(),
        }),
        "sat" => {
            let values = match rest.next() {
                Some(Sexp::List(pairs)) => pairs,
                Some(other) => {
                    return Err(parse_err(
                        error_message(other).unwrap_or_else(|| "expected a value list".into()),
                    ))
                }
                None => return Err(parse_err("missing value list".into())),
            };
            let mut model = Assignment::new();
            for pair in values {
                let Sexp::List(kv) = pair else {
                    return Err(parse_err("malformed binding".into()));
                };
                let [Sexp::Atom(name), value] = kv.as_slice() else {
                    return Err(parse_err("malformed binding".into()));
                };
                let value =
                    int_value(value).ok_or_else(|| parse_err(format!("non-integer value for {name}")))?;
                if let Some(var) = SVar::parse(name) {
                    model.insert(var, value);
                }
            }
            Ok(SolveResult::Sat(model))
        }
        other => Err(parse_err(format!("unexpected answer `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sat_model() {
        let out = "sat\n((pc_1_1 1)\n (Y_1 0)\n (E_2_1 (- 3)))\n";
        let SolveResult::Sat(m) = parse_output(out).unwrap() else {
            panic!("expected sat");
        };
        assert_eq!(m[&SVar::Pc { thread: 1, round: 1 }], 1);
        assert_eq!(m[&SVar::E { thread: 2, stmt: 1 }], -3);
    }

    #[test]
    fn unsat_ignores_model_error() {
        let out = "unsat\n(error \"line 6 column 14: model is not available\")\n";
        assert_eq!(parse_output(out).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(
            parse_output("(error \"line 2 column 0: invalid expression\")"),
            Err(SolverError::Parse { .. })
        ));
        assert!(matches!(
            parse_output("unknown\n"),
            Err(SolverError::Unknown { .. })
        ));
        assert!(matches!(parse_output(""), Err(SolverError::Parse { .. })));
        assert!(matches!(parse_output("sat\n((x"), Err(SolverError::Parse { .. })));
    }

    #[test]
    fn rejects_empty_command() {
        assert!(SolverConfig::new("  ", Duration::from_secs(1)).is_err());
        assert!(SolverConfig::new("z3 -in", Duration::ZERO).is_err());
    }

    #[test]
    fn missing_binary_is_spawn_error() {
        let cfg = SolverConfig::new("/nonexistent/solver-binary", Duration::from_secs(1)).unwrap();
        assert!(matches!(
            solve("(check-sat)", &cfg),
            Err(SolverError::Spawn { .. })
        ));
    }

    #[test]
    fn timeout_kills_solver() {
        let cfg = SolverConfig::new("sleep 5", Duration::from_millis(100)).unwrap();
        let started = Instant::now();
        assert!(matches!(solve("", &cfg), Err(SolverError::Timeout { .. })));
        assert!(started.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn nonzero_exit_is_error() {
        let cfg = SolverConfig::new("false", Duration::from_secs(5)).unwrap();
        assert!(matches!(solve("", &cfg), Err(SolverError::Exit { .. })));
    }
}
