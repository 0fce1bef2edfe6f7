//! Command output. The same [`Report`] is rendered as a text table or as
//! JSON; wall-clock timings live outside it so the JSON `report` object is
//! byte-identical across runs.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;
use tickcheck::verify::PropertyReport;
use tickcheck::{Instantiation, Schedule, Time, UnrolledProgram, Verdict};

#[derive(Serialize)]
pub struct Report {
    command: &'static str,
    bound: Bound,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    properties: Vec<PropertyOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedules: Option<Vec<ScheduleOut>>,
}

#[derive(Serialize)]
struct Bound {
    rounds: usize,
    loop_iterations: u32,
}

#[derive(Serialize)]
struct PropertyOut {
    name: String,
    verdict: &'static str,
    instantiations: usize,
    formula_nodes: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<Vec<Row>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ScheduleOut {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failed: Vec<String>,
    rows: Vec<Row>,
}

/// One line of a timeline: an executed round, an idle padding round
/// (`thread` absent), or a sleep (`round` absent).
#[derive(Serialize)]
struct Row {
    round: Option<usize>,
    thread: Option<String>,
    statement: String,
    start: Time,
    end: Time,
}

fn timeline(up: &UnrolledProgram, s: &Schedule) -> Vec<Row> {
    let name = |t: usize| Some(up.thread(t).name.clone());
    let mut rows = Vec::new();
    let sleep_row = |t: usize, i: usize, start: Time| Row {
        round: None,
        thread: name(t),
        statement: format!("(sleep {})", up.duration(t, i)),
        start,
        end: start + up.duration(t, i),
    };
    for t in 1..=up.thread_count() {
        if !up.is_ordinary(t, 1) {
            rows.push(sleep_row(t, 1, 0));
        }
    }
    for r in &s.rounds {
        match r.executed {
            Some((t, i)) => {
                rows.push(Row {
                    round: Some(r.k),
                    thread: name(t),
                    statement: up.thread(t).describe(i),
                    start: r.start,
                    end: r.end,
                });
                if i < up.len(t) && !up.is_ordinary(t, i + 1) {
                    rows.push(sleep_row(t, i + 1, r.end));
                }
            }
            None => rows.push(Row {
                round: Some(r.k),
                thread: None,
                statement: "(all terminated)".into(),
                start: r.start,
                end: r.end,
            }),
        }
    }
    rows
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated { .. } => "violated",
        Verdict::SolverError(_) => "error",
    }
}

impl Report {
    pub fn new(command: &'static str, up: &UnrolledProgram) -> Self {
        Report {
            command,
            bound: Bound {
                rounds: up.rounds(),
                loop_iterations: up.loop_iterations(),
            },
            verdict: "holds",
            properties: Vec::new(),
            schedules: (command == "simulate").then(Vec::new),
        }
    }

    pub fn set_verdict(&mut self, verdict: &'static str) {
        self.verdict = verdict;
    }

    pub fn add_property(&mut self, up: &UnrolledProgram, r: &PropertyReport) {
        let verdict = verdict_name(&r.verdict);
        if verdict == "error" || (verdict == "violated" && self.verdict == "holds") {
            self.verdict = verdict;
        }
        let (failed, counterexample, error) = match &r.verdict {
            Verdict::Holds => (Vec::new(), None, None),
            Verdict::Violated { schedule, failed } => (
                failed.iter().map(describe_instantiation).collect(),
                Some(timeline(up, schedule)),
                None,
            ),
            Verdict::SolverError(e) => (Vec::new(), None, Some(e.clone())),
        };
        self.properties.push(PropertyOut {
            name: r.property.clone(),
            verdict,
            instantiations: r.instantiations.len(),
            formula_nodes: r.node_count,
            failed,
            counterexample,
            error,
        });
    }

    pub fn add_schedule(&mut self, up: &UnrolledProgram, s: &Schedule, failed: &[&Instantiation]) {
        let list = self.schedules.get_or_insert_with(Vec::new);
        list.push(ScheduleOut {
            verdict: if failed.is_empty() { "holds" } else { "violated" },
            failed: failed.iter().map(|i| describe_instantiation(i)).collect(),
            rows: timeline(up, s),
        });
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let bound = format!("bound N={}, L={}", self.bound.rounds, self.bound.loop_iterations);
        if let Some(schedules) = &self.schedules {
            let _ = writeln!(out, "{} schedule(s), {bound}", schedules.len());
            for (n, s) in schedules.iter().enumerate() {
                let _ = writeln!(out, "\nschedule {}: {}", n + 1, s.verdict.to_uppercase());
                for f in &s.failed {
                    let _ = writeln!(out, "  failed: {f}");
                }
                render_rows(&mut out, &s.rows);
            }
            let bad = schedules.iter().filter(|s| s.verdict == "violated").count();
            let _ = writeln!(out);
            if bad == 0 {
                let _ = writeln!(out, "HOLDS on all {} schedule(s) ({bound})", schedules.len());
            } else {
                let _ = writeln!(
                    out,
                    "VIOLATED on {bad} of {} schedule(s) ({bound})",
                    schedules.len()
                );
            }
            return out;
        }
        if self.properties.is_empty() {
            let _ = writeln!(out, "no properties to check ({bound})");
        }
        for p in &self.properties {
            let _ = writeln!(out, "property {}: {} ({bound})", p.name, p.verdict.to_uppercase());
            for f in &p.failed {
                let _ = writeln!(out, "  failed: {f}");
            }
            if let Some(rows) = &p.counterexample {
                render_rows(&mut out, rows);
            }
            if let Some(e) = &p.error {
                let _ = writeln!(out, "  solver error: {}", e.trim_end().replace('\n', "\n    "));
            }
        }
        out
    }
}

fn describe_instantiation(i: &Instantiation) -> String {
    match i.index_value {
        Some(v) => format!("{} (i = {v})", i.expr),
        None => i.expr.to_string(),
    }
}

fn render_rows(out: &mut String, rows: &[Row]) {
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.round.map_or("-".into(), |k| k.to_string()),
                r.thread.clone().unwrap_or_else(|| "-".into()),
                r.statement.clone(),
                r.start.to_string(),
                r.end.to_string(),
            ]
        })
        .collect();
    let header = ["round", "thread", "statement", "start", "end"];
    let mut width = header.map(str::len);
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.len());
        }
    }
    for row in std::iter::once(header.map(String::from)).chain(cells) {
        let _ = writeln!(
            out,
            "  {:>w0$}  {:<w1$}  {:<w2$}  {:>w3$}  {:>w4$}",
            row[0],
            row[1],
            row[2],
            row[3],
            row[4],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2],
            w3 = width[3],
            w4 = width[4],
        );
    }
}

#[derive(Serialize)]
pub struct Timings {
    parse_ms: f64,
    queries: Vec<QueryTiming>,
}

#[derive(Serialize)]
struct QueryTiming {
    name: String,
    encode_ms: f64,
    solve_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl Timings {
    pub fn new(parse: Duration) -> Self {
        Timings {
            parse_ms: ms(parse),
            queries: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, encode: Duration, solve: Duration) {
        self.queries.push(QueryTiming {
            name: name.into(),
            encode_ms: ms(encode),
            solve_ms: ms(solve),
        });
    }
}

#[derive(Serialize)]
struct Structured<'a> {
    report: &'a Report,
    timings: &'a Timings,
}

/// `{"report": ..., "timings": ...}` as pretty-printed JSON.
pub fn structured(report: &Report, timings: &Timings) -> String {
    serde_json::to_string_pretty(&Structured { report, timings }).expect("plain data serializes")
}
