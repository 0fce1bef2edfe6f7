//! Parser for `.tick` program files.
//!
//! ```text
//! # comment to end of line
//! thread t1 {
//!   stmt l11 dur 1;        # ordinary statement, label optional
//!   loop {
//!     stmt l12 dur 2;
//!     sleep 3;
//!   }
//! }
//! property order { before(t1.l11, t1.l12[i]) and not before(t1.l12[i+1], t1.l11) }
//! ```
//!
//! Threads come first, properties last. Property expressions combine
//! `before(a, b)` atoms with `not`, `and`, `or` and `->` (lowest
//! precedence, right associative). Statements inside a loop are referenced
//! with an iteration index `[i]` or `[i+1]`.

mod lexer;

use std::collections::{HashMap, HashSet};
use std::fmt;

use lexer::{lex, Pos, Tok, Token};

use crate::model::{SourceProgram, Stmt, ThreadDef, Time};
use crate::property::{check_ref, index_var, IterIndex, PropExpr, Property, PropertyError, StmtRef};

const KEYWORDS: &[&str] = &[
    "thread", "stmt", "dur", "sleep", "loop", "property", "before", "and", "or", "not",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseDiagnostic {
    fn at(pos: Pos, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    /// `file:line:col: message`, followed by the offending source line and
    /// a caret under the column.
    pub fn render(&self, source_name: &str, text: &str) -> String {
        let mut out = format!("{source_name}:{self}\n");
        if let Some(src) = text.lines().nth(self.line - 1) {
            out.push_str(&format!("  | {src}\n  | {}^\n", " ".repeat(self.column - 1)));
        }
        out
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseDiagnostic {}

/// Parses a complete program with its properties.
pub fn parse_program(text: &str) -> Result<SourceProgram, Vec<ParseDiagnostic>> {
    let tokens = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser::new(tokens);
    let program = p.program().map_err(|d| {
        let mut all = std::mem::take(&mut p.diags);
        all.push(d);
        all
    })?;
    if p.diags.is_empty() {
        Ok(program)
    } else {
        Err(p.diags)
    }
}

/// Parses a standalone property against an already parsed program. Accepts
/// either a bare expression or a full `property name { ... }` block.
pub fn parse_property(text: &str, program: &SourceProgram) -> Result<Property, Vec<ParseDiagnostic>> {
    let tokens = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser::new(tokens);
    let result = (|| {
        let prop = if p.peek_keyword("property") {
            p.property()?
        } else {
            let expr = p.expr()?;
            Property {
                name: "property".into(),
                expr,
            }
        };
        p.expect(Tok::Eof)?;
        Ok(prop)
    })();
    let prop = result.map_err(|d: ParseDiagnostic| vec![d])?;
    p.check_property(program, &prop);
    if p.diags.is_empty() {
        Ok(prop)
    } else {
        Err(p.diags)
    }
}

type PResult<T> = Result<T, ParseDiagnostic>;

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    /// Recoverable (semantic) diagnostics.
    diags: Vec<ParseDiagnostic>,
    ref_positions: HashMap<String, Pos>,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            at: 0,
            diags: Vec::new(),
            ref_positions: HashMap::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        let t = self.next();
        if t.tok == tok {
            Ok(t.pos)
        } else {
            Err(ParseDiagnostic::at(
                t.pos,
                format!("expected {}, found {}", tok.describe(), t.tok.describe()),
            ))
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Pos> {
        self.expect(Tok::Ident(kw.into()))
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => Err(ParseDiagnostic::at(
                t.pos,
                format!("expected {what}, found keyword `{s}`"),
            )),
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(ParseDiagnostic::at(
                t.pos,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    /// A duration literal; zero and negative values are reported but
    /// parsing continues.
    fn duration(&mut self) -> PResult<Time> {
        let negative = if self.peek().tok == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        match t.tok {
            Tok::Int(n) => {
                let n = if negative { -n } else { n };
                if n < 1 {
                    self.diags.push(ParseDiagnostic::at(
                        t.pos,
                        format!("duration must be a positive integer, got {n}"),
                    ));
                }
                Ok(n)
            }
            other => Err(ParseDiagnostic::at(
                t.pos,
                format!("expected a duration, found {}", other.describe()),
            )),
        }
    }

    fn program(&mut self) -> PResult<SourceProgram> {
        let mut program = SourceProgram::default();
        let mut thread_names = HashSet::new();
        let mut property_names = HashSet::new();
        let mut prop_positions = Vec::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "thread" => {
                    if !program.properties.is_empty() {
                        self.diags.push(ParseDiagnostic::at(
                            t.pos,
                            "threads must be declared before properties",
                        ));
                    }
                    let thread = self.thread()?;
                    if !thread_names.insert(thread.0.name.clone()) {
                        self.diags.push(ParseDiagnostic::at(
                            thread.1,
                            format!("duplicate thread `{}`", thread.0.name),
                        ));
                    }
                    program.threads.push(thread.0);
                }
                Tok::Ident(kw) if kw == "property" => {
                    let prop = self.property()?;
                    if !property_names.insert(prop.name.clone()) {
                        self.diags.push(ParseDiagnostic::at(
                            t.pos,
                            format!("duplicate property `{}`", prop.name),
                        ));
                    }
                    prop_positions.push(t.pos);
                    program.properties.push(prop);
                }
                Tok::Ident(kw) => {
                    return Err(ParseDiagnostic::at(
                        t.pos,
                        format!("unknown keyword `{kw}`, expected `thread` or `property`"),
                    ))
                }
                other => {
                    return Err(ParseDiagnostic::at(
                        t.pos,
                        format!("expected `thread` or `property`, found {}", other.describe()),
                    ))
                }
            }
        }
        if program.threads.is_empty() {
            return Err(ParseDiagnostic::at(self.peek().pos, "no threads declared"));
        }
        let props = program.properties.clone();
        for prop in &props {
            self.check_property(&program, prop);
        }
        Ok(program)
    }

    fn thread(&mut self) -> PResult<(ThreadDef, Pos)> {
        self.keyword("thread")?;
        let (name, pos) = self.ident("a thread name")?;
        self.expect(Tok::LBrace)?;
        let mut labels = HashSet::new();
        let mut loops = 0;
        let body = self.block(&name, false, &mut labels, &mut loops)?;
        if body.is_empty() {
            self.diags.push(ParseDiagnostic::at(
                pos,
                format!("thread `{name}` has no statements"),
            ));
        }
        Ok((ThreadDef { name, body }, pos))
    }

    /// Statements up to and including the closing brace.
    fn block(
        &mut self,
        thread: &str,
        in_loop: bool,
        labels: &mut HashSet<String>,
        loops: &mut usize,
    ) -> PResult<Vec<Stmt>> {
        let mut body = Vec::new();
        loop {
            let t = self.next();
            match t.tok {
                Tok::RBrace => return Ok(body),
                Tok::Ident(kw) => match kw.as_str() {
                    "stmt" => {
                        let label = if self.peek_keyword("dur") {
                            None
                        } else {
                            let (label, pos) = self.ident("a statement label or `dur`")?;
                            if !labels.insert(label.clone()) {
                                self.diags.push(ParseDiagnostic::at(
                                    pos,
                                    format!("duplicate label `{label}` in thread `{thread}`"),
                                ));
                            }
                            Some(label)
                        };
                        self.keyword("dur")?;
                        let duration = self.duration()?;
                        self.expect(Tok::Semi)?;
                        body.push(Stmt::Ordinary { label, duration });
                    }
                    "sleep" => {
                        let duration = self.duration()?;
                        self.expect(Tok::Semi)?;
                        body.push(Stmt::Sleep { duration });
                    }
                    "loop" => {
                        if in_loop {
                            self.diags
                                .push(ParseDiagnostic::at(t.pos, "nested loops are not supported"));
                        } else {
                            *loops += 1;
                            if *loops == 2 {
                                self.diags.push(ParseDiagnostic::at(
                                    t.pos,
                                    format!("thread `{thread}` has more than one loop"),
                                ));
                            }
                        }
                        self.expect(Tok::LBrace)?;
                        let inner = self.block(thread, true, labels, loops)?;
                        if inner.is_empty() {
                            self.diags.push(ParseDiagnostic::at(t.pos, "empty loop body"));
                        }
                        if in_loop {
                            // flatten so parsing can go on; the diagnostic
                            // above already rejects the program
                            body.extend(inner);
                        } else {
                            body.push(Stmt::Loop { body: inner });
                        }
                    }
                    _ => {
                        return Err(ParseDiagnostic::at(
                            t.pos,
                            format!("unknown keyword `{kw}`, expected `stmt`, `sleep` or `loop`"),
                        ))
                    }
                },
                other => {
                    return Err(ParseDiagnostic::at(
                        t.pos,
                        format!("expected a statement or `}}`, found {}", other.describe()),
                    ))
                }
            }
        }
    }

    fn property(&mut self) -> PResult<Property> {
        self.keyword("property")?;
        let (name, _) = self.ident("a property name")?;
        self.expect(Tok::LBrace)?;
        let expr = self.expr()?;
        self.expect(Tok::RBrace)?;
        Ok(Property { name, expr })
    }

    fn expr(&mut self) -> PResult<PropExpr> {
        let lhs = self.disjunction()?;
        if self.peek().tok == Tok::Arrow {
            self.next();
            let rhs = self.expr()?;
            return Ok(PropExpr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<PropExpr> {
        let mut lhs = self.conjunction()?;
        while self.peek_keyword("or") {
            self.next();
            let rhs = self.conjunction()?;
            lhs = PropExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<PropExpr> {
        let mut lhs = self.unary()?;
        while self.peek_keyword("and") {
            self.next();
            let rhs = self.unary()?;
            lhs = PropExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<PropExpr> {
        if self.peek_keyword("not") {
            self.next();
            return Ok(PropExpr::Not(Box::new(self.unary()?)));
        }
        if self.peek().tok == Tok::LParen {
            self.next();
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        if self.peek_keyword("before") {
            self.next();
            self.expect(Tok::LParen)?;
            let a = self.stmt_ref()?;
            self.expect(Tok::Comma)?;
            let b = self.stmt_ref()?;
            self.expect(Tok::RParen)?;
            return Ok(PropExpr::Before(a, b));
        }
        let t = self.next();
        Err(ParseDiagnostic::at(
            t.pos,
            format!("expected `before(...)`, `not` or `(`, found {}", t.tok.describe()),
        ))
    }

    fn stmt_ref(&mut self) -> PResult<StmtRef> {
        let (thread, pos) = self.ident("a thread name")?;
        self.expect(Tok::Dot)?;
        let (label, _) = self.ident("a statement label")?;
        let index = if self.peek().tok == Tok::LBracket {
            self.next();
            let (var, _) = self.ident("an index variable")?;
            let offset = if self.peek().tok == Tok::Plus {
                self.next();
                let t = self.next();
                match t.tok {
                    Tok::Int(n @ 0..=1) => n as u32,
                    Tok::Int(n) => {
                        return Err(ParseDiagnostic::at(
                            t.pos,
                            format!("index offset must be 0 or 1, got {n}"),
                        ))
                    }
                    other => {
                        return Err(ParseDiagnostic::at(
                            t.pos,
                            format!("expected an index offset, found {}", other.describe()),
                        ))
                    }
                }
            } else {
                0
            };
            self.expect(Tok::RBracket)?;
            Some(IterIndex { var, offset })
        } else {
            None
        };
        let r = StmtRef { thread, label, index };
        self.ref_positions.entry(r.to_string()).or_insert(pos);
        Ok(r)
    }

    fn check_property(&mut self, program: &SourceProgram, prop: &Property) {
        if let Err(e) = index_var(prop) {
            let pos = prop
                .expr
                .refs()
                .first()
                .and_then(|r| self.ref_positions.get(&r.to_string()).copied())
                .unwrap_or(Pos { line: 1, column: 1 });
            self.diags.push(ParseDiagnostic::at(pos, e.to_string()));
        }
        let mut reported = HashSet::new();
        for r in prop.expr.refs() {
            if let Err(e) = check_ref(program, r) {
                let key = r.to_string();
                if reported.insert(key.clone()) {
                    let pos = self
                        .ref_positions
                        .get(&key)
                        .copied()
                        .unwrap_or(Pos { line: 1, column: 1 });
                    let message = match e {
                        PropertyError::UnknownThread(t) => {
                            format!("property `{}` refers to unknown thread `{t}`", prop.name)
                        }
                        PropertyError::UnknownLabel(l) => {
                            format!("property `{}` refers to unknown statement `{l}`", prop.name)
                        }
                        other => other.to_string(),
                    };
                    self.diags.push(ParseDiagnostic::at(pos, message));
                }
            }
        }
    }
}

impl fmt::Display for SourceProgram {
    /// Canonical `.tick` rendering; parses back to the same program.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn stmts(f: &mut fmt::Formatter<'_>, body: &[Stmt], indent: usize) -> fmt::Result {
            let pad = " ".repeat(indent);
            for s in body {
                match s {
                    Stmt::Ordinary {
                        label: Some(l),
                        duration,
                    } => writeln!(f, "{pad}stmt {l} dur {duration};")?,
                    Stmt::Ordinary {
                        label: None,
                        duration,
                    } => writeln!(f, "{pad}stmt dur {duration};")?,
                    Stmt::Sleep { duration } => writeln!(f, "{pad}sleep {duration};")?,
                    Stmt::Loop { body } => {
                        writeln!(f, "{pad}loop {{")?;
                        stmts(f, body, indent + 2)?;
                        writeln!(f, "{pad}}}")?;
                    }
                }
            }
            Ok(())
        }
        for (n, t) in self.threads.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            writeln!(f, "thread {} {{", t.name)?;
            stmts(f, &t.body, 2)?;
            writeln!(f, "}}")?;
        }
        if !self.properties.is_empty() {
            writeln!(f)?;
        }
        for p in &self.properties {
            writeln!(f, "{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
thread t1 {
  stmt l11 dur 1;   # i = 2
  stmt l12 dur 2;   # i += 2
}
thread t2 {
  sleep 2;
  stmt l22 dur 2;   # j = i
}
property order { before(t1.l12, t2.l22) }
";

    fn messages(text: &str) -> Vec<String> {
        parse_program(text)
            .unwrap_err()
            .into_iter()
            .map(|d| d.message)
            .collect()
    }

    #[test]
    fn parses_toy() {
        let p = parse_program(TOY).unwrap();
        assert_eq!(p.threads.len(), 2);
        assert_eq!(
            p.threads[0].body,
            vec![Stmt::ordinary("l11", 1), Stmt::ordinary("l12", 2)]
        );
        assert_eq!(p.threads[1].body, vec![Stmt::sleep(2), Stmt::ordinary("l22", 2)]);
        assert_eq!(
            p.properties[0].to_string(),
            "property order { before(t1.l12, t2.l22) }"
        );
    }

    #[test]
    fn empty_input() {
        assert_eq!(messages(""), vec!["no threads declared"]);
        assert_eq!(messages("# only a comment\n"), vec!["no threads declared"]);
    }

    #[test]
    fn zero_duration() {
        let d = parse_program("thread t {\n  stmt a dur 0;\n}").unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].line, d[0].column), (2, 14));
        assert!(d[0].message.contains("positive integer"));
        assert!(messages("thread t { sleep -2; }")[0].contains("got -2"));
    }

    #[test]
    fn distinct_errors() {
        assert!(messages("thread t { stmnt a dur 1; }")[0].starts_with("unknown keyword `stmnt`"));
        assert!(messages("thread t { stmt a dur 1; stmt a dur 2; }")[0].starts_with("duplicate label `a`"));
        assert!(messages("thread t { loop { loop { stmt a dur 1; } } }")[0].starts_with("nested loops"));
        assert!(
            messages("thread t { stmt a dur 1; } property p { before(t.a, t.b) }")[0]
                .contains("unknown statement `t.b`")
        );
        assert!(
            messages("thread t { stmt a dur 1; } property p { before(t.a, u.a) }")[0]
                .contains("unknown thread `u`")
        );
        assert!(
            messages("thread t { stmt a dur 1; } thread t { stmt b dur 1; }")[0]
                .starts_with("duplicate thread")
        );
        assert!(messages("thread t { }")[0].contains("no statements"));
        assert!(
            messages("thread t { loop { stmt a dur 1; } loop { stmt b dur 1; } }")[0]
                .contains("more than one loop")
        );
    }

    #[test]
    fn collects_several_diagnostics() {
        let d = parse_program("thread t { stmt a dur 0; stmt a dur 1; }").unwrap_err();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn property_index_rules() {
        let program = parse_program(
            "thread t1 { stmt l1 dur 1; loop { stmt l2 dur 2; sleep 2; } }
             thread t2 { loop { sleep 2; stmt l5 dur 2; } }",
        )
        .unwrap();
        let p = parse_property(
            "before(t1.l2[i], t2.l5[i]) and before(t2.l5[i], t1.l2[i+1])",
            &program,
        )
        .unwrap();
        assert!(matches!(p.expr, PropExpr::And(..)));
        let refs = p.expr.refs();
        assert_eq!(
            refs[3].index,
            Some(IterIndex {
                var: "i".into(),
                offset: 1
            })
        );

        let err = parse_property("before(t1.l1[i], t2.l5[i])", &program).unwrap_err();
        assert!(err[0].message.contains("not inside a loop"));
        let err = parse_property("before(t1.l2, t2.l5[i])", &program).unwrap_err();
        assert!(err[0].message.contains("needs an iteration index"));
        let err = parse_property("before(t1.l2[i], t2.l5[j])", &program).unwrap_err();
        assert!(err[0].message.contains("more than one index variable"));
        let err = parse_property("before(t1.l2[i+2], t2.l5[i])", &program).unwrap_err();
        assert!(err[0].message.contains("offset must be 0 or 1"));
    }

    #[test]
    fn irreflexive_atom_parses() {
        let program = parse_program(TOY).unwrap();
        assert!(parse_property("before(t1.l12, t1.l12)", &program).is_ok());
    }

    #[test]
    fn full_property_block() {
        let program = parse_program(TOY).unwrap();
        let p = parse_property(
            "property q { not before(t2.l22, t1.l11) -> before(t1.l11, t2.l22) }",
            &program,
        )
        .unwrap();
        assert_eq!(p.name, "q");
        assert!(matches!(p.expr, PropExpr::Implies(..)));
    }

    #[test]
    fn operator_precedence() {
        let program = parse_program(TOY).unwrap();
        let p = parse_property(
            "before(t1.l11, t1.l12) or before(t1.l11, t2.l22) and not before(t2.l22, t1.l12) -> before(t1.l11, t1.l12)",
            &program,
        )
        .unwrap();
        let PropExpr::Implies(lhs, _) = &p.expr else {
            panic!()
        };
        let PropExpr::Or(_, rhs) = lhs.as_ref() else {
            panic!()
        };
        assert!(matches!(rhs.as_ref(), PropExpr::And(..)));
    }

    #[test]
    fn unlabeled_statement() {
        let p = parse_program("thread t { stmt dur 3; }").unwrap();
        assert_eq!(
            p.threads[0].body,
            vec![Stmt::Ordinary {
                label: None,
                duration: 3
            }]
        );
    }

    #[test]
    fn pretty_print_reparses() {
        let p = parse_program(TOY).unwrap();
        assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn diagnostic_render() {
        let text = "thread t {\n  stmt a dur 0;\n}";
        let d = &parse_program(text).unwrap_err()[0];
        assert_eq!(
            d.render("x.tick", text),
            "x.tick:2:14: duration must be a positive integer, got 0\n  |   stmt a dur 0;\n  |              ^\n"
        );
    }
}
