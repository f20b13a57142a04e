//! Frame programs: a small text format mirroring the Python listings.
//!
//! ```text
//! prefix dbpp: <http://dbpedia.org/property/>
//! graph dbpedia = <http://dbpedia.org>
//!
//! frame movies = dbpedia.feature_domain_range('dbpp:starring', 'movie', 'actor')
//! frame american = movies.expand('actor', [('dbpp:birthPlace', 'country')])
//!     .filter({'country': ['=dbpr:United_States']})
//! output american
//! ```
//!
//! A statement ends at a newline outside brackets. A trailing `\` or a next
//! line starting with `.` continues it. The `frame` keyword is optional.
//! Prefixes apply to every graph in the program. Without an `output`
//! statement the last defined frame is the result.

use std::collections::HashMap;
use std::fmt;

use kgframe_core::{AggFunc, Direction, Frame, Iri, JoinType, KnowledgeGraph, PrefixMap, SortOrder};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ProgramError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ProgramError> {
    Err(ProgramError { line, message: message.into() })
}

#[derive(Debug, Clone)]
pub struct Program {
    graphs: Vec<(String, KnowledgeGraph)>,
    frames: Vec<(String, Frame)>,
    output: usize,
}

impl Program {
    pub fn parse(text: &str) -> Result<Program, ProgramError> {
        let tokens = lex(text)?;
        let statements = split(tokens);
        build(statements)
    }

    pub fn result(&self) -> &Frame {
        &self.frames[self.output].1
    }

    pub fn result_name(&self) -> &str {
        &self.frames[self.output].0
    }

    pub fn graphs(&self) -> &[(String, KnowledgeGraph)] {
        &self.graphs
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        self.frames.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn frames(&self) -> impl Iterator<Item = (&str, &Frame)> {
        self.frames.iter().map(|(n, f)| (n.as_str(), f))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Iri(String),
    Punct(char),
    Newline,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Iri(s) => write!(f, "<{s}>"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Newline => f.write_str("end of line"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ProgramError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(c) = chars.next() {
        match c {
            '\n' => {
                out.push(Token { tok: Tok::Newline, line });
                line += 1;
            }
            c if c.is_whitespace() => {}
            '#' => {
                while chars.peek().is_some_and(|c| *c != '\n') {
                    chars.next();
                }
            }
            '\'' | '"' => {
                let start = line;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None | Some('\n') => return err(start, "unterminated string"),
                        Some('\\') => match chars.next() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(e) => s.push(e),
                            None => return err(start, "unterminated string"),
                        },
                        Some(q) if q == c => break,
                        Some(other) => s.push(other),
                    }
                }
                out.push(Token { tok: Tok::Str(s), line });
            }
            '<' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None | Some('\n') => return err(line, "unterminated IRI"),
                        Some('>') => break,
                        Some(other) => s.push(other),
                    }
                }
                out.push(Token { tok: Tok::Iri(s), line });
            }
            c if c.is_ascii_digit() || (c == '-' && chars.peek().is_some_and(|d| d.is_ascii_digit())) => {
                let mut s = String::from(c);
                while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                    s.push(*d);
                    chars.next();
                }
                let Ok(n) = s.parse() else {
                    return err(line, format!("integer `{s}` out of range"));
                };
                out.push(Token { tok: Tok::Int(n), line });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '_') {
                    s.push(*d);
                    chars.next();
                }
                out.push(Token { tok: Tok::Ident(s), line });
            }
            '(' | ')' | '[' | ']' | '{' | '}' | ',' | ':' | '=' | '.' | '\\' => {
                out.push(Token { tok: Tok::Punct(c), line })
            }
            other => return err(line, format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

/// Groups tokens into statements, honouring brackets, `\` and leading-dot
/// continuation lines.
fn split(tokens: Vec<Token>) -> Vec<Vec<Token>> {
    let mut statements = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut depth = 0i32;
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        match &t.tok {
            Tok::Punct('(' | '[' | '{') => depth += 1,
            Tok::Punct(')' | ']' | '}') => depth -= 1,
            _ => {}
        }
        if t.tok == Tok::Punct('\\') {
            if tokens.get(i + 1).is_some_and(|n| n.tok == Tok::Newline) {
                i += 2;
                continue;
            }
        } else if t.tok == Tok::Newline {
            let next = tokens[i + 1..].iter().find(|n| n.tok != Tok::Newline);
            let continues = next.is_some_and(|n| n.tok == Tok::Punct('.'));
            if depth <= 0 && !continues && !current.is_empty() {
                statements.push(std::mem::take(&mut current));
            }
            i += 1;
            continue;
        }
        current.push(t.clone());
        i += 1;
    }
    if !current.is_empty() {
        statements.push(current);
    }
    statements
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Int(i64),
    Ident(String),
    List(Vec<Value>),
    Dict(Vec<(Value, Value)>),
}

#[derive(Debug)]
struct Call {
    method: String,
    args: Vec<Value>,
    kwargs: Vec<(String, Value)>,
    line: usize,
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.line)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Result<&'a Tok, ProgramError> {
        let line = self.line();
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t.map_or_else(|| err(line, "unexpected end of statement"), Ok)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ProgramError> {
        let line = self.line();
        match self.next()? {
            Tok::Punct(p) if *p == c => Ok(()),
            other => err(line, format!("expected `{c}`, found {other}")),
        }
    }

    fn ident(&mut self) -> Result<&'a str, ProgramError> {
        let line = self.line();
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => err(line, format!("expected a name, found {other}")),
        }
    }

    fn done(&self) -> Result<(), ProgramError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => err(self.line(), format!("unexpected {t}")),
        }
    }

    fn value(&mut self) -> Result<Value, ProgramError> {
        let line = self.line();
        Ok(match self.next()? {
            Tok::Str(s) => Value::Str(s.clone()),
            Tok::Int(i) => Value::Int(*i),
            Tok::Ident(s) => Value::Ident(s.clone()),
            Tok::Punct('[') => Value::List(self.seq(']')?),
            Tok::Punct('(') => Value::List(self.seq(')')?),
            Tok::Punct('{') => {
                let mut entries = Vec::new();
                while !self.eat('}') {
                    let k = self.value()?;
                    self.expect(':')?;
                    let v = self.value()?;
                    entries.push((k, v));
                    if !self.eat(',') {
                        self.expect('}')?;
                        break;
                    }
                }
                Value::Dict(entries)
            }
            other => return err(line, format!("expected a value, found {other}")),
        })
    }

    fn seq(&mut self, close: char) -> Result<Vec<Value>, ProgramError> {
        let mut items = Vec::new();
        while !self.eat(close) {
            items.push(self.value()?);
            if !self.eat(',') {
                self.expect(close)?;
                break;
            }
        }
        Ok(items)
    }

    fn call(&mut self) -> Result<Call, ProgramError> {
        let line = self.line();
        let method = self.ident()?.to_string();
        self.expect('(')?;
        let (mut args, mut kwargs) = (Vec::new(), Vec::new());
        while !self.eat(')') {
            let is_kwarg = matches!(self.peek(), Some(Tok::Ident(_)))
                && self.toks.get(self.pos + 1).is_some_and(|t| t.tok == Tok::Punct('='));
            if is_kwarg {
                let k = self.ident()?.to_string();
                self.expect('=')?;
                kwargs.push((k, self.value()?));
            } else if !kwargs.is_empty() {
                return err(self.line(), "positional argument after keyword argument");
            } else {
                args.push(self.value()?);
            }
            if !self.eat(',') {
                self.expect(')')?;
                break;
            }
        }
        Ok(Call { method, args, kwargs, line })
    }
}

enum Receiver {
    Graph(KnowledgeGraph),
    Frame(Frame),
}

struct Env {
    prefixes: PrefixMap,
    graph_iris: Vec<(String, Iri)>,
    frames: Vec<(String, Frame)>,
    output: Option<(String, usize)>,
}

impl Env {
    fn graph(&self, name: &str) -> Option<KnowledgeGraph> {
        let (_, iri) = self.graph_iris.iter().find(|(n, _)| n == name)?;
        Some(KnowledgeGraph::with_prefixes(iri.clone(), self.prefixes.clone()))
    }

    fn frame(&self, name: &str) -> Option<&Frame> {
        self.frames.iter().rev().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

fn build(statements: Vec<Vec<Token>>) -> Result<Program, ProgramError> {
    if statements.is_empty() {
        return err(1, "empty program: no frames defined");
    }
    let mut env = Env { prefixes: PrefixMap::with_defaults(), graph_iris: Vec::new(), frames: Vec::new(), output: None };
    // Prefixes first, so they reach graphs declared before them.
    let mut rest = Vec::new();
    for s in statements {
        if matches!(&s[0].tok, Tok::Ident(k) if k == "prefix") {
            let mut c = Cursor { toks: &s, pos: 1 };
            let name = match c.peek() {
                Some(Tok::Punct(':')) => "",
                _ => c.ident()?,
            };
            c.expect(':')?;
            let line = c.line();
            let Tok::Iri(ns) = c.next()? else {
                return err(line, "expected `<namespace>` after prefix name");
            };
            c.done()?;
            env.prefixes.insert(name, ns);
        } else {
            rest.push(s);
        }
    }
    for s in &rest {
        statement(&mut env, s)?;
    }
    if env.frames.is_empty() {
        return err(rest.last().map_or(1, |s| s[0].line), "program defines no frames");
    }
    let output = match env.output {
        Some((_, i)) => i,
        None => env.frames.len() - 1,
    };
    let graphs = env
        .graph_iris
        .iter()
        .map(|(n, iri)| (n.clone(), KnowledgeGraph::with_prefixes(iri.clone(), env.prefixes.clone())))
        .collect();
    Ok(Program { graphs, frames: env.frames, output })
}

fn statement(env: &mut Env, toks: &[Token]) -> Result<(), ProgramError> {
    let mut c = Cursor { toks, pos: 0 };
    let line = c.line();
    let first = c.ident()?;
    match first {
        "graph" => {
            let name = c.ident()?.to_string();
            c.expect('=')?;
            let line = c.line();
            let iri = match c.next()? {
                Tok::Iri(s) | Tok::Str(s) => s,
                other => return err(line, format!("expected a graph IRI, found {other}")),
            };
            c.done()?;
            if env.graph_iris.iter().any(|(n, _)| *n == name) || env.frame(&name).is_some() {
                return err(line, format!("`{name}` is already defined"));
            }
            let iri = Iri::new(iri.as_str()).or_else(|e| err(line, e.to_string()))?;
            env.graph_iris.push((name, iri));
            Ok(())
        }
        "output" => {
            let name = c.ident()?;
            c.done()?;
            if let Some((prev, _)) = &env.output {
                return err(line, format!("second output statement; `{prev}` is already the result"));
            }
            let Some(i) = env.frames.iter().rposition(|(n, _)| n == name) else {
                return err(line, format!("unknown frame `{name}`"));
            };
            env.output = Some((name.to_string(), i));
            Ok(())
        }
        _ => {
            let name = if first == "frame" { c.ident()? } else { first };
            if env.graph(name).is_some() {
                return err(line, format!("`{name}` is a graph"));
            }
            c.expect('=')?;
            let frame = expression(env, &mut c)?;
            c.done()?;
            env.frames.push((name.to_string(), frame));
            Ok(())
        }
    }
}

fn expression(env: &Env, c: &mut Cursor) -> Result<Frame, ProgramError> {
    let line = c.line();
    let head = c.ident()?;
    let mut recv = if let Some(g) = env.graph(head) {
        Receiver::Graph(g)
    } else if let Some(f) = env.frame(head) {
        Receiver::Frame(f.clone())
    } else {
        return err(line, format!("unknown name `{head}`"));
    };
    while c.eat('.') {
        let call = c.call()?;
        recv = Receiver::Frame(match recv {
            Receiver::Graph(g) => graph_call(&g, &call)?,
            Receiver::Frame(f) => frame_call(env, &f, &call)?,
        });
    }
    match recv {
        Receiver::Frame(f) => Ok(f),
        Receiver::Graph(_) => err(line, format!("`{head}` is a graph, not a frame")),
    }
}

struct Args<'a> {
    call: &'a Call,
    used: Vec<bool>,
}

impl<'a> Args<'a> {
    fn new(call: &'a Call, min: usize, max: usize) -> Result<Self, ProgramError> {
        let n = call.args.len();
        if n < min || n > max {
            let expected = if min == max { min.to_string() } else { format!("{min} to {max}") };
            return err(call.line, format!("{}() takes {expected} positional arguments, got {n}", call.method));
        }
        Ok(Args { call, used: vec![false; call.kwargs.len()] })
    }

    fn pos(&self, i: usize) -> Option<&'a Value> {
        self.call.args.get(i)
    }

    fn kw(&mut self, name: &str) -> Option<&'a Value> {
        let i = self.call.kwargs.iter().position(|(k, _)| k == name)?;
        self.used[i] = true;
        Some(&self.call.kwargs[i].1)
    }

    /// Positional argument `i`, or keyword `name`.
    fn get(&mut self, i: usize, name: &str) -> Option<&'a Value> {
        self.pos(i).or_else(|| self.kw(name))
    }

    fn str(&mut self, i: usize, name: &str) -> Result<&'a str, ProgramError> {
        match self.get(i, name) {
            Some(v) => as_str(v, self.call.line),
            None => err(self.call.line, format!("{}(): missing argument `{name}`", self.call.method)),
        }
    }

    fn finish(self) -> Result<(), ProgramError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => err(self.call.line, format!("{}(): unexpected keyword `{}`", self.call.method, self.call.kwargs[i].0)),
            None => Ok(()),
        }
    }
}

fn as_str(v: &Value, line: usize) -> Result<&str, ProgramError> {
    match v {
        Value::Str(s) => Ok(s),
        other => err(line, format!("expected a string, found {}", describe(other))),
    }
}

fn as_bool(v: &Value, line: usize) -> Result<bool, ProgramError> {
    match v {
        Value::Ident(s) if s == "True" || s == "true" => Ok(true),
        Value::Ident(s) if s == "False" || s == "false" => Ok(false),
        other => err(line, format!("expected True or False, found {}", describe(other))),
    }
}

fn as_int(v: &Value, line: usize) -> Result<i64, ProgramError> {
    match v {
        Value::Int(i) => Ok(*i),
        other => err(line, format!("expected an integer, found {}", describe(other))),
    }
}

fn as_strs(v: &Value, line: usize) -> Result<Vec<&str>, ProgramError> {
    match v {
        Value::List(items) => items.iter().map(|i| as_str(i, line)).collect(),
        Value::Str(s) => Ok(vec![s]),
        other => err(line, format!("expected a list of strings, found {}", describe(other))),
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Str(s) => format!("string {s:?}"),
        Value::Int(i) => format!("integer {i}"),
        Value::Ident(s) => format!("`{s}`"),
        Value::List(_) => "a list".into(),
        Value::Dict(_) => "a dict".into(),
    }
}

fn frame_err(line: usize) -> impl Fn(kgframe_core::FrameError) -> ProgramError {
    move |e| ProgramError { line, message: e.to_string() }
}

fn graph_call(g: &KnowledgeGraph, call: &Call) -> Result<Frame, ProgramError> {
    let line = call.line;
    let fe = frame_err(line);
    match call.method.as_str() {
        "seed" => {
            let mut a = Args::new(call, 0, 3)?;
            let (s, p, o) = (a.str(0, "s")?, a.str(1, "p")?, a.str(2, "o")?);
            a.finish()?;
            g.seed(s, p, o).map_err(fe)
        }
        "feature_domain_range" => {
            let mut a = Args::new(call, 0, 3)?;
            let (p, d, r) = (a.str(0, "predicate")?, a.str(1, "domain")?, a.str(2, "range")?);
            a.finish()?;
            g.feature_domain_range(p, d, r).map_err(fe)
        }
        "entities" => {
            let mut a = Args::new(call, 0, 2)?;
            let (class, col) = (a.str(0, "class_name")?, a.str(1, "new_col")?);
            a.finish()?;
            g.entities(class, col).map_err(fe)
        }
        "explore_classes" => {
            Args::new(call, 0, 0)?.finish()?;
            g.explore_classes().map_err(fe)
        }
        other => err(line, format!("unknown graph method `{other}`")),
    }
}

fn direction_or_optional(v: &Value, line: usize) -> Result<Result<Direction, bool>, ProgramError> {
    match v {
        Value::Ident(s) => match s.to_ascii_lowercase().as_str() {
            "incoming" | "in" => Ok(Ok(Direction::Incoming)),
            "outgoing" | "out" => Ok(Ok(Direction::Outgoing)),
            "optional" | "true" => Ok(Err(true)),
            "false" => Ok(Err(false)),
            _ => err(line, format!("expected INCOMING, OUTGOING or OPTIONAL, found `{s}`")),
        },
        other => err(line, format!("expected INCOMING, OUTGOING or OPTIONAL, found {}", describe(other))),
    }
}

fn expand_step(v: &Value, line: usize) -> Result<(String, String, Direction, bool), ProgramError> {
    let Value::List(items) = v else {
        return err(line, format!("expand step must be a tuple, found {}", describe(v)));
    };
    if items.len() < 2 || items.len() > 4 {
        return err(line, "expand step is (predicate, new_col[, direction][, OPTIONAL])");
    }
    let pred = as_str(&items[0], line)?.to_string();
    let col = as_str(&items[1], line)?.to_string();
    let (mut dir, mut opt) = (Direction::Outgoing, false);
    for item in &items[2..] {
        match direction_or_optional(item, line)? {
            Ok(d) => dir = d,
            Err(o) => opt = o,
        }
    }
    Ok((pred, col, dir, opt))
}

fn join_type(v: &Value, line: usize) -> Result<JoinType, ProgramError> {
    let name = match v {
        Value::Ident(s) | Value::Str(s) => s.to_ascii_lowercase(),
        other => return err(line, format!("expected a join type, found {}", describe(other))),
    };
    Ok(match name.trim_end_matches("join") {
        "inner" => JoinType::Inner,
        "leftouter" | "left" => JoinType::LeftOuter,
        "rightouter" | "right" => JoinType::RightOuter,
        "outer" | "fullouter" | "full" => JoinType::FullOuter,
        _ => return err(line, format!("unknown join type `{name}`")),
    })
}

fn sort_order(s: &str, line: usize) -> Result<SortOrder, ProgramError> {
    match s.to_ascii_lowercase().as_str() {
        "asc" | "ascending" => Ok(SortOrder::Asc),
        "desc" | "descending" => Ok(SortOrder::Desc),
        _ => err(line, format!("unknown sort order `{s}`")),
    }
}

fn frame_call(env: &Env, f: &Frame, call: &Call) -> Result<Frame, ProgramError> {
    let line = call.line;
    let fe = frame_err(line);
    match call.method.as_str() {
        "expand" => {
            if call.args.len() >= 3 {
                let mut a = Args::new(call, 3, 5)?;
                let (col, pred, new_col) = (a.str(0, "src_col")?, a.str(1, "predicate")?, a.str(2, "new_col")?);
                let (mut dir, mut opt) = (Direction::Outgoing, false);
                for v in call.args[3..].iter() {
                    match direction_or_optional(v, line)? {
                        Ok(d) => dir = d,
                        Err(o) => opt = o,
                    }
                }
                a.finish()?;
                return f.expand_with(col, pred, new_col, dir, opt).map_err(fe);
            }
            let mut a = Args::new(call, 2, 2)?;
            let col = a.str(0, "src_col")?;
            let Some(Value::List(steps)) = a.pos(1) else {
                return err(line, "expand(src_col, [(predicate, new_col), ...])");
            };
            a.finish()?;
            let steps = steps.iter().map(|s| expand_step(s, line)).collect::<Result<Vec<_>, _>>()?;
            let steps: Vec<_> = steps.iter().map(|(p, c, d, o)| (p.as_str(), c.as_str(), *d, *o)).collect();
            f.expand_many(col, &steps).map_err(fe)
        }
        "filter" => {
            let a = Args::new(call, 1, 1)?;
            let Some(Value::Dict(entries)) = a.pos(0) else {
                return err(line, "filter({column: [conditions], ...})");
            };
            a.finish()?;
            let mut owned = Vec::new();
            for (k, v) in entries {
                owned.push((as_str(k, line)?, as_strs(v, line)?));
            }
            let conds: Vec<(&str, &[&str])> = owned.iter().map(|(k, v)| (*k, v.as_slice())).collect();
            f.filter(&conds).map_err(fe)
        }
        "select_cols" => {
            let a = Args::new(call, 1, 1)?;
            let cols = as_strs(a.pos(0).expect("checked"), line)?;
            a.finish()?;
            f.select_cols(&cols).map_err(fe)
        }
        "join" => {
            let mut a = Args::new(call, 2, 5)?;
            let other = match a.pos(0) {
                Some(Value::Ident(n)) => env.frame(n).ok_or_else(|| ProgramError { line, message: format!("unknown frame `{n}`") })?,
                Some(v) => return err(line, format!("join(): expected a frame name, found {}", describe(v))),
                None => unreachable!(),
            };
            let col = a.str(1, "join_col_name1")?;
            // join(other, col[, other_col][, kind][, new_col])
            let mut strs = Vec::new();
            let mut kind = None;
            for v in &call.args[2..] {
                match v {
                    Value::Str(s) => strs.push(s.as_str()),
                    v => kind = Some(join_type(v, line)?),
                }
            }
            if let Some(v) = a.kw("join_type") {
                kind = Some(join_type(v, line)?);
            }
            let other_col = match a.kw("join_col_name2") {
                Some(v) => as_str(v, line)?,
                None => strs.first().copied().unwrap_or(col),
            };
            let new_col = match a.kw("new_col") {
                Some(v) => as_str(v, line)?,
                None => strs.get(1).copied().unwrap_or(col),
            };
            a.finish()?;
            f.join(other, col, other_col, kind.unwrap_or(JoinType::Inner), new_col).map_err(fe)
        }
        "group_by" => {
            let a = Args::new(call, 1, 1)?;
            let cols = as_strs(a.pos(0).expect("checked"), line)?;
            a.finish()?;
            f.group_by(&cols).map_err(fe)
        }
        m @ ("count" | "sum" | "avg" | "average" | "min" | "max" | "sample") => {
            let func = AggFunc::from_name(if m == "average" { "avg" } else { m }).expect("known aggregate");
            let mut a = Args::new(call, 1, 3)?;
            let src = a.str(0, "src_col_name")?;
            let new_col = match a.get(1, "new_col_name") {
                Some(v) => as_str(v, line)?.to_string(),
                None => format!("{m}_{src}"),
            };
            let distinct = match a.get(2, "unique") {
                Some(v) => as_bool(v, line)?,
                None => false,
            };
            a.finish()?;
            if f.accepts_aggregation() {
                f.aggregation(func, src, &new_col, distinct).map_err(fe)
            } else {
                f.aggregate(func, src, &new_col, distinct).map_err(fe)
            }
        }
        "aggregate" => {
            let mut a = Args::new(call, 2, 4)?;
            let name = a.str(0, "aggregation_fn")?;
            let func = AggFunc::from_name(name).ok_or_else(|| ProgramError { line, message: format!("unknown aggregate `{name}`") })?;
            let src = a.str(1, "src_col_name")?;
            let new_col = match a.get(2, "new_col_name") {
                Some(v) => as_str(v, line)?.to_string(),
                None => format!("{name}_{src}"),
            };
            let distinct = match a.get(3, "unique") {
                Some(v) => as_bool(v, line)?,
                None => false,
            };
            a.finish()?;
            f.aggregate(func, src, &new_col, distinct).map_err(fe)
        }
        "sort" => {
            let a = Args::new(call, 1, 1)?;
            let mut keys = Vec::new();
            match a.pos(0).expect("checked") {
                Value::Dict(entries) => {
                    for (k, v) in entries {
                        keys.push((as_str(k, line)?, sort_order(as_str(v, line)?, line)?));
                    }
                }
                Value::List(items) => {
                    for item in items {
                        match item {
                            Value::Str(s) => keys.push((s.as_str(), SortOrder::Asc)),
                            Value::List(pair) if pair.len() == 2 => {
                                keys.push((as_str(&pair[0], line)?, sort_order(as_str(&pair[1], line)?, line)?))
                            }
                            other => return err(line, format!("sort key must be a column or (column, order), found {}", describe(other))),
                        }
                    }
                }
                Value::Str(s) => keys.push((s.as_str(), SortOrder::Asc)),
                other => return err(line, format!("sort(): unexpected {}", describe(other))),
            }
            a.finish()?;
            f.sort(&keys).map_err(fe)
        }
        "head" => {
            let mut a = Args::new(call, 1, 2)?;
            let k = as_int(a.get(0, "k").expect("checked"), line)?;
            let offset = match a.get(1, "offset") {
                Some(v) => as_int(v, line)?,
                None => 0,
            };
            a.finish()?;
            f.head(k, offset).map_err(fe)
        }
        "cache" => {
            Args::new(call, 0, 0)?.finish()?;
            Ok(f.cache())
        }
        other => err(line, format!("unknown frame method `{other}`")),
    }
}

/// Graph names declared in a program, mapped to their IRIs.
pub fn graph_table(program: &Program) -> HashMap<String, Iri> {
    program.graphs.iter().map(|(n, g)| (n.clone(), g.iri().clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuation_forms() {
        let p = Program::parse(
            "graph g = <http://g>\nframe a = g.seed('s', 'p', 'o') \\\n  .select_cols(['s'])\nb = a\n  .filter({'s': ['isURI']})\n",
        )
        .unwrap();
        assert_eq!(p.result_name(), "b");
        assert_eq!(p.result().describe(), "seed.select_cols.filter");
    }

    #[test]
    fn errors_carry_lines() {
        let e = Program::parse("graph g = <http://g>\n\na = g.seed('s', 'p', 'o')\nb = a.expand('zz', [('ex:p', 'o2')])\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = Program::parse("  # nothing\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = Program::parse("a = nope.seed('s','p','o')").unwrap_err();
        assert!(e.message.contains("unknown name"));
    }

    #[test]
    fn count_after_group_by_is_grouped() {
        let p = Program::parse("graph g = <http://g>\na = g.seed('s','p','o').group_by(['s']).count('o', 'n', unique=True)\n").unwrap();
        assert!(p.result().is_grouped());
        let p = Program::parse("graph g = <http://g>\na = g.seed('s','p','o').count('o')\n").unwrap();
        assert_eq!(p.result().column_names(), vec!["count_o"]);
    }
}
