#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use kgframe::results::to_results_json;
use kgframe_core::oracle::{ResultTable, Row};
use kgframe_core::{Term, Var};

pub fn program_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs").join(name)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_program(name: &str) -> String {
    std::fs::read_to_string(program_path(name)).unwrap()
}

/// `n` rows over columns `s` (IRI) and `o` (integer literal, null every
/// seventh row).
pub fn numbered_table(n: usize) -> ResultTable {
    let cols = vec![Var::new("s").unwrap(), Var::new("o").unwrap()];
    let rows: Vec<Row> = (0..n)
        .map(|i| {
            let s = Term::iri(&format!("http://example.org/r{i}")).unwrap();
            let o = (i % 7 != 0).then(|| Term::Literal(kgframe_core::Literal::integer(i as i64)));
            vec![Some(s), o]
        })
        .collect();
    ResultTable::new(cols, rows)
}

#[derive(Debug, Clone)]
pub struct Logged {
    pub method: String,
    pub query: String,
    pub default_graph: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct MockOptions {
    /// 1-based request numbers answered with HTTP 500.
    pub fail_requests: Vec<usize>,
    /// Status for every request, instead of serving rows.
    pub status: Option<u16>,
    pub delay: Duration,
    /// Pages after the first come back with a renamed column.
    pub rename_after_first: bool,
}

struct State {
    table: ResultTable,
    options: MockOptions,
    log: Mutex<Vec<Logged>>,
}

/// A SPARQL endpoint answering every query with slices of one fixed table.
/// The LIMIT/OFFSET clauses in the query text are applied innermost first.
pub struct Mock {
    pub url: String,
    server: Arc<tiny_http::Server>,
    state: Arc<State>,
    handle: Option<JoinHandle<()>>,
}

impl Mock {
    pub fn start(table: ResultTable) -> Mock {
        Mock::with(table, MockOptions::default())
    }

    pub fn with(table: ResultTable, options: MockOptions) -> Mock {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let port = server.server_addr().to_ip().unwrap().port();
        let state = Arc::new(State { table, options, log: Mutex::new(Vec::new()) });
        let (srv, st) = (server.clone(), state.clone());
        let handle = thread::spawn(move || {
            for req in srv.incoming_requests() {
                serve(&st, req);
            }
        });
        Mock { url: format!("http://127.0.0.1:{port}/sparql"), server, state, handle: Some(handle) }
    }

    pub fn requests(&self) -> Vec<Logged> {
        self.state.log.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.state.log.lock().unwrap().len()
    }
}

impl Drop for Mock {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(state: &State, mut req: tiny_http::Request) {
    let (path, query_string) = req.url().split_once('?').map_or((req.url().to_string(), String::new()), |(p, q)| (p.to_string(), q.to_string()));
    let _ = path;
    let mut body = String::new();
    let _ = req.as_reader().read_to_string(&mut body);
    let method = req.method().to_string();
    let params: Vec<(String, String)> = form_urlencoded::parse(query_string.as_bytes())
        .chain(form_urlencoded::parse(body.as_bytes()))
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    let get = |k: &str| params.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone());
    let query = get("query").unwrap_or_default();
    let n = {
        let mut log = state.log.lock().unwrap();
        log.push(Logged { method, query: query.clone(), default_graph: get("default-graph-uri") });
        log.len()
    };
    thread::sleep(state.options.delay);
    let respond = |status: u16, body: String, json: bool| {
        let mut resp = tiny_http::Response::from_string(body).with_status_code(status);
        if json {
            resp = resp.with_header("Content-Type: application/sparql-results+json".parse::<tiny_http::Header>().unwrap());
        }
        let _ = req.respond(resp);
    };
    if state.options.fail_requests.contains(&n) {
        return respond(500, "injected fault".into(), false);
    }
    if let Some(s) = state.options.status {
        return respond(s, "mock error body".into(), false);
    }
    let mut rows: Vec<Row> = state.table.rows().to_vec();
    for (limit, offset) in modifiers(&query) {
        let skip = offset.unwrap_or(0) as usize;
        rows = rows.into_iter().skip(skip).take(limit.map_or(usize::MAX, |l| l as usize)).collect();
    }
    let mut cols = state.table.columns().to_vec();
    if state.options.rename_after_first && n > 1 {
        cols[0] = Var::new("renamed").unwrap();
    }
    let page = ResultTable::new(cols, rows);
    respond(200, to_results_json(&page).to_string(), true);
}

/// `(LIMIT, OFFSET)` per solution-modifier run, in text order.
pub fn modifiers(query: &str) -> Vec<(Option<u64>, Option<u64>)> {
    let toks: Vec<&str> = query.split_whitespace().collect();
    let mut out = Vec::new();
    let mut cur: (Option<u64>, Option<u64>) = (None, None);
    let mut i = 0;
    while i < toks.len() {
        let num = toks.get(i + 1).and_then(|t| t.parse::<u64>().ok());
        match (toks[i].to_ascii_uppercase().as_str(), num) {
            ("LIMIT", Some(n)) => {
                cur.0 = Some(n);
                i += 2;
            }
            ("OFFSET", Some(n)) => {
                cur.1 = Some(n);
                i += 2;
            }
            _ => {
                if cur != (None, None) {
                    out.push(std::mem::take(&mut cur));
                }
                i += 1;
            }
        }
    }
    if cur != (None, None) {
        out.push(cur);
    }
    out
}

/// Whitespace-insensitive token stream. PREFIX declarations and the
/// optional `.` before a non-triple token are dropped.
pub fn tokens(q: &str) -> Vec<String> {
    let mut spaced = String::new();
    let (mut in_iri, mut in_str) = (false, false);
    for c in q.chars() {
        match c {
            '"' if !in_iri => {
                in_str = !in_str;
                spaced.push(c);
            }
            '<' if !in_str && !in_iri => {
                in_iri = true;
                spaced.push(c);
            }
            '>' if in_iri => {
                in_iri = false;
                spaced.push(c);
            }
            '{' | '}' | '(' | ')' | ',' | ';' if !in_str && !in_iri => {
                spaced.push(' ');
                spaced.push(c);
                spaced.push(' ');
            }
            _ => spaced.push(c),
        }
    }
    let raw: Vec<&str> = spaced.split_whitespace().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == "PREFIX" {
            i += 3;
            continue;
        }
        out.push(raw[i]);
        i += 1;
    }
    let mut cleaned = Vec::new();
    for (i, t) in out.iter().enumerate() {
        let next = out.get(i + 1).copied();
        if *t == "." && matches!(next, Some("{" | "}" | "FILTER" | "OPTIONAL") | None) {
            continue;
        }
        cleaned.push(t.to_string());
    }
    cleaned
}
