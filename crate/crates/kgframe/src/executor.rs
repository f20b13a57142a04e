//! Runs SELECT queries against a SPARQL endpoint, one page at a time.
//!
//! Each page wraps the query as `SELECT * WHERE { { query } } LIMIT n+1
//! OFFSET k` and asks for one row more than the page size, so the last page
//! is recognised without an extra empty request. The user's own
//! LIMIT/OFFSET stay inside the wrapped query and are never re-applied.

use std::num::NonZeroU64;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use kgframe_core::oracle::ResultTable;
use kgframe_core::Iri;
use thiserror::Error;

use crate::results::{parse_results, ParseError};

pub const ACCEPT: &str = "application/sparql-results+json";

/// Queries shorter than this go out as GET, longer ones as form POST.
pub const GET_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub endpoint: String,
    pub default_graph: Option<Iri>,
    pub page_size: NonZeroU64,
    pub timeout: Duration,
    pub max_retries: u32,
    pub retry_delay: Duration,
}

impl EndpointConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        EndpointConfig {
            endpoint: endpoint.into(),
            default_graph: None,
            page_size: NonZeroU64::new(10_000).expect("non-zero"),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            retry_delay: Duration::from_millis(200),
        }
    }

    pub fn with_page_size(mut self, n: NonZeroU64) -> Self {
        self.page_size = n;
        self
    }

    pub fn with_retries(mut self, max_retries: u32, delay: Duration) -> Self {
        self.max_retries = max_retries;
        self.retry_delay = delay;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_default_graph(mut self, graph: Iri) -> Self {
        self.default_graph = Some(graph);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub method: Method,
    pub url: String,
    pub query: String,
    pub default_graph: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connection(String),
}

/// One HTTP exchange with the SPARQL protocol's `query` and
/// `default-graph-uri` parameters.
pub trait Transport {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        (**self).send(request)
    }
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build();
        UreqTransport { agent: config.into() }
    }
}

impl Transport for UreqTransport {
    fn send(&self, req: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let result = match req.method {
            Method::Get => {
                let mut r = self.agent.get(&req.url).query("query", &req.query).header("Accept", ACCEPT);
                if let Some(g) = &req.default_graph {
                    r = r.query("default-graph-uri", g);
                }
                r.call()
            }
            Method::Post => {
                let mut form = vec![("query", req.query.as_str())];
                if let Some(g) = &req.default_graph {
                    form.push(("default-graph-uri", g.as_str()));
                }
                self.agent.post(&req.url).header("Accept", ACCEPT).send_form(form)
            }
        };
        let mut resp = result.map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
            other => TransportError::Connection(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Connection(other.to_string()),
        })?;
        Ok(HttpResponse { status, body })
    }
}

/// Wraps a transport and counts the requests that pass through it.
pub struct CountingTransport<T> {
    inner: T,
    count: AtomicUsize,
}

impl<T> CountingTransport<T> {
    pub fn new(inner: T) -> Self {
        CountingTransport { inner, count: AtomicUsize::new(0) }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.count.fetch_add(1, Ordering::SeqCst);
        self.inner.send(request)
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("endpoint returned HTTP {status}: {excerpt}")]
    Endpoint { status: u16, excerpt: String },
    #[error("endpoint unreachable after {attempts} attempt(s): {message}")]
    Unreachable { attempts: u32, message: String },
    #[error("endpoint timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl ExecError {
    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExecError::Timeout { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub table: ResultTable,
    pub requests: usize,
    pub retries: usize,
}

pub struct Executor<T> {
    transport: T,
    config: EndpointConfig,
}

impl Executor<UreqTransport> {
    pub fn http(config: EndpointConfig) -> Self {
        let transport = UreqTransport::new(config.timeout);
        Executor { transport, config }
    }
}

impl<T: Transport> Executor<T> {
    pub fn new(transport: T, config: EndpointConfig) -> Self {
        Executor { transport, config }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// Fetches every page of `query` and concatenates them in order.
    pub fn execute(&self, query: &str) -> Result<Execution, ExecError> {
        let page = self.config.page_size.get();
        let mut offset = 0u64;
        let mut out: Option<ResultTable> = None;
        let (mut requests, mut retries) = (0, 0);
        loop {
            let text = paged_query(query, page + 1, offset);
            let (body, r) = self.fetch(&text)?;
            requests += 1;
            retries += r;
            let table = parse_results(&body)?;
            let n = table.len() as u64;
            let table = match &out {
                None => table,
                Some(first) => {
                    let mut a: Vec<_> = first.columns().to_vec();
                    let mut b: Vec<_> = table.columns().to_vec();
                    a.sort();
                    b.sort();
                    if a != b {
                        return Err(ExecError::Protocol(format!(
                            "page at offset {offset} has columns {b:?}, expected {a:?}"
                        )));
                    }
                    table.reorder(first.columns())
                }
            };
            let acc = out.get_or_insert_with(|| ResultTable::empty(table.columns().to_vec()));
            for row in table.into_rows().into_iter().take(page as usize) {
                acc.push(row);
            }
            if n <= page {
                break;
            }
            offset += page;
        }
        let table = out.expect("at least one page");
        Ok(Execution { table, requests, retries })
    }

    /// One request with retries on 5xx, timeouts and connection failures.
    fn fetch(&self, query: &str) -> Result<(String, usize), ExecError> {
        let request = HttpRequest {
            method: if query.len() < GET_LIMIT { Method::Get } else { Method::Post },
            url: self.config.endpoint.clone(),
            query: query.to_string(),
            default_graph: self.config.default_graph.as_ref().map(|g| g.as_str().to_string()),
        };
        let attempts = self.config.max_retries + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.config.retry_delay);
            }
            match self.transport.send(&request) {
                Ok(resp) if resp.status < 400 => return Ok((resp.body, attempt as usize)),
                Ok(resp) => {
                    let err = ExecError::Endpoint { status: resp.status, excerpt: excerpt(&resp.body) };
                    if resp.status < 500 {
                        return Err(err);
                    }
                    last = Some(err);
                }
                Err(TransportError::Timeout) => last = Some(ExecError::Timeout { attempts }),
                Err(TransportError::Connection(message)) => last = Some(ExecError::Unreachable { attempts, message }),
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

fn excerpt(body: &str) -> String {
    let mut s: String = body.chars().take(200).collect();
    if s.len() < body.len() {
        s.push_str("...");
    }
    s
}

/// Byte ranges of the query's leading clauses: the prologue ends where the
/// SELECT keyword starts; dataset clauses are FROM / FROM NAMED before the
/// first `{`.
struct Layout {
    select_start: usize,
    from_clauses: Vec<(usize, usize)>,
}

fn layout(query: &str) -> Option<Layout> {
    let bytes = query.as_bytes();
    let mut i = 0;
    let mut select_start = None;
    let mut from_clauses = Vec::new();
    let word_at = |i: usize, w: &str| {
        query.len() >= i + w.len()
            && query[i..i + w.len()].eq_ignore_ascii_case(w)
            && (i == 0 || !is_word(bytes[i - 1]))
            && bytes.get(i + w.len()).is_none_or(|b| !is_word(*b))
    };
    while i < bytes.len() {
        match bytes[i] {
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'<' => {
                while i < bytes.len() && bytes[i] != b'>' {
                    i += 1;
                }
                i += 1;
            }
            b'{' => break,
            _ if select_start.is_none() && word_at(i, "SELECT") => {
                select_start = Some(i);
                i += 6;
            }
            _ if select_start.is_some() && word_at(i, "FROM") => {
                let start = i;
                i += 4;
                let skip_ws = |mut i: usize| {
                    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    i
                };
                i = skip_ws(i);
                if word_at(i, "NAMED") {
                    i = skip_ws(i + 5);
                }
                if bytes.get(i) == Some(&b'<') {
                    while i < bytes.len() && bytes[i] != b'>' {
                        i += 1;
                    }
                    i += 1;
                } else {
                    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'{' {
                        i += 1;
                    }
                }
                from_clauses.push((start, i));
            }
            _ => i += 1,
        }
    }
    Some(Layout { select_start: select_start?, from_clauses })
}

fn is_word(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// The page request for `query`: dataset clauses move to the outer query
/// since a subquery cannot carry them.
pub fn paged_query(query: &str, limit: u64, offset: u64) -> String {
    let Some(l) = layout(query) else {
        return format!("SELECT * WHERE {{ {{ {query} }} }} LIMIT {limit} OFFSET {offset}");
    };
    let prologue = &query[..l.select_start];
    let mut inner = String::new();
    let mut from = Vec::new();
    let mut pos = l.select_start;
    for (s, e) in &l.from_clauses {
        inner.push_str(&query[pos..*s]);
        from.push(query[*s..*e].trim().to_string());
        pos = *e;
    }
    inner.push_str(&query[pos..]);
    let mut out = String::from(prologue);
    out.push_str("SELECT *");
    for f in &from {
        out.push('\n');
        out.push_str(f);
    }
    out.push_str("\nWHERE {\n{\n");
    out.push_str(inner.trim_end());
    out.push_str(&format!("\n}}\n}}\nLIMIT {limit}\nOFFSET {offset}\n"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_clauses_move_outward() {
        let q = "PREFIX ex: <http://ex/>\nSELECT ?x\nFROM <http://g>\nFROM NAMED <http://h>\nWHERE { ?x ex:p ?y }\nLIMIT 7";
        let p = paged_query(q, 101, 200);
        assert!(p.starts_with("PREFIX ex: <http://ex/>\nSELECT *\nFROM <http://g>\nFROM NAMED <http://h>\nWHERE {\n{\nSELECT ?x\n"));
        assert!(p.contains("LIMIT 7\n}\n}\nLIMIT 101\nOFFSET 200"));
        assert_eq!(p.matches("FROM").count(), 2);
    }

    #[test]
    fn iris_that_look_like_keywords_are_skipped() {
        let q = "PREFIX s: <http://x/SELECT/FROM>\nSELECT * WHERE { ?a ?b ?c }";
        let p = paged_query(q, 11, 0);
        assert!(p.starts_with("PREFIX s: <http://x/SELECT/FROM>\nSELECT *\nWHERE"));
    }

    struct Scripted(std::sync::Mutex<Vec<Result<HttpResponse, TransportError>>>);

    impl Transport for Scripted {
        fn send(&self, _: &HttpRequest) -> Result<HttpResponse, TransportError> {
            self.0.lock().unwrap().remove(0)
        }
    }

    fn ok(body: &str) -> Result<HttpResponse, TransportError> {
        Ok(HttpResponse { status: 200, body: body.into() })
    }

    #[test]
    fn retries_then_gives_up_with_exit_codes() {
        let config = EndpointConfig::new("http://mock").with_retries(1, Duration::ZERO);
        let empty = r#"{"head":{"vars":["x"]},"results":{"bindings":[]}}"#;
        let t = Scripted(std::sync::Mutex::new(vec![Ok(HttpResponse { status: 503, body: "busy".into() }), ok(empty)]));
        let run = Executor::new(&t, config.clone()).execute("SELECT * WHERE { ?x ?y ?z }").unwrap();
        assert_eq!((run.requests, run.retries), (1, 1));

        let t = Scripted(std::sync::Mutex::new(vec![Err(TransportError::Timeout), Err(TransportError::Timeout)]));
        let err = Executor::new(&t, config.clone()).execute("SELECT * WHERE { ?x ?y ?z }").unwrap_err();
        assert_eq!(err.exit_code(), 3);

        let t = Scripted(std::sync::Mutex::new(vec![Ok(HttpResponse { status: 400, body: "bad query".into() })]));
        let err = Executor::new(&t, config).execute("SELECT * WHERE { ?x ?y ?z }").unwrap_err();
        assert!(matches!(err, ExecError::Endpoint { status: 400, .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
