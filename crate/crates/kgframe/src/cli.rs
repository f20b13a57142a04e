//! Command-line front end. [`run`] takes the argument list and output
//! streams and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::num::NonZeroU64;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use kgframe_core::generate::{generate_with, Options};
use kgframe_core::ntriples::parse_ntriples;
use kgframe_core::oracle::{bag_equal, compare_model, eval_model, solution_to_table_with, Comparison, ResultTable};
use kgframe_core::{emit, generate, naive_generate, Dataset, Frame, GraphStore, Iri, KnowledgeGraph, QueryModel, Term};

use crate::executor::{EndpointConfig, ExecError, Executor};
use crate::export::{write_table, Format};
use crate::program::Program;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ENDPOINT: i32 = 2;
pub const EXIT_TIMEOUT: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const ENDPOINT_ENV: &str = "KGFRAME_ENDPOINT";

/// Graph used for `--local` stores when none is named.
pub const LOCAL_GRAPH: &str = "urn:kgframe:local";

#[derive(Parser, Debug)]
#[command(name = "kgframe", version, about = "Compile dataframe programs over knowledge graphs to SPARQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the SPARQL query for a program.
    Compile {
        program: PathBuf,
        /// One subquery per operator instead of the optimized translation.
        #[arg(long)]
        naive: bool,
    },
    /// Execute a program against a SPARQL endpoint.
    Run {
        program: PathBuf,
        #[command(flatten)]
        endpoint: EndpointArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write the table here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        naive: bool,
    },
    /// Check the compiled query against the reference semantics on local graphs.
    Verify {
        program: PathBuf,
        /// N-Triples file, as `FILE` or `NAME=FILE` where NAME is a declared graph.
        #[arg(long = "graph", value_name = "[NAME=]FILE", required = true)]
        graphs: Vec<String>,
        #[arg(long, hide = true)]
        corrupt_optional: bool,
    },
    /// Compare naive and optimized queries: size, nesting and run time.
    Bench {
        program: PathBuf,
        #[command(flatten)]
        endpoint: OptionalEndpointArgs,
        /// N-Triples files evaluated in memory instead of an endpoint.
        #[arg(long = "local", value_name = "[NAME=]FILE", conflicts_with = "endpoint")]
        local: Vec<String>,
        #[arg(long, default_value_t = 3)]
        repeat: u32,
    },
    /// Class distribution of a graph, most frequent first.
    Explore {
        #[command(flatten)]
        endpoint: OptionalEndpointArgs,
        #[arg(long = "local", value_name = "FILE", conflicts_with = "endpoint")]
        local: Option<PathBuf>,
        /// Graph IRI to explore. Required with an endpoint.
        #[arg(long = "graph-iri")]
        graph_iri: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Tsv)]
        format: Format,
    },
}

#[derive(Args, Debug)]
struct EndpointArgs {
    /// SPARQL endpoint URL.
    #[arg(long, env = ENDPOINT_ENV)]
    endpoint: String,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct OptionalEndpointArgs {
    #[arg(long, env = ENDPOINT_ENV)]
    endpoint: Option<String>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct Tuning {
    #[arg(long, default_value_t = NonZeroU64::new(10_000).unwrap())]
    page_size: NonZeroU64,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long)]
    default_graph_uri: Option<String>,
}

impl Tuning {
    fn config(&self, endpoint: &str) -> Result<EndpointConfig, Failure> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(Failure::usage("--timeout must be a positive number of seconds"));
        }
        let mut c = EndpointConfig::new(endpoint)
            .with_page_size(self.page_size)
            .with_timeout(Duration::from_secs_f64(self.timeout))
            .with_retries(self.retries, Duration::from_millis(200));
        if let Some(g) = &self.default_graph_uri {
            c = c.with_default_graph(Iri::new(g.as_str()).map_err(|e| Failure::usage(e.to_string()))?);
        }
        Ok(c)
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<ExecError> for Failure {
    fn from(e: ExecError) -> Self {
        Failure { code: e.exit_code(), message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Compile { program, naive } => {
            let p = load_program(&program)?;
            let model = compile(p.result(), naive)?;
            out.write_all(emit(&model).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Run { program, endpoint, format, output, naive } => {
            let p = load_program(&program)?;
            let query = emit(&compile(p.result(), naive)?);
            let exec = Executor::http(endpoint.tuning.config(&endpoint.endpoint)?);
            let run = exec.execute(&query)?;
            match output {
                Some(path) => {
                    let mut f = io::BufWriter::new(fs::File::create(&path)?);
                    write_table(&run.table, format, &mut f)?;
                    f.flush()?;
                }
                None => write_table(&run.table, format, &mut *out)?,
            }
            writeln!(err, "{} rows", run.table.len())?;
            Ok(EXIT_OK)
        }
        Command::Verify { program, graphs, corrupt_optional } => {
            let p = load_program(&program)?;
            let data = load_dataset(&p, &graphs, true)?;
            verify(p.result(), &data, corrupt_optional, out)
        }
        Command::Bench { program, endpoint, local, repeat } => {
            let p = load_program(&program)?;
            if repeat == 0 {
                return Err(Failure::usage("--repeat must be at least 1"));
            }
            let target = match (&endpoint.endpoint, local.is_empty()) {
                (_, false) => Target::Local(load_dataset(&p, &local, false)?),
                (Some(url), true) => Target::Remote(Executor::http(endpoint.tuning.config(url)?)),
                (None, true) => return Err(Failure::usage(format!("give --endpoint, {ENDPOINT_ENV} or --local"))),
            };
            bench(p.result(), &target, repeat, out)
        }
        Command::Explore { endpoint, local, graph_iri, format } => {
            let (iri, target) = match (&local, &endpoint.endpoint) {
                (Some(file), _) => {
                    let iri = parse_iri(graph_iri.as_deref().unwrap_or(LOCAL_GRAPH))?;
                    let mut data = Dataset::new();
                    data.insert_graph(load_store(iri.clone(), &[file.as_path()])?);
                    (iri, Target::Local(data))
                }
                (None, Some(url)) => {
                    let iri = graph_iri.as_deref().ok_or_else(|| Failure::usage("--graph-iri is required with an endpoint"))?;
                    (parse_iri(iri)?, Target::Remote(Executor::http(endpoint.tuning.config(url)?)))
                }
                (None, None) => return Err(Failure::usage(format!("give --endpoint, {ENDPOINT_ENV} or --local"))),
            };
            let frame = KnowledgeGraph::new(iri).explore_classes().map_err(|e| Failure::usage(e.to_string()))?;
            let table = sort_by_frequency(target.execute(&frame, &compile(&frame, false)?)?);
            write_table(&table, format, &mut *out)?;
            writeln!(err, "{} rows", table.len())?;
            Ok(EXIT_OK)
        }
    }
}

fn parse_iri(s: &str) -> Result<Iri, Failure> {
    Iri::new(s).map_err(|e| Failure::usage(format!("bad graph IRI `{s}`: {e}")))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Program::parse(&text).map_err(|e| Failure::usage(format!("{}:{}: {}", path.display(), e.line, e.message)))
}

fn compile(frame: &Frame, naive: bool) -> Result<QueryModel, Failure> {
    let model = if naive { naive_generate(frame) } else { generate(frame) };
    model.map_err(|e| Failure::usage(e.to_string()))
}

fn load_store(iri: Iri, files: &[&Path]) -> Result<GraphStore, Failure> {
    let mut store = GraphStore::new(iri);
    for f in files {
        let text = fs::read_to_string(f).map_err(|e| Failure::usage(format!("{}: {e}", f.display())))?;
        let triples = parse_ntriples(&text).map_err(|e| Failure::usage(format!("{}: {e}", f.display())))?;
        store.extend(triples);
    }
    Ok(store)
}

/// Maps `[NAME=]FILE` arguments onto the program's graphs. A bare file
/// goes to the only declared graph. With `require_all`, every declared
/// graph needs at least one file.
fn load_dataset(p: &Program, specs: &[String], require_all: bool) -> Result<Dataset, Failure> {
    let mut files: Vec<(Iri, Vec<PathBuf>)> = p.graphs().iter().map(|(_, g)| (g.iri().clone(), Vec::new())).collect();
    for spec in specs {
        let (name, file) = match spec.split_once('=') {
            Some((n, f)) if !n.is_empty() && !n.contains(['/', '\\']) => (Some(n), f),
            _ => (None, spec.as_str()),
        };
        let idx = match name {
            Some(n) => p
                .graphs()
                .iter()
                .position(|(gn, g)| gn == n || g.iri().as_str() == n)
                .ok_or_else(|| Failure::usage(format!("--graph {spec}: program declares no graph `{n}`")))?,
            None if p.graphs().len() == 1 => 0,
            None => {
                return Err(Failure::usage(format!(
                    "--graph {spec}: program declares {} graphs; use NAME=FILE",
                    p.graphs().len()
                )))
            }
        };
        files[idx].1.push(PathBuf::from(file));
    }
    let mut data = Dataset::new();
    for ((name, _), (iri, paths)) in p.graphs().iter().zip(files) {
        if paths.is_empty() && require_all {
            return Err(Failure::usage(format!("missing graph file for `{name}` <{iri}>")));
        }
        let paths: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
        data.insert_graph(load_store(iri, &paths)?);
    }
    Ok(data)
}

fn verify(frame: &Frame, data: &Dataset, corrupt_optional: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let eval_err = |e: kgframe_core::EvalError| Failure::usage(format!("cannot evaluate locally: {e}"));
    let optimized = generate_with(frame, Options { corrupt_optional }).map_err(|e| Failure::usage(e.to_string()))?;
    let naive = compile(frame, true)?;
    let mut ok = true;
    let mut tables = Vec::new();
    for (label, model) in [("optimized", &optimized), ("naive", &naive)] {
        let c = compare_model(frame, model, data).map_err(eval_err)?;
        ok &= report(out, label, &c)?;
        tables.push(c.actual);
    }
    if bag_equal(&tables[0], &tables[1]) {
        writeln!(out, "naive vs optimized: PASS")?;
    } else {
        ok = false;
        writeln!(out, "naive vs optimized: FAIL ({} vs {} rows)", tables[1].len(), tables[0].len())?;
    }
    writeln!(out, "{}", if ok { "PASS" } else { "FAIL" })?;
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
}

fn report(out: &mut dyn Write, label: &str, c: &Comparison) -> io::Result<bool> {
    if c.holds() {
        writeln!(out, "{label}: PASS ({} rows)", c.expected.len())?;
        return Ok(true);
    }
    writeln!(out, "{label}: FAIL (relational {} rows, query {} rows)", c.expected.len(), c.actual.len())?;
    for p in &c.problems {
        writeln!(out, "  {p}")?;
    }
    if let Some(d) = c.first_difference() {
        let cols: Vec<&str> = c.expected.columns().iter().map(|v| v.as_str()).collect();
        writeln!(out, "  columns ({})", cols.join(", "))?;
        writeln!(out, "  {d}")?;
    }
    Ok(false)
}

enum Target {
    Local(Dataset),
    Remote(Executor<crate::executor::UreqTransport>),
}

impl Target {
    fn execute(&self, frame: &Frame, model: &QueryModel) -> Result<ResultTable, Failure> {
        match self {
            Target::Local(data) => {
                let bag = eval_model(model, data).map_err(|e| Failure::usage(format!("cannot evaluate locally: {e}")))?;
                Ok(solution_to_table_with(&bag, frame.columns()))
            }
            Target::Remote(exec) => Ok(exec.execute(&emit(model))?.table),
        }
    }
}

fn bench(frame: &Frame, target: &Target, repeat: u32, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut means = Vec::new();
    writeln!(out, "variant\tsubquery_count\tbytes\trows\tmean_ms")?;
    for (label, naive) in [("naive", true), ("optimized", false)] {
        let model = compile(frame, naive)?;
        let bytes = emit(&model).len();
        let mut total = Duration::ZERO;
        let mut rows = 0;
        for _ in 0..repeat {
            let start = Instant::now();
            rows = target.execute(frame, &model)?.len();
            total += start.elapsed();
        }
        let mean = total.as_secs_f64() * 1000.0 / repeat as f64;
        means.push(mean);
        writeln!(out, "{label}\t{}\t{bytes}\t{rows}\t{mean:.3}", model.subquery_count())?;
    }
    if means[1] > 0.0 {
        writeln!(out, "ratio naive/optimized: {:.2}", means[0] / means[1])?;
    } else {
        writeln!(out, "ratio naive/optimized: n/a")?;
    }
    Ok(EXIT_OK)
}

/// Descending frequency, ties by class.
fn sort_by_frequency(t: ResultTable) -> ResultTable {
    let (Some(ci), Some(fi)) = (
        t.columns().iter().position(|v| v.as_str() == "class"),
        t.columns().iter().position(|v| v.as_str() == "frequency"),
    ) else {
        return t;
    };
    let freq = |r: &kgframe_core::oracle::Row| r[fi].as_ref().and_then(Term::numeric).map_or(f64::NEG_INFINITY, |n| n.as_f64());
    let columns = t.columns().to_vec();
    let mut rows = t.into_rows();
    rows.sort_by(|a, b| freq(b).total_cmp(&freq(a)).then_with(|| a[ci].cmp(&b[ci])));
    ResultTable::new(columns, rows)
}
