//! Table serialization: CSV, TSV and results JSON.

use std::io::{self, Write};

use kgframe_core::oracle::ResultTable;
use kgframe_core::Term;

use crate::results::to_results_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
    Json,
}

/// Plain value of a term for CSV: IRIs and literals without syntax.
fn plain(t: &Term) -> String {
    match t {
        Term::Iri(i) => i.as_str().to_string(),
        Term::Literal(l) => l.lexical().to_string(),
        Term::BlankNode(b) => format!("_:{b}"),
    }
}

pub fn write_table<W: Write>(table: &ResultTable, format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(table, out),
        Format::Tsv => write_tsv(table, out),
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &to_results_json(table))?;
            writeln!(out)
        }
    }
}

/// RFC 4180 CSV with a header row; nulls are empty fields.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(table.columns().iter().map(|c| c.as_str()))?;
    for row in table.rows() {
        w.write_record(row.iter().map(|v| v.as_ref().map(plain).unwrap_or_default()))?;
    }
    w.flush()
}

/// SPARQL TSV: `?var` headers and terms in N-Triples syntax.
pub fn write_tsv<W: Write>(table: &ResultTable, mut out: W) -> io::Result<()> {
    let header: Vec<String> = table.columns().iter().map(|c| c.to_string()).collect();
    writeln!(out, "{}", header.join("\t"))?;
    for row in table.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.as_ref().map(|t| t.to_string()).unwrap_or_default()).collect();
        writeln!(out, "{}", cells.join("\t"))?;
    }
    Ok(())
}
