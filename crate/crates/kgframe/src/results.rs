//! SPARQL 1.1 Query Results JSON Format.

use kgframe_core::oracle::{ResultTable, Row};
use kgframe_core::{Iri, Literal, Term, Var};
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("malformed results document at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn at(offset: usize, message: impl Into<String>) -> Self {
        ParseError { offset, message: message.into() }
    }
}

/// Byte offset of a 1-based line/column position.
fn offset_of(body: &str, line: usize, column: usize) -> usize {
    let start: usize = body.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(body.len())
}

/// Decodes a results document into a table. Unbound variables become null.
pub fn parse_results(body: &str) -> Result<ResultTable, ParseError> {
    let doc: Value = serde_json::from_str(body).map_err(|e| ParseError::at(offset_of(body, e.line(), e.column()), e.to_string()))?;
    let vars = doc
        .pointer("/head/vars")
        .and_then(Value::as_array)
        .ok_or_else(|| ParseError::at(0, "missing head.vars"))?;
    let mut columns = Vec::with_capacity(vars.len());
    for v in vars {
        let name = v.as_str().ok_or_else(|| ParseError::at(0, "head.vars entries must be strings"))?;
        columns.push(Var::new(name).map_err(|e| ParseError::at(0, e.to_string()))?);
    }
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| ParseError::at(0, "missing results.bindings"))?;
    let mut table = ResultTable::empty(columns.clone());
    for (i, b) in bindings.iter().enumerate() {
        let obj = b.as_object().ok_or_else(|| ParseError::at(0, format!("binding {i} is not an object")))?;
        let mut row: Row = Vec::with_capacity(columns.len());
        for c in &columns {
            row.push(match obj.get(c.as_str()) {
                None => None,
                Some(v) => Some(decode_term(v).map_err(|m| ParseError::at(0, format!("binding {i}, ?{c}: {m}", c = c.as_str())))?),
            });
        }
        table.push(row);
    }
    Ok(table)
}

fn decode_term(v: &Value) -> Result<Term, String> {
    let kind = v.get("type").and_then(Value::as_str).ok_or("missing type")?;
    let value = v.get("value").and_then(Value::as_str).ok_or("missing value")?;
    match kind {
        "uri" => Ok(Term::Iri(Iri::new(value).map_err(|e| e.to_string())?)),
        "bnode" => Ok(Term::BlankNode(value.to_string())),
        "literal" | "typed-literal" => {
            if let Some(lang) = v.get("xml:lang").and_then(Value::as_str) {
                Ok(Term::Literal(Literal::lang(value, lang)))
            } else if let Some(dt) = v.get("datatype").and_then(Value::as_str) {
                Ok(Term::Literal(Literal::typed(value, Iri::new(dt).map_err(|e| e.to_string())?)))
            } else {
                Ok(Term::Literal(Literal::simple(value)))
            }
        }
        other => Err(format!("unknown term type `{other}`")),
    }
}

fn encode_term(t: &Term) -> Value {
    match t {
        Term::Iri(i) => json!({"type": "uri", "value": i.as_str()}),
        Term::BlankNode(b) => json!({"type": "bnode", "value": b}),
        Term::Literal(l) => {
            let mut m = Map::new();
            m.insert("type".into(), "literal".into());
            m.insert("value".into(), l.lexical().into());
            if let Some(lang) = l.language() {
                m.insert("xml:lang".into(), lang.into());
            } else if let Some(dt) = l.datatype() {
                m.insert("datatype".into(), dt.as_str().into());
            }
            Value::Object(m)
        }
    }
}

/// Encodes a table as a results document; nulls are omitted from bindings.
pub fn to_results_json(table: &ResultTable) -> Value {
    let vars: Vec<&str> = table.columns().iter().map(Var::as_str).collect();
    let bindings: Vec<Value> = table
        .rows()
        .iter()
        .map(|row| {
            let mut m = Map::new();
            for (c, v) in table.columns().iter().zip(row) {
                if let Some(t) = v {
                    m.insert(c.as_str().to_string(), encode_term(t));
                }
            }
            Value::Object(m)
        })
        .collect();
    json!({"head": {"vars": vars}, "results": {"bindings": bindings}})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_results() {
        let t = parse_results(r#"{"head":{"vars":["x"]},"results":{"bindings":[]}}"#).unwrap();
        assert_eq!(t.columns().len(), 1);
        assert!(t.is_empty());
    }

    #[test]
    fn term_kinds() {
        let body = r#"{"head":{"vars":["a","b","c","d"]},"results":{"bindings":[
            {"a":{"type":"uri","value":"http://x"},
             "b":{"type":"literal","value":"5","datatype":"http://www.w3.org/2001/XMLSchema#integer"},
             "c":{"type":"literal","value":"hi","xml:lang":"en"}}]}}"#;
        let t = parse_results(body).unwrap();
        let row = &t.rows()[0];
        assert!(row[0].as_ref().unwrap().is_iri());
        assert_eq!(row[1].as_ref().unwrap().numeric().map(|n| n.as_f64()), Some(5.0));
        assert_eq!(row[2], Some(Term::Literal(Literal::lang("hi", "en"))));
        assert_eq!(row[3], None);
    }

    #[test]
    fn syntax_errors_report_offsets() {
        let err = parse_results("{\"head\": {\"vars\": [}").unwrap_err();
        assert_eq!(err.offset, 19);
        assert!(parse_results(r#"{"results":{"bindings":[]}}"#).is_err());
        assert!(parse_results(r#"{"head":{"vars":["x"]},"results":{"bindings":[{"x":{"type":"weird","value":"1"}}]}}"#).is_err());
    }
}
