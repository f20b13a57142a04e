//! Query model to SPARQL 1.1 text.
//!
//! Output is deterministic: identical models give byte-identical text.
//! Layout is two-space indentation with one pattern per line.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::condition::{Condition, Operand};
use crate::frame::{Aggregation, SortOrder};
use crate::model::{Element, FilterExpr, GraphTriple, GroupPattern, HavingExpr, QueryModel};
use crate::prefix::PrefixMap;
use crate::store::PatternTerm;
use crate::term::{Iri, Literal, Term};
use crate::var::Var;

/// Renders `model` as a SELECT query. PREFIX declarations are emitted only
/// for prefixes the query text actually uses.
pub fn emit(model: &QueryModel) -> String {
    let mut w = Writer { out: String::new(), prefixes: &model.prefixes, named_graphs: model.graphs.len() > 1 };
    w.query(model, 0, true);
    let body = w.out;
    let mut out = String::new();
    for (name, ns) in model.prefixes.iter() {
        if uses_prefix(&body, name) {
            out.push_str(&format!("PREFIX {name}: <{ns}>\n"));
        }
    }
    out.push_str(&body);
    out
}

/// Text of a single filter condition applied to `?var`.
pub fn render_condition(var: &Var, cond: &Condition, prefixes: &PrefixMap) -> String {
    render_on(&var.to_string(), cond, prefixes)
}

fn render_on(target: &str, cond: &Condition, prefixes: &PrefixMap) -> String {
    match cond {
        Condition::Compare { op, operand } => format!("{target} {} {}", op.symbol(), operand_text(operand, prefixes)),
        Condition::IsIri => format!("isIRI({target})"),
        Condition::IsLiteral => format!("isLiteral({target})"),
        Condition::IsBlank => format!("isBlank({target})"),
        Condition::In(items) => {
            let items: Vec<String> = items.iter().map(|o| operand_text(o, prefixes)).collect();
            format!("{target} IN ({})", items.join(", "))
        }
        Condition::Regex(p) => format!("regex(str({target}), {})", quote(p)),
        Condition::Raw(raw) => raw.clone(),
    }
}

fn operand_text(o: &Operand, prefixes: &PrefixMap) -> String {
    match o {
        Operand::Number(n) => n.to_string(),
        Operand::Term(t) => term_text(t, prefixes),
    }
}

/// A term in query syntax, compacted with `prefixes` where possible.
pub fn term_text(t: &Term, prefixes: &PrefixMap) -> String {
    match t {
        Term::Iri(i) => iri_text(i, prefixes),
        Term::Literal(l) => literal_text(l, prefixes),
        Term::BlankNode(b) => format!("_:{b}"),
    }
}

fn iri_text(i: &Iri, prefixes: &PrefixMap) -> String {
    prefixes.compact(i).unwrap_or_else(|| i.to_string())
}

fn literal_text(l: &Literal, prefixes: &PrefixMap) -> String {
    let mut s = quote(l.lexical());
    if let Some(lang) = l.language() {
        s.push('@');
        s.push_str(lang);
    } else if let Some(dt) = l.datatype() {
        s.push_str("^^");
        s.push_str(&iri_text(dt, prefixes));
    }
    s
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn aggregate_text(a: &Aggregation) -> String {
    format!("{}({}{})", a.func.sparql_name(), if a.distinct { "DISTINCT " } else { "" }, a.source)
}

fn conjunction(parts: Vec<String>) -> String {
    if parts.len() == 1 {
        parts.into_iter().next().unwrap_or_default()
    } else {
        parts.iter().map(|p| format!("( {p} )")).collect::<Vec<_>>().join(" && ")
    }
}

fn filter_text(f: &FilterExpr, prefixes: &PrefixMap) -> String {
    conjunction(f.terms.iter().map(|(v, c)| render_condition(v, c, prefixes)).collect())
}

fn having_text(h: &HavingExpr, prefixes: &PrefixMap) -> String {
    conjunction(h.terms.iter().map(|(a, c)| render_on(&aggregate_text(a), c, prefixes)).collect())
}

/// Whether `name:` occurs in `text` as a prefixed-name token, outside IRIs
/// and string literals.
fn uses_prefix(text: &str, name: &str) -> bool {
    let bytes = text.as_bytes();
    let needle = format!("{name}:");
    let mut in_string = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if in_string {
            if c == b'\\' {
                i += 2;
                continue;
            }
            if c == b'"' {
                in_string = false;
            }
            i += 1;
            continue;
        }
        match c {
            b'"' => in_string = true,
            b'<' => {
                if let Some(end) = text[i..].find(|ch: char| ch == '>' || ch.is_whitespace()) {
                    if bytes[i + end] == b'>' {
                        i += end + 1;
                        continue;
                    }
                }
            }
            _ => {
                let boundary = i == 0 || !is_name_byte(bytes[i - 1]);
                if boundary && text[i..].starts_with(&needle) {
                    return true;
                }
            }
        }
        i += 1;
    }
    false
}

fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b':' | b'?' | b'$')
}

struct Writer<'a> {
    out: String,
    prefixes: &'a PrefixMap,
    /// Several source graphs: FROM NAMED plus GRAPH blocks.
    named_graphs: bool,
}

impl Writer<'_> {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn select_clause(&self, m: &QueryModel) -> String {
        let mut s = String::from("SELECT ");
        if m.distinct {
            s.push_str("DISTINCT ");
        }
        let items: Vec<String> = if m.group_by.is_none() && same_set(&m.select, &m.body.scope()) {
            alloc::vec!["*".to_string()]
        } else {
            m.select
                .iter()
                .map(|v| match m.aggregations.iter().find(|a| a.target == *v) {
                    Some(a) if m.group_by.is_some() => format!("({} AS {})", aggregate_text(a), a.target),
                    _ => v.to_string(),
                })
                .collect()
        };
        s.push_str(&items.join(" "));
        s
    }

    fn query(&mut self, m: &QueryModel, indent: usize, top: bool) {
        let select = self.select_clause(m);
        self.line(indent, &select);
        if top {
            for g in &m.graphs {
                let from = if self.named_graphs { format!("FROM NAMED {g}") } else { format!("FROM {g}") };
                self.line(indent, &from);
            }
        }
        self.line(indent, "WHERE {");
        self.group(&m.body, indent + 1);
        self.line(indent, "}");
        if let Some(keys) = &m.group_by {
            if !keys.is_empty() {
                let keys: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
                self.line(indent, &format!("GROUP BY {}", keys.join(" ")));
            }
            if !m.having.is_empty() {
                let hs: Vec<String> =
                    m.having.iter().map(|h| format!("( {} )", having_text(h, self.prefixes))).collect();
                self.line(indent, &format!("HAVING {}", hs.join(" ")));
            }
        }
        if !m.order.is_empty() {
            let keys: Vec<String> = m
                .order
                .iter()
                .map(|(v, o)| match o {
                    SortOrder::Asc => format!("ASC({v})"),
                    SortOrder::Desc => format!("DESC({v})"),
                })
                .collect();
            self.line(indent, &format!("ORDER BY {}", keys.join(" ")));
        }
        if let Some(l) = m.limit {
            self.line(indent, &format!("LIMIT {l}"));
        }
        if let Some(o) = m.offset {
            self.line(indent, &format!("OFFSET {o}"));
        }
    }

    /// Group contents. Within the leading run of mandatory elements, triple
    /// patterns come first, then the group's filters, then subqueries and
    /// unions; everything from the first OPTIONAL on keeps its order.
    fn group(&mut self, g: &GroupPattern, indent: usize) {
        let run_end = g.elements.iter().position(|e| matches!(e, Element::Optional(_))).unwrap_or(g.elements.len());
        let (head, tail) = g.elements.split_at(run_end);
        let triples: Vec<&GraphTriple> = head
            .iter()
            .filter_map(|e| match e {
                Element::Triple(t) => Some(t),
                _ => None,
            })
            .collect();
        self.triples(&triples, indent);
        for f in &g.filters {
            let text = match &f.terms[..] {
                [(v, c @ Condition::Regex(_))] => format!("FILTER {}", render_condition(v, c, self.prefixes)),
                _ => format!("FILTER ( {} )", filter_text(f, self.prefixes)),
            };
            self.line(indent, &text);
        }
        for e in head.iter().filter(|e| matches!(e, Element::Subquery(_))) {
            self.element(e, indent);
        }
        for e in head.iter().filter(|e| matches!(e, Element::Union(_))) {
            self.element(e, indent);
        }
        let mut pending: Vec<&GraphTriple> = Vec::new();
        for e in tail {
            if let Element::Triple(t) = e {
                pending.push(t);
                continue;
            }
            self.triples(&pending, indent);
            pending.clear();
            self.element(e, indent);
        }
        self.triples(&pending, indent);
    }

    fn element(&mut self, e: &Element, indent: usize) {
        match e {
            Element::Triple(t) => self.triples(&[t], indent),
            Element::Subquery(m) => {
                self.line(indent, "{");
                self.query(m, indent + 1, false);
                self.line(indent, "}");
            }
            Element::Optional(g) => {
                self.line(indent, "OPTIONAL {");
                match &g.elements[..] {
                    [Element::Subquery(m)] if g.filters.is_empty() => self.query(m, indent + 1, false),
                    _ => self.group(g, indent + 1),
                }
                self.line(indent, "}");
            }
            Element::Union(bs) => {
                self.line(indent, "{");
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        self.line(indent + 1, "UNION");
                    }
                    self.line(indent + 1, "{");
                    self.query(b, indent + 2, false);
                    self.line(indent + 1, "}");
                }
                self.line(indent, "}");
            }
        }
    }

    fn pos(&self, p: &PatternTerm) -> String {
        match p {
            PatternTerm::Var(v) => v.to_string(),
            PatternTerm::Term(t) => term_text(t, self.prefixes),
        }
    }

    /// Consecutive triples; same-subject neighbours share the subject via
    /// `;`. With several source graphs each same-graph run is wrapped in a
    /// GRAPH block.
    fn triples(&mut self, ts: &[&GraphTriple], indent: usize) {
        if ts.is_empty() {
            return;
        }
        if self.named_graphs {
            let mut start = 0;
            while start < ts.len() {
                let graph = &ts[start].graph;
                let end = ts[start..].iter().position(|t| t.graph != *graph).map_or(ts.len(), |n| start + n);
                self.line(indent, &format!("GRAPH {graph} {{"));
                self.triple_lines(&ts[start..end], indent + 1);
                self.line(indent, "}");
                start = end;
            }
        } else {
            self.triple_lines(ts, indent);
        }
    }

    fn triple_lines(&mut self, ts: &[&GraphTriple], indent: usize) {
        for (i, t) in ts.iter().enumerate() {
            let continues = i > 0 && ts[i - 1].pattern[0] == t.pattern[0];
            let shares_next = ts.get(i + 1).is_some_and(|n| n.pattern[0] == t.pattern[0]);
            let end = if shares_next { " ;" } else { " ." };
            let text = if continues {
                format!("  {} {}{end}", self.pos(&t.pattern[1]), self.pos(&t.pattern[2]))
            } else {
                format!("{} {} {}{end}", self.pos(&t.pattern[0]), self.pos(&t.pattern[1]), self.pos(&t.pattern[2]))
            };
            self.line(indent, &text);
        }
    }
}

fn same_set(a: &[Var], b: &[Var]) -> bool {
    let a: BTreeSet<&Var> = a.iter().collect();
    let b: BTreeSet<&Var> = b.iter().collect();
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::CompareOp;
    use crate::term::Numeric;

    fn v(n: &str) -> Var {
        Var::new(n).unwrap()
    }

    fn prefixes() -> PrefixMap {
        let mut p = PrefixMap::with_defaults();
        p.insert("dbpr", "http://dbpedia.org/resource/");
        p.insert("dblprc", "http://dblp.l3s.de/d2r/resource/conferences/");
        p
    }

    #[test]
    fn conditions() {
        let p = prefixes();
        let us = Term::iri("http://dbpedia.org/resource/United_States").unwrap();
        assert_eq!(
            render_condition(&v("country"), &Condition::compare(CompareOp::Eq, Operand::Term(us)), &p),
            "?country = dbpr:United_States"
        );
        assert_eq!(
            render_condition(&v("actor_country"), &Condition::Regex("USA".into()), &p),
            "regex(str(?actor_country), \"USA\")"
        );
        assert_eq!(render_condition(&v("x"), &Condition::IsLiteral, &p), "isLiteral(?x)");
        assert_eq!(render_condition(&v("obj"), &Condition::IsIri, &p), "isIRI(?obj)");
        let conf = |s: &str| Operand::Term(Term::iri(&format!("http://dblp.l3s.de/d2r/resource/conferences/{s}")).unwrap());
        assert_eq!(
            render_condition(&v("conference"), &Condition::In(alloc::vec![conf("vldb"), conf("sigmod")]), &p),
            "?conference IN (dblprc:vldb, dblprc:sigmod)"
        );
        assert_eq!(
            render_condition(&v("n"), &Condition::compare(CompareOp::Ge, Operand::Number(Numeric::Integer(50))), &p),
            "?n >= 50"
        );
        let lit = Term::Literal(Literal::typed("2005", Iri::new("http://www.w3.org/2001/XMLSchema#gYear").unwrap()));
        assert_eq!(
            render_condition(&v("d"), &Condition::compare(CompareOp::Lt, Operand::Term(lit)), &p),
            "?d < \"2005\"^^xsd:gYear"
        );
    }

    #[test]
    fn prefix_usage_detection() {
        assert!(uses_prefix("?x dbpp:starring ?y", "dbpp"));
        assert!(!uses_prefix("?x <http://dbpp:starring> ?y", "dbpp"));
        assert!(!uses_prefix("regex(str(?x), \"dbpp:x\")", "dbpp"));
        assert!(uses_prefix("year(xsd:dateTime(?date))", "xsd"));
        assert!(!uses_prefix("?x adbpp:y", "dbpp"));
        assert!(uses_prefix("?n < 5 && ?x = dbpp:y", "dbpp"));
    }
}
