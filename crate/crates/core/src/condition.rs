//! Filter conditions: parsing from the compact string form used in frame
//! programs (`">=50"`, `"=dbpr:United_States"`, `"isURI"`, `"In(a, b)"`),
//! and evaluation against a single value.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::FrameError;
use crate::prefix::PrefixMap;
use crate::term::{Iri, Literal, Numeric, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompareOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Ge => ">=",
            CompareOp::Gt => ">",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
            CompareOp::Ge => ord != Ordering::Less,
            CompareOp::Gt => ord == Ordering::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Term(Term),
    Number(Numeric),
}

impl Operand {
    fn numeric(&self) -> Option<Numeric> {
        match self {
            Operand::Number(n) => Some(*n),
            Operand::Term(t) => t.numeric(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Compare { op: CompareOp, operand: Operand },
    IsIri,
    IsLiteral,
    IsBlank,
    In(Vec<Operand>),
    /// `regex(str(?col), pattern)`.
    Regex(String),
    /// Inserted verbatim into the query text; not evaluable by the oracle.
    Raw(String),
}

impl Condition {
    pub fn compare(op: CompareOp, operand: Operand) -> Self {
        Condition::Compare { op, operand }
    }

    /// Parses the compact condition syntax. Prefixed names are expanded
    /// immediately so unknown prefixes fail at record time.
    pub fn parse(text: &str, prefixes: &PrefixMap) -> Result<Self, FrameError> {
        let s = text.trim();
        let invalid = || FrameError::InvalidCondition(text.to_string());
        for (sym, op) in [
            (">=", CompareOp::Ge),
            ("<=", CompareOp::Le),
            ("!=", CompareOp::Ne),
            ("=", CompareOp::Eq),
            (">", CompareOp::Gt),
            ("<", CompareOp::Lt),
        ] {
            if let Some(rest) = s.strip_prefix(sym) {
                let operand = parse_operand(rest.trim(), prefixes).ok_or_else(invalid)?;
                return Ok(Condition::Compare { op, operand });
            }
        }
        match s {
            "isURI" | "isIRI" | "isUri" | "isIri" => return Ok(Condition::IsIri),
            "isLiteral" => return Ok(Condition::IsLiteral),
            "isBlank" => return Ok(Condition::IsBlank),
            _ => {}
        }
        if let Some(p) = s.strip_prefix("regex:") {
            if p.is_empty() || regex_automata::meta::Regex::new(p).is_err() {
                return Err(invalid());
            }
            return Ok(Condition::Regex(p.to_string()));
        }
        if let Some(raw) = s.strip_prefix("raw:") {
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(invalid());
            }
            return Ok(Condition::Raw(raw.to_string()));
        }
        let lower = s.to_ascii_lowercase();
        if lower.starts_with("in(") && s.ends_with(')') {
            let inner = &s[3..s.len() - 1];
            let items = split_top_level(inner)
                .into_iter()
                .map(|item| parse_operand(item.trim(), prefixes).ok_or_else(invalid))
                .collect::<Result<Vec<_>, _>>()?;
            if items.is_empty() {
                return Err(invalid());
            }
            return Ok(Condition::In(items));
        }
        Err(invalid())
    }

    /// Evaluates the condition on a (possibly unbound) value. Unbound never
    /// satisfies a condition, and neither do type errors.
    pub fn eval(&self, value: Option<&Term>) -> Result<bool, Unevaluable> {
        let Some(v) = value else {
            return match self {
                Condition::Raw(r) => Err(Unevaluable(r.clone())),
                _ => Ok(false),
            };
        };
        Ok(match self {
            Condition::Compare { op, operand } => compare(v, operand).is_some_and(|o| op.holds(o))
                || (*op == CompareOp::Ne && compare(v, operand).is_none() && ne_by_identity(v, operand)),
            Condition::IsIri => v.is_iri(),
            Condition::IsLiteral => v.is_literal(),
            Condition::IsBlank => v.is_blank(),
            Condition::In(items) => items.iter().any(|o| compare(v, o) == Some(Ordering::Equal)),
            Condition::Regex(p) => match regex_automata::meta::Regex::new(p) {
                Ok(re) => !v.is_blank() && re.is_match(v.str_value()),
                Err(_) => false,
            },
            Condition::Raw(r) => return Err(Unevaluable(r.clone())),
        })
    }
}

/// A condition the reference evaluator cannot interpret (raw text).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unevaluable(pub String);

/// Value comparison: numerics by value, IRIs/blank nodes by identity
/// (equality only), other literals lexically.
fn compare(v: &Term, operand: &Operand) -> Option<Ordering> {
    if let (Some(a), Some(b)) = (v.numeric(), operand.numeric()) {
        return a.partial_cmp(b);
    }
    let Operand::Term(t) = operand else {
        return None;
    };
    match (v, t) {
        (Term::Literal(a), Term::Literal(b)) => {
            if a.numeric().is_some() || b.numeric().is_some() {
                None
            } else if a.language() == b.language() && a.datatype() == b.datatype() {
                Some(a.lexical().cmp(b.lexical()))
            } else if a == b {
                Some(Ordering::Equal)
            } else {
                None
            }
        }
        (a, b) if a == b => Some(Ordering::Equal),
        _ => None,
    }
}

/// `!=` between terms of different kinds (IRI vs literal, ...) is true.
fn ne_by_identity(v: &Term, operand: &Operand) -> bool {
    match operand {
        Operand::Term(t) => {
            core::mem::discriminant(v) != core::mem::discriminant(t)
                || (!v.is_literal() && v != t)
        }
        Operand::Number(_) => false,
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '(' | '<' if !in_str => depth += 1,
            ')' | '>' if !in_str => depth -= 1,
            ',' if !in_str && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(&s[start..]);
    }
    out
}

pub(crate) fn parse_operand(s: &str, prefixes: &PrefixMap) -> Option<Operand> {
    if s.is_empty() {
        return None;
    }
    if let Some(n) = parse_number(s) {
        return Some(Operand::Number(n));
    }
    if let Some(body) = s.strip_prefix('<') {
        let iri = body.strip_suffix('>')?;
        return Iri::new(iri).ok().map(|i| Operand::Term(Term::Iri(i)));
    }
    if s.starts_with('"') {
        return parse_quoted_literal(s, prefixes).map(Operand::Term);
    }
    if s.contains(':') {
        return prefixes.expand(s).ok().map(|i| Operand::Term(Term::Iri(i)));
    }
    None
}

pub(crate) fn parse_number(s: &str) -> Option<Numeric> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return None;
    }
    if !body.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    if body.contains('.') {
        s.parse::<f64>().ok().map(Numeric::Double)
    } else {
        s.parse::<i64>().ok().map(Numeric::Integer)
    }
}

pub(crate) fn parse_quoted_literal(s: &str, prefixes: &PrefixMap) -> Option<Term> {
    let end = s[1..].find('"')? + 1;
    let lexical = &s[1..end];
    let rest = &s[end + 1..];
    if rest.is_empty() {
        Some(Term::Literal(Literal::simple(lexical)))
    } else if let Some(lang) = rest.strip_prefix('@') {
        Some(Term::Literal(Literal::lang(lexical, lang)))
    } else if let Some(dt) = rest.strip_prefix("^^") {
        let iri = if let Some(b) = dt.strip_prefix('<') {
            Iri::new(b.strip_suffix('>')?).ok()?
        } else {
            prefixes.expand(dt).ok()?
        };
        Some(Term::Literal(Literal::typed(lexical, iri)))
    } else {
        None
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefixes() -> PrefixMap {
        let mut p = PrefixMap::with_defaults();
        p.insert("dbpr", "http://dbpedia.org/resource/");
        p
    }

    fn num(i: i64) -> Term {
        Term::Literal(Literal::integer(i))
    }

    #[test]
    fn parse_forms() {
        let p = prefixes();
        assert_eq!(
            Condition::parse(">=50", &p).unwrap(),
            Condition::compare(CompareOp::Ge, Operand::Number(Numeric::Integer(50)))
        );
        assert_eq!(
            Condition::parse("=dbpr:United_States", &p).unwrap(),
            Condition::compare(
                CompareOp::Eq,
                Operand::Term(Term::iri("http://dbpedia.org/resource/United_States").unwrap())
            )
        );
        assert_eq!(Condition::parse("isURI", &p).unwrap(), Condition::IsIri);
        assert_eq!(
            Condition::parse("In(dbpr:a, dbpr:b)", &p).unwrap(),
            Condition::In(alloc::vec![
                Operand::Term(Term::iri("http://dbpedia.org/resource/a").unwrap()),
                Operand::Term(Term::iri("http://dbpedia.org/resource/b").unwrap()),
            ])
        );
        assert_eq!(Condition::parse("regex:USA", &p).unwrap(), Condition::Regex("USA".into()));
        assert_eq!(
            Condition::parse("raw:year(?d) >= 2005", &p).unwrap(),
            Condition::Raw("year(?d) >= 2005".into())
        );
        assert_eq!(
            Condition::parse("=\"x\"@en", &p).unwrap(),
            Condition::compare(CompareOp::Eq, Operand::Term(Term::Literal(Literal::lang("x", "en"))))
        );
    }

    #[test]
    fn malformed_conditions_fail_fast() {
        let p = prefixes();
        for bad in ["", ">=", "=nope:x", "wat", "In()", "regex:(", "raw:"] {
            assert!(Condition::parse(bad, &p).is_err(), "{bad}");
        }
    }

    #[test]
    fn numeric_vs_lexical() {
        let p = prefixes();
        let ge = Condition::parse(">=50", &p).unwrap();
        assert_eq!(ge.eval(Some(&num(50))), Ok(true));
        assert_eq!(ge.eval(Some(&num(9))), Ok(false));
        assert_eq!(ge.eval(Some(&Term::literal("60"))), Ok(false));
        assert_eq!(ge.eval(None), Ok(false));
        let lt = Condition::parse("<\"b\"", &p).unwrap();
        assert_eq!(lt.eval(Some(&Term::literal("a"))), Ok(true));
        assert_eq!(lt.eval(Some(&Term::literal("c"))), Ok(false));
    }

    #[test]
    fn iri_equality() {
        let p = prefixes();
        let us = Term::iri("http://dbpedia.org/resource/United_States").unwrap();
        let eq = Condition::parse("=dbpr:United_States", &p).unwrap();
        let ne = Condition::parse("!=dbpr:United_States", &p).unwrap();
        assert_eq!(eq.eval(Some(&us)), Ok(true));
        assert_eq!(ne.eval(Some(&us)), Ok(false));
        let other = Term::iri("http://dbpedia.org/resource/France").unwrap();
        assert_eq!(eq.eval(Some(&other)), Ok(false));
        assert_eq!(ne.eval(Some(&other)), Ok(true));
        assert_eq!(ne.eval(Some(&Term::literal("x"))), Ok(true));
        assert_eq!(
            Condition::parse("<dbpr:United_States", &p).unwrap().eval(Some(&other)),
            Ok(false)
        );
    }

    #[test]
    fn functions() {
        let iri = Term::iri("http://x/USA").unwrap();
        assert_eq!(Condition::IsIri.eval(Some(&iri)), Ok(true));
        assert_eq!(Condition::IsLiteral.eval(Some(&iri)), Ok(false));
        assert_eq!(Condition::Regex("USA".into()).eval(Some(&iri)), Ok(true));
        assert_eq!(Condition::Regex("^USA".into()).eval(Some(&iri)), Ok(false));
        assert!(Condition::Raw("x".into()).eval(Some(&iri)).is_err());
    }
}
