//! RDF terms and triples.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;

use crate::error::TermError;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";

const XSD_INTEGER_TYPES: &[&str] = &[
    "integer",
    "int",
    "long",
    "short",
    "byte",
    "nonNegativeInteger",
    "positiveInteger",
    "nonPositiveInteger",
    "negativeInteger",
    "unsignedLong",
    "unsignedInt",
    "unsignedShort",
    "unsignedByte",
];

/// An absolute IRI, stored without angle brackets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(iri: impl Into<String>) -> Result<Self, TermError> {
        let iri = iri.into();
        if iri.is_empty() {
            return Err(TermError::EmptyIri);
        }
        if iri.chars().any(|c| matches!(c, '<' | '>' | '"' | ' ' | '{' | '}' | '\n')) {
            return Err(TermError::InvalidIri(iri));
        }
        Ok(Iri(iri))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

/// A literal with an optional datatype or language tag (never both).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: Option<Iri>,
    language: Option<String>,
}

impl Literal {
    pub fn simple(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), datatype: None, language: None }
    }

    /// `xsd:string` is folded into the simple form so both spellings compare equal.
    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        let datatype = if datatype.as_str() == XSD_STRING { None } else { Some(datatype) };
        Literal { lexical: lexical.into(), datatype, language: None }
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            language: Some(language.into().to_ascii_lowercase()),
        }
    }

    pub fn integer(value: i64) -> Self {
        Literal::typed(value.to_string(), Iri(XSD_INTEGER.into()))
    }

    pub fn double(value: f64) -> Self {
        Literal::typed(format_double(value), Iri(XSD_DOUBLE.into()))
    }

    pub fn decimal(value: f64) -> Self {
        Literal::typed(format_double(value), Iri(XSD_DECIMAL.into()))
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn numeric(&self) -> Option<Numeric> {
        let dt = self.datatype.as_ref()?.as_str().strip_prefix(XSD)?;
        let lex = self.lexical.trim();
        if XSD_INTEGER_TYPES.contains(&dt) {
            let lex = lex.strip_prefix('+').unwrap_or(lex);
            lex.parse::<i64>().ok().map(Numeric::Integer)
        } else if matches!(dt, "decimal" | "double" | "float") {
            let value = match lex {
                "INF" => f64::INFINITY,
                "-INF" => f64::NEG_INFINITY,
                _ => lex.parse::<f64>().ok()?,
            };
            Some(Numeric::Double(value))
        } else {
            None
        }
    }
}

fn format_double(value: f64) -> String {
    if value.is_nan() {
        "NaN".into()
    } else if value.is_infinite() {
        if value > 0.0 { "INF".into() } else { "-INF".into() }
    } else if value == (value as i64) as f64 && value.abs() < 1e15 {
        alloc::format!("{}.0", value as i64)
    } else {
        alloc::format!("{}", value)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        for c in self.lexical.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\r' => f.write_str("\\r")?,
                '\t' => f.write_str("\\t")?,
                c => fmt::Write::write_char(f, c)?,
            }
        }
        f.write_str("\"")?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")
        } else if let Some(dt) = &self.datatype {
            write!(f, "^^{dt}")
        } else {
            Ok(())
        }
    }
}

/// Numeric value of a literal, kept exact for integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Numeric {
    Integer(i64),
    Double(f64),
}

impl Numeric {
    pub fn as_f64(self) -> f64 {
        match self {
            Numeric::Integer(i) => i as f64,
            Numeric::Double(d) => d,
        }
    }

    pub fn partial_cmp(self, other: Numeric) -> Option<Ordering> {
        match (self, other) {
            (Numeric::Integer(a), Numeric::Integer(b)) => Some(a.cmp(&b)),
            (a, b) => a.as_f64().partial_cmp(&b.as_f64()),
        }
    }

    pub fn to_term(self) -> Term {
        match self {
            Numeric::Integer(i) => Term::Literal(Literal::integer(i)),
            Numeric::Double(d) => Term::Literal(Literal::double(d)),
        }
    }
}

impl fmt::Display for Numeric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Numeric::Integer(i) => write!(f, "{i}"),
            Numeric::Double(d) => f.write_str(&format_double(*d)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
    BlankNode(String),
}

impl Term {
    pub fn iri(iri: &str) -> Result<Self, TermError> {
        Iri::new(iri).map(Term::Iri)
    }

    pub fn literal(lexical: &str) -> Self {
        Term::Literal(Literal::simple(lexical))
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::BlankNode(_))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn numeric(&self) -> Option<Numeric> {
        match self {
            Term::Literal(l) => l.numeric(),
            _ => None,
        }
    }

    /// The `str()` of a term: IRI text or lexical form.
    pub fn str_value(&self) -> &str {
        match self {
            Term::Iri(iri) => iri.as_str(),
            Term::Literal(l) => l.lexical(),
            Term::BlankNode(b) => b,
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Term::BlankNode(_) => 0,
            Term::Iri(_) => 1,
            Term::Literal(_) => 2,
        }
    }

    /// Total order used for ORDER BY, MIN/MAX and sort: blank nodes, then
    /// IRIs, then literals; numeric literals compare by value first.
    pub fn order_cmp(&self, other: &Term) -> Ordering {
        match (self, other) {
            (Term::Literal(a), Term::Literal(b)) => match (a.numeric(), b.numeric()) {
                (Some(x), Some(y)) => x
                    .partial_cmp(y)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| a.cmp(b)),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => a.lexical.cmp(&b.lexical).then_with(|| a.cmp(b)),
            },
            _ => self.kind_rank().cmp(&other.kind_rank()).then_with(|| self.cmp(other)),
        }
    }
}

/// Null-aware ordering: unbound sorts before every term.
pub fn order_cmp_opt(a: Option<&Term>, b: Option<&Term>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.order_cmp(y),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => iri.fmt(f),
            Term::Literal(l) => l.fmt(f),
            Term::BlankNode(b) => write!(f, "_:{b}"),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    subject: Term,
    predicate: Iri,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Iri, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::LiteralSubject);
        }
        Ok(Triple { subject, predicate, object })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Iri {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn predicate_term(&self) -> Term {
        Term::Iri(self.predicate.clone())
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
