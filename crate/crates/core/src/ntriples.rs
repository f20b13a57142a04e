//! N-Triples reading and writing.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::NtParseError;
use crate::term::{Iri, Literal, Term, Triple};

/// Parses N-Triples text. Comment and blank lines are skipped; the first
/// malformed line aborts parsing.
pub fn parse_ntriples(input: &str) -> Result<Vec<Triple>, NtParseError> {
    let mut out = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_line(line, line_no)?);
    }
    Ok(out)
}

/// Same as [`parse_ntriples`] but over raw bytes, rejecting invalid UTF-8.
pub fn parse_ntriples_bytes(input: &[u8]) -> Result<Vec<Triple>, NtParseError> {
    match core::str::from_utf8(input) {
        Ok(s) => parse_ntriples(s),
        Err(e) => {
            let line = input[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count() + 1;
            Err(NtParseError { line, token: String::new(), message: "invalid UTF-8".into() })
        }
    }
}

pub fn serialize_ntriples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut out = String::new();
    for t in triples {
        let _ = writeln!(out, "{t}");
    }
    out
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn error(&self, message: &str) -> NtParseError {
        let token: String = self.rest().split_whitespace().next().unwrap_or("<end of line>").into();
        NtParseError { line: self.line, token, message: message.into() }
    }

    fn iri(&mut self) -> Result<Iri, NtParseError> {
        let rest = self.rest();
        debug_assert!(rest.starts_with('<'));
        let end = rest.find('>').ok_or_else(|| self.error("unterminated IRI"))?;
        let raw = &rest[1..end];
        let text = unescape(raw, false).map_err(|m| self.error(m))?;
        let iri = Iri::new(text).map_err(|e| self.error(&e.to_string()))?;
        self.pos += end + 1;
        Ok(iri)
    }

    fn blank(&mut self) -> Result<Term, NtParseError> {
        let rest = &self.rest()[2..];
        let len = rest
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.')))
            .unwrap_or(rest.len());
        // A trailing '.' belongs to the statement terminator.
        let label = rest[..len].trim_end_matches('.');
        if label.is_empty() {
            return Err(self.error("empty blank node label"));
        }
        self.pos += 2 + label.len();
        Ok(Term::BlankNode(label.into()))
    }

    fn literal(&mut self) -> Result<Term, NtParseError> {
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut i = 1;
        let mut escaped = false;
        while i < bytes.len() {
            match bytes[i] {
                b'\\' if !escaped => escaped = true,
                b'"' if !escaped => break,
                _ => escaped = false,
            }
            i += 1;
        }
        if i >= bytes.len() {
            return Err(self.error("unterminated literal"));
        }
        let lexical = unescape(&rest[1..i], true).map_err(|m| self.error(m))?;
        self.pos += i + 1;
        let rest = self.rest();
        if let Some(tag) = rest.strip_prefix('@') {
            let len = tag
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(tag.len());
            if len == 0 {
                return Err(self.error("empty language tag"));
            }
            self.pos += 1 + len;
            Ok(Term::Literal(Literal::lang(lexical, &tag[..len])))
        } else if rest.starts_with("^^") {
            self.pos += 2;
            if !self.rest().starts_with('<') {
                return Err(self.error("expected datatype IRI"));
            }
            let dt = self.iri()?;
            Ok(Term::Literal(Literal::typed(lexical, dt)))
        } else {
            Ok(Term::Literal(Literal::simple(lexical)))
        }
    }

    fn term(&mut self) -> Result<Term, NtParseError> {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with('<') {
            self.iri().map(Term::Iri)
        } else if rest.starts_with("_:") {
            self.blank()
        } else if rest.starts_with('"') {
            self.literal()
        } else {
            Err(self.error("expected a term"))
        }
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Triple, NtParseError> {
    let mut c = Cursor { src: line, pos: 0, line: line_no };
    let subject = c.term()?;
    if subject.is_literal() {
        return Err(NtParseError {
            line: line_no,
            token: subject.to_string(),
            message: "literal in subject position".into(),
        });
    }
    c.skip_ws();
    let predicate = match c.term()? {
        Term::Iri(iri) => iri,
        other => {
            return Err(NtParseError {
                line: line_no,
                token: other.to_string(),
                message: "predicate must be an IRI".into(),
            })
        }
    };
    let object = c.term()?;
    c.skip_ws();
    if !c.rest().starts_with('.') {
        return Err(c.error("expected `.`"));
    }
    c.pos += 1;
    c.skip_ws();
    let rest = c.rest();
    if !rest.is_empty() && !rest.starts_with('#') {
        return Err(c.error("trailing content after `.`"));
    }
    Triple::new(subject, predicate, object).map_err(|e| NtParseError {
        line: line_no,
        token: String::new(),
        message: e.to_string(),
    })
}

fn unescape(raw: &str, literal: bool) -> Result<String, &'static str> {
    if !raw.contains('\\') {
        return Ok(raw.into());
    }
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('u') => out.push(hex_char(&mut chars, 4)?),
            Some('U') => out.push(hex_char(&mut chars, 8)?),
            Some(e) if literal => out.push(match e {
                't' => '\t',
                'b' => '\u{8}',
                'n' => '\n',
                'r' => '\r',
                'f' => '\u{c}',
                '"' => '"',
                '\'' => '\'',
                '\\' => '\\',
                _ => return Err("invalid escape sequence"),
            }),
            _ => return Err("invalid escape sequence"),
        }
    }
    Ok(out)
}

fn hex_char(chars: &mut core::str::Chars<'_>, n: usize) -> Result<char, &'static str> {
    let mut v = 0u32;
    for _ in 0..n {
        let d = chars.next().and_then(|c| c.to_digit(16)).ok_or("invalid unicode escape")?;
        v = v * 16 + d;
    }
    char::from_u32(v).ok_or("invalid code point")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    #[test]
    fn single_line() {
        let t = parse_ntriples("<http://a> <http://p> \"x\" .").unwrap();
        assert_eq!(
            t,
            [Triple::new(
                Term::iri("http://a").unwrap(),
                Iri::new("http://p").unwrap(),
                Term::literal("x")
            )
            .unwrap()]
        );
    }

    #[test]
    fn empty_input() {
        assert!(parse_ntriples("").unwrap().is_empty());
        assert!(parse_ntriples("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn malformed_line_reports_position() {
        let mut text = String::new();
        for i in 1..=10 {
            if i == 7 {
                text.push_str("<http://s7> \"bad predicate\" <http://o> .\n");
            } else {
                let _ = writeln!(text, "<http://s{i}> <http://p> <http://o{i}> .");
            }
        }
        let err = parse_ntriples(&text).unwrap_err();
        assert_eq!(err.line, 7);
        assert!(err.token.contains("bad"), "{err}");
    }

    #[test]
    fn escapes_and_tags() {
        let t = parse_ntriples(
            "_:b1 <http://p> \"a\\tb\\u00e9\"@EN .\n<http://s> <http://p> \"5\"^^<http://www.w3.org/2001/XMLSchema#integer> .",
        )
        .unwrap();
        assert_eq!(t[0].subject(), &Term::BlankNode("b1".into()));
        assert_eq!(t[0].object(), &Term::Literal(Literal::lang("a\tb\u{e9}", "en")));
        assert_eq!(t[1].object().numeric(), Some(crate::term::Numeric::Integer(5)));
    }

    #[test]
    fn missing_dot() {
        let err = parse_ntriples("<http://a> <http://p> <http://o>").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn blank_node_before_dot() {
        let t = parse_ntriples("<http://a> <http://p> _:x.").unwrap();
        assert_eq!(t[0].object(), &Term::BlankNode("x".into()));
    }

    #[test]
    fn roundtrip_text() {
        let src = "<http://a> <http://p> \"q\\\"uote\\n\" .\n<http://a> <http://p> _:z .\n";
        let t = parse_ntriples(src).unwrap();
        assert_eq!(serialize_ntriples(&t), src);
        assert_eq!(format!("{}", t[1]), "<http://a> <http://p> _:z .");
    }
}
