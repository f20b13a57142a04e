//! In-memory triple store for named graphs.
//!
//! Each graph keeps the triples once (set semantics) and three
//! single-position indexes (subject, predicate, object). Stores are loaded
//! once and then only read.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::solution::{Mapping, SolutionBag};
use crate::term::{Iri, Term, Triple};
use crate::var::Var;

/// One position of a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Term(Term),
    Var(Var),
}

impl PatternTerm {
    pub fn as_var(&self) -> Option<&Var> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(_) => None,
        }
    }
}

impl From<Var> for PatternTerm {
    fn from(v: Var) -> Self {
        PatternTerm::Var(v)
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

pub type TriplePattern = [PatternTerm; 3];

#[derive(Debug, Clone)]
pub struct GraphStore {
    name: Iri,
    triples: Vec<Triple>,
    present: BTreeSet<Triple>,
    by_subject: BTreeMap<Term, Vec<usize>>,
    by_predicate: BTreeMap<Term, Vec<usize>>,
    by_object: BTreeMap<Term, Vec<usize>>,
}

impl GraphStore {
    pub fn new(name: Iri) -> Self {
        GraphStore {
            name,
            triples: Vec::new(),
            present: BTreeSet::new(),
            by_subject: BTreeMap::new(),
            by_predicate: BTreeMap::new(),
            by_object: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &Iri {
        &self.name
    }

    /// Inserts `t`; returns false when it was already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        if self.present.contains(&t) {
            return false;
        }
        let idx = self.triples.len();
        self.by_subject.entry(t.subject().clone()).or_default().push(idx);
        self.by_predicate.entry(t.predicate_term()).or_default().push(idx);
        self.by_object.entry(t.object().clone()).or_default().push(idx);
        self.present.insert(t.clone());
        self.triples.push(t);
        true
    }

    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) {
        for t in triples {
            self.insert(t);
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.present.contains(t)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Triples whose bound positions equal the given terms, via the most
    /// selective index.
    pub fn lookup(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<&Triple> {
        let mut candidates: Option<&[usize]> = None;
        for (key, index) in [(s, &self.by_subject), (p, &self.by_predicate), (o, &self.by_object)] {
            if let Some(key) = key {
                let hits = index.get(key).map(Vec::as_slice).unwrap_or(&[]);
                if candidates.is_none_or(|c| hits.len() < c.len()) {
                    candidates = Some(hits);
                }
            }
        }
        let matches = |t: &Triple| {
            s.is_none_or(|s| t.subject() == s)
                && p.is_none_or(|p| matches!(p, Term::Iri(i) if i == t.predicate()))
                && o.is_none_or(|o| t.object() == o)
        };
        match candidates {
            Some(idx) => idx.iter().map(|i| &self.triples[*i]).filter(|t| matches(t)).collect(),
            None => self.triples.iter().collect(),
        }
    }

    /// Evaluates a triple pattern: one mapping per matching triple, each
    /// with multiplicity 1. Repeated variables must bind equal terms.
    pub fn match_triples(&self, pattern: &TriplePattern) -> SolutionBag {
        let bound = |i: usize| pattern[i].as_term();
        let mut bag = SolutionBag::new();
        for t in self.lookup(bound(0), bound(1), bound(2)) {
            if let Some(m) = bind(pattern, t) {
                bag.add(m, 1);
            }
        }
        bag
    }
}

/// Matches one triple against a pattern, returning the binding if any.
pub fn bind(pattern: &TriplePattern, t: &Triple) -> Option<Mapping> {
    let pred = t.predicate_term();
    let values = [t.subject(), &pred, t.object()];
    let mut m = Mapping::new();
    for (pos, value) in pattern.iter().zip(values) {
        match pos {
            PatternTerm::Term(term) => {
                if term != value {
                    return None;
                }
            }
            PatternTerm::Var(v) => match m.get(v) {
                Some(prev) if prev != value => return None,
                Some(_) => {}
                None => m.insert(v.clone(), value.clone()),
            },
        }
    }
    Some(m)
}

/// The named graphs available to evaluation.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    graphs: BTreeMap<Iri, GraphStore>,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset::default()
    }

    pub fn insert_graph(&mut self, store: GraphStore) {
        self.graphs.insert(store.name().clone(), store);
    }

    pub fn graph(&self, name: &Iri) -> Option<&GraphStore> {
        self.graphs.get(name)
    }

    pub fn graph_mut(&mut self, name: &Iri) -> &mut GraphStore {
        self.graphs.entry(name.clone()).or_insert_with(|| GraphStore::new(name.clone()))
    }

    pub fn graphs(&self) -> impl Iterator<Item = &GraphStore> {
        self.graphs.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Term {
        Term::iri(s).unwrap()
    }

    fn t(s: &str, p: &str, o: &str) -> Triple {
        Triple::new(iri(s), Iri::new(p).unwrap(), iri(o)).unwrap()
    }

    fn var(n: &str) -> PatternTerm {
        PatternTerm::Var(Var::new(n).unwrap())
    }

    fn store() -> GraphStore {
        let mut g = GraphStore::new(Iri::new("http://g").unwrap());
        g.insert(t("http://a", "http://p", "http://b"));
        g.insert(t("http://b", "http://p", "http://c"));
        g.insert(t("http://a", "http://q", "http://a"));
        g.insert(t("http://c", "http://p", "http://c"));
        g.insert(t("http://c", "http://q", "http://a"));
        g
    }

    #[test]
    fn set_semantics() {
        let mut g = GraphStore::new(Iri::new("http://g").unwrap());
        assert!(g.insert(t("http://a", "http://p", "http://b")));
        assert_eq!(g.len(), 1);
        assert!(!g.insert(t("http://a", "http://p", "http://b")));
        assert_eq!(g.len(), 1);
        g.insert(t("http://a", "http://p", "http://c"));
        g.insert(t("http://a", "http://q", "http://c"));
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn full_scan() {
        let bag = store().match_triples(&[var("s"), var("p"), var("o")]);
        assert_eq!(bag.len(), 5);
        assert!(bag.iter().all(|(_, c)| c == 1));
    }

    #[test]
    fn no_match() {
        let bag = store().match_triples(&[
            PatternTerm::Term(iri("http://zzz")),
            PatternTerm::Term(iri("http://p")),
            var("o"),
        ]);
        assert!(bag.is_empty());
    }

    #[test]
    fn repeated_variable_binds_self_loops() {
        let g = store();
        let bag = g.match_triples(&[var("x"), PatternTerm::Term(iri("http://p")), var("x")]);
        // Nested-loop oracle over every triple.
        let expected = g
            .triples()
            .iter()
            .filter(|t| t.predicate().as_str() == "http://p" && t.subject() == t.object())
            .count();
        assert_eq!(expected, 1);
        assert_eq!(bag.len(), expected);
        let (m, _) = bag.iter().next().unwrap();
        assert_eq!(m.get(&Var::new("x").unwrap()), Some(&iri("http://c")));
    }

    #[test]
    fn ground_pattern_membership() {
        let g = store();
        let present = [
            PatternTerm::Term(iri("http://a")),
            PatternTerm::Term(iri("http://p")),
            PatternTerm::Term(iri("http://b")),
        ];
        assert_eq!(g.match_triples(&present).len(), 1);
        let absent = [
            PatternTerm::Term(iri("http://a")),
            PatternTerm::Term(iri("http://p")),
            PatternTerm::Term(iri("http://a")),
        ];
        assert_eq!(g.match_triples(&absent).len(), 0);
    }
}
