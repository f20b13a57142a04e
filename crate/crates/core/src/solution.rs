//! Solution mappings and bags of them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::term::Term;
use crate::var::Var;

/// A partial function from variables to terms. Variables outside the
/// domain are simply absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mapping(BTreeMap<Var, Term>);

impl Mapping {
    pub fn new() -> Self {
        Mapping(BTreeMap::new())
    }

    pub fn get(&self, var: &Var) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: Var, term: Term) {
        self.0.insert(var, term);
    }

    pub fn remove(&mut self, var: &Var) -> Option<Term> {
        self.0.remove(var)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True iff every shared variable is bound to the same term.
    pub fn compatible(&self, other: &Mapping) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.iter().all(|(v, t)| large.0.get(v).is_none_or(|u| u == t))
    }

    /// Union of two compatible mappings.
    pub fn merge(&self, other: &Mapping) -> Mapping {
        let mut out = self.clone();
        for (v, t) in &other.0 {
            out.0.entry(v.clone()).or_insert_with(|| t.clone());
        }
        out
    }

    pub fn restrict(&self, vars: &[Var]) -> Mapping {
        Mapping(self.0.iter().filter(|(v, _)| vars.contains(v)).map(|(v, t)| (v.clone(), t.clone())).collect())
    }
}

impl FromIterator<(Var, Term)> for Mapping {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Mapping(iter.into_iter().collect())
    }
}

pub fn compatible(a: &Mapping, b: &Mapping) -> bool {
    a.compatible(b)
}

/// A multiset of mappings: base set plus positive multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionBag {
    counts: BTreeMap<Mapping, usize>,
}

impl SolutionBag {
    pub fn new() -> Self {
        SolutionBag::default()
    }

    /// The bag holding one empty mapping (identity of join).
    pub fn unit() -> Self {
        let mut b = SolutionBag::new();
        b.add(Mapping::new(), 1);
        b
    }

    pub fn add(&mut self, mapping: Mapping, multiplicity: usize) {
        if multiplicity > 0 {
            *self.counts.entry(mapping).or_insert(0) += multiplicity;
        }
    }

    pub fn multiplicity(&self, mapping: &Mapping) -> usize {
        self.counts.get(mapping).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mapping, usize)> {
        self.counts.iter().map(|(m, c)| (m, *c))
    }

    /// Number of distinct mappings in the base set.
    pub fn base_len(&self) -> usize {
        self.counts.len()
    }

    /// Total size counting multiplicities.
    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Variables bound in at least one mapping.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.counts.keys().flat_map(|m| m.domain().cloned()).collect()
    }

    /// Bag union: multiplicities add.
    pub fn union(mut self, other: &SolutionBag) -> SolutionBag {
        for (m, c) in other.iter() {
            self.add(m.clone(), c);
        }
        self
    }

    /// Expands into a list with one entry per occurrence.
    pub fn to_vec(&self) -> Vec<Mapping> {
        let mut out = Vec::with_capacity(self.len());
        for (m, c) in self.iter() {
            for _ in 0..c {
                out.push(m.clone());
            }
        }
        out
    }
}

impl FromIterator<Mapping> for SolutionBag {
    fn from_iter<I: IntoIterator<Item = Mapping>>(iter: I) -> Self {
        let mut b = SolutionBag::new();
        for m in iter {
            b.add(m, 1);
        }
        b
    }
}
