use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::FrameError;
use crate::term::Iri;

/// Namespace prefixes, used to expand user-written `pfx:local` names and to
/// compact IRIs when emitting query text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefixMap {
    map: BTreeMap<String, String>,
}

impl PrefixMap {
    pub fn empty() -> Self {
        PrefixMap::default()
    }

    /// rdf, rdfs and xsd.
    pub fn with_defaults() -> Self {
        let mut p = PrefixMap::empty();
        p.insert("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#");
        p.insert("rdfs", "http://www.w3.org/2000/01/rdf-schema#");
        p.insert("xsd", "http://www.w3.org/2001/XMLSchema#");
        p
    }

    pub fn insert(&mut self, name: &str, namespace: &str) {
        self.map.insert(name.to_string(), namespace.to_string());
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.map.get(name).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Adds the entries of `other` that are not already defined here.
    pub fn absorb(&mut self, other: &PrefixMap) {
        for (k, v) in &other.map {
            self.map.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    pub fn expand(&self, name: &str) -> Result<Iri, FrameError> {
        let (pfx, local) =
            name.split_once(':').ok_or_else(|| FrameError::UnknownPrefix(name.to_string()))?;
        let ns = self.get(pfx).ok_or_else(|| FrameError::UnknownPrefix(pfx.to_string()))?;
        Ok(Iri::new(alloc::format!("{ns}{local}"))?)
    }

    /// Shortest `pfx:local` spelling of `iri`, if some namespace covers it
    /// with a local part that needs no escaping.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        let mut best: Option<(&str, &str)> = None;
        for (pfx, ns) in &self.map {
            if let Some(local) = iri.as_str().strip_prefix(ns.as_str()) {
                if is_plain_local(local) && best.is_none_or(|(_, l)| local.len() < l.len()) {
                    best = Some((pfx, local));
                }
            }
        }
        best.map(|(p, l)| alloc::format!("{p}:{l}"))
    }

    pub fn names(&self) -> Vec<&str> {
        self.map.keys().map(String::as_str).collect()
    }
}

fn is_plain_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_alphanumeric() || c == '_' => {
            !local.ends_with('.') && chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        }
        _ => false,
    }
}
