//! The query model: an intermediate representation between recorded frame
//! operators and SPARQL text.
//!
//! A model is a SELECT query. Its body is a group graph pattern holding an
//! ordered list of elements (triple patterns, subqueries, OPTIONAL groups,
//! unions) plus group-scoped filters. Grouping, aggregation, HAVING and
//! solution modifiers live on the model itself. In-scope variables are
//! always computed from the structure, never stored.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::condition::Condition;
use crate::error::ModelError;
use crate::frame::{AggFunc, Aggregation, SortOrder};
use crate::prefix::PrefixMap;
use crate::store::{PatternTerm, TriplePattern};
use crate::term::Iri;
use crate::var::Var;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphTriple {
    pub pattern: TriplePattern,
    pub graph: Iri,
}

impl GraphTriple {
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.pattern.iter().filter_map(PatternTerm::as_var)
    }
}

/// A conjunction of per-column conditions, rendered as one FILTER.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterExpr {
    pub terms: Vec<(Var, Condition)>,
}

impl FilterExpr {
    pub fn single(var: Var, cond: Condition) -> Self {
        FilterExpr { terms: alloc::vec![(var, cond)] }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.iter().map(|(v, _)| v.clone()).collect()
    }
}

/// A conjunction of conditions on aggregate values, rendered as HAVING.
#[derive(Debug, Clone, PartialEq)]
pub struct HavingExpr {
    pub terms: Vec<(Aggregation, Condition)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Triple(GraphTriple),
    Subquery(Box<QueryModel>),
    Optional(GroupPattern),
    /// Two or more branches with the same output variables.
    Union(Vec<QueryModel>),
}

impl Element {
    fn is_mandatory(&self) -> bool {
        !matches!(self, Element::Optional(_))
    }

    fn scope_into(&self, out: &mut Vec<Var>) {
        let push = |v: &Var| {
            if !out.contains(v) {
                out.push(v.clone());
            }
        };
        match self {
            Element::Triple(t) => t.vars().for_each(push),
            Element::Subquery(m) => m.select.iter().for_each(push),
            Element::Optional(g) => g.scope().iter().for_each(push),
            Element::Union(bs) => bs.iter().flat_map(|b| b.select.iter()).for_each(push),
        }
    }

    /// Variables bound in every solution of this element.
    fn certain(&self) -> BTreeSet<Var> {
        match self {
            Element::Triple(t) => t.vars().cloned().collect(),
            Element::Subquery(m) => m.certain_outputs(),
            Element::Optional(_) => BTreeSet::new(),
            Element::Union(bs) => {
                let mut it = bs.iter().map(QueryModel::certain_outputs);
                let first = it.next().unwrap_or_default();
                it.fold(first, |acc, c| acc.intersection(&c).cloned().collect())
            }
        }
    }
}

/// A `{ ... }` group: elements folded left to right (join, or left join for
/// OPTIONAL), then filtered by all of `filters`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupPattern {
    pub elements: Vec<Element>,
    pub filters: Vec<FilterExpr>,
}

impl GroupPattern {
    pub fn new() -> Self {
        GroupPattern::default()
    }

    pub fn from_elements(elements: Vec<Element>) -> Self {
        GroupPattern { elements, filters: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// In-scope variables in order of first appearance.
    pub fn scope(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for e in &self.elements {
            e.scope_into(&mut out);
        }
        out
    }

    pub fn certain(&self) -> BTreeSet<Var> {
        self.certain_prefix(self.elements.len())
    }

    /// Certain variables of the first `n` elements.
    pub fn certain_prefix(&self, n: usize) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for e in self.elements[..n].iter().filter(|e| e.is_mandatory()) {
            out.extend(e.certain());
        }
        out
    }

    pub fn filter_vars(&self) -> BTreeSet<Var> {
        self.filters.iter().flat_map(FilterExpr::vars).collect()
    }

    pub fn has_optional(&self) -> bool {
        self.elements.iter().any(|e| matches!(e, Element::Optional(_)))
    }

    fn substitute(&mut self, map: &BTreeMap<Var, Var>, used: &mut BTreeSet<Var>) {
        let sub = |v: &mut Var| {
            if let Some(n) = map.get(v) {
                *v = n.clone();
            }
        };
        for e in &mut self.elements {
            match e {
                Element::Triple(t) => {
                    for p in &mut t.pattern {
                        if let PatternTerm::Var(v) = p {
                            sub(v);
                        }
                    }
                }
                Element::Subquery(m) => m.rename_outputs_with(map, used),
                Element::Optional(g) => g.substitute(map, used),
                Element::Union(bs) => {
                    for b in bs {
                        b.rename_outputs_with(map, used);
                    }
                }
            }
        }
        for f in &mut self.filters {
            for (v, _) in &mut f.terms {
                sub(v);
            }
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for e in &self.elements {
            match e {
                Element::Triple(t) => out.extend(t.vars().cloned()),
                Element::Subquery(m) => m.collect_vars(out),
                Element::Optional(g) => g.collect_vars(out),
                Element::Union(bs) => bs.iter().for_each(|b| b.collect_vars(out)),
            }
        }
        out.extend(self.filter_vars());
    }

    fn subquery_count(&self) -> usize {
        self.elements
            .iter()
            .map(|e| match e {
                Element::Triple(_) => 0,
                Element::Subquery(m) => 1 + m.subquery_count(),
                Element::Optional(g) => g.subquery_count(),
                Element::Union(bs) => bs.iter().map(QueryModel::subquery_count).sum(),
            })
            .sum()
    }

    fn validate(&self) -> Result<(), ModelError> {
        let scope = self.scope();
        for f in &self.filters {
            for v in f.vars() {
                if !scope.contains(&v) {
                    return Err(ModelError::OutOfScope(v.as_str().to_string()));
                }
            }
        }
        for e in &self.elements {
            match e {
                Element::Triple(_) => {}
                Element::Subquery(m) => m.validate()?,
                Element::Optional(g) => {
                    if g.is_empty() {
                        return Err(ModelError::EmptyGroup);
                    }
                    g.validate()?
                }
                Element::Union(bs) => {
                    if bs.len() < 2 {
                        return Err(ModelError::IncompatibleUnion("union needs two branches".into()));
                    }
                    let first: BTreeSet<&Var> = bs[0].select.iter().collect();
                    for b in bs {
                        b.validate()?;
                        if b.select.iter().collect::<BTreeSet<_>>() != first {
                            return Err(ModelError::IncompatibleUnion("branch outputs differ".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryModel {
    pub prefixes: PrefixMap,
    pub graphs: Vec<Iri>,
    pub select: Vec<Var>,
    pub distinct: bool,
    pub body: GroupPattern,
    /// `Some(keys)` once grouping is set; `Some([])` aggregates the whole
    /// solution sequence into one group.
    pub group_by: Option<Vec<Var>>,
    pub aggregations: Vec<Aggregation>,
    pub having: Vec<HavingExpr>,
    pub order: Vec<(Var, SortOrder)>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

impl QueryModel {
    pub fn new(prefixes: PrefixMap, graphs: Vec<Iri>) -> Self {
        QueryModel {
            prefixes,
            graphs,
            select: Vec::new(),
            distinct: false,
            body: GroupPattern::new(),
            group_by: None,
            aggregations: Vec::new(),
            having: Vec::new(),
            order: Vec::new(),
            limit: None,
            offset: None,
        }
    }

    pub fn is_grouped(&self) -> bool {
        self.group_by.is_some()
    }

    /// LIMIT or OFFSET present.
    pub fn has_slice(&self) -> bool {
        self.limit.is_some() || self.offset.is_some()
    }

    /// In-scope variables of the WHERE clause.
    pub fn scope(&self) -> Vec<Var> {
        self.body.scope()
    }

    /// Variables visible to an enclosing query.
    pub fn outputs(&self) -> &[Var] {
        &self.select
    }

    /// Variables that may be projected: the body scope, or the grouping
    /// keys plus aggregation targets for a grouped model.
    pub fn projectable(&self) -> Vec<Var> {
        match &self.group_by {
            Some(keys) => keys.iter().chain(self.aggregations.iter().map(|a| &a.target)).cloned().collect(),
            None => self.scope(),
        }
    }

    /// Body variables not visible outside.
    pub fn hidden(&self) -> Vec<Var> {
        self.scope().into_iter().filter(|v| !self.select.contains(v)).collect()
    }

    /// Output variables bound in every result row.
    pub fn certain_outputs(&self) -> BTreeSet<Var> {
        let certain = self.body.certain();
        let mut out: BTreeSet<Var> = match &self.group_by {
            Some(keys) => keys
                .iter()
                .filter(|k| certain.contains(*k))
                .chain(self.aggregations.iter().filter(|a| a.func == AggFunc::Count).map(|a| &a.target))
                .cloned()
                .collect(),
            None => certain,
        };
        out.retain(|v| self.select.contains(v));
        out
    }

    pub fn add_triple(&mut self, pattern: TriplePattern, graph: Iri) {
        self.body.elements.push(Element::Triple(GraphTriple { pattern, graph }));
    }

    pub fn add_filter(&mut self, filter: FilterExpr) -> Result<(), ModelError> {
        let scope = self.scope();
        for v in filter.vars() {
            if !scope.contains(&v) {
                return Err(ModelError::OutOfScope(v.as_str().to_string()));
            }
        }
        self.body.filters.push(filter);
        Ok(())
    }

    pub fn add_optional_block(&mut self, group: GroupPattern) -> Result<(), ModelError> {
        if group.is_empty() {
            return Err(ModelError::EmptyGroup);
        }
        self.body.elements.push(Element::Optional(group));
        Ok(())
    }

    pub fn add_subquery(&mut self, inner: QueryModel) {
        self.body.elements.push(Element::Subquery(Box::new(inner)));
    }

    pub fn set_grouping(&mut self, keys: Vec<Var>) -> Result<(), ModelError> {
        if self.group_by.is_some() {
            return Err(ModelError::GroupingSetTwice);
        }
        let scope = self.scope();
        if let Some(k) = keys.iter().find(|k| !scope.contains(k)) {
            return Err(ModelError::OutOfScope(k.as_str().to_string()));
        }
        self.group_by = Some(keys);
        Ok(())
    }

    pub fn add_aggregation(&mut self, agg: Aggregation) -> Result<(), ModelError> {
        if !self.scope().contains(&agg.source) {
            return Err(ModelError::OutOfScope(agg.source.as_str().to_string()));
        }
        if self.group_by.is_none() {
            self.group_by = Some(Vec::new());
        }
        self.aggregations.push(agg);
        Ok(())
    }

    pub fn add_having(&mut self, having: HavingExpr) -> Result<(), ModelError> {
        if self.group_by.is_none() {
            return Err(ModelError::OutOfScope("HAVING on an ungrouped model".into()));
        }
        self.having.push(having);
        Ok(())
    }

    pub fn set_modifiers(&mut self, order: Vec<(Var, SortOrder)>, limit: Option<u64>, offset: Option<u64>) {
        self.order = order;
        self.limit = limit;
        self.offset = offset;
    }

    /// Returns a fresh model whose only element is `inner` as a subquery.
    /// Only the inner select list is visible to the new model.
    pub fn wrap_as_subquery(inner: QueryModel) -> QueryModel {
        let mut outer = QueryModel::new(inner.prefixes.clone(), inner.graphs.clone());
        outer.select = inner.select.clone();
        outer.add_subquery(inner);
        outer
    }

    /// A model whose body is the union of `a` and `b`. Both must expose the
    /// same set of variables; the result uses `a`'s order.
    pub fn union_models(a: QueryModel, b: QueryModel) -> Result<QueryModel, ModelError> {
        let sa: BTreeSet<&Var> = a.select.iter().collect();
        let sb: BTreeSet<&Var> = b.select.iter().collect();
        if sa != sb || sa.is_empty() {
            return Err(ModelError::IncompatibleUnion(format!(
                "{:?} vs {:?}",
                a.select.iter().map(Var::as_str).collect::<Vec<_>>(),
                b.select.iter().map(Var::as_str).collect::<Vec<_>>()
            )));
        }
        let mut out = QueryModel::new(a.prefixes.clone(), a.graphs.clone());
        out.prefixes.absorb(&b.prefixes);
        for g in &b.graphs {
            if !out.graphs.contains(g) {
                out.graphs.push(g.clone());
            }
        }
        out.select = a.select.clone();
        out.body.elements.push(Element::Union(alloc::vec![a, b]));
        Ok(out)
    }

    /// Concatenates the two bodies into one group. The select list is the
    /// union of both; when both carry slices the result keeps the larger
    /// limit and the smaller offset.
    pub fn merge_models(a: QueryModel, b: QueryModel) -> Result<QueryModel, ModelError> {
        if a.is_grouped() || b.is_grouped() {
            return Err(ModelError::MergeGrouped);
        }
        let mut out = a;
        out.prefixes.absorb(&b.prefixes);
        for g in &b.graphs {
            if !out.graphs.contains(g) {
                out.graphs.push(g.clone());
            }
        }
        for v in &b.select {
            if !out.select.contains(v) {
                out.select.push(v.clone());
            }
        }
        out.body.elements.extend(b.body.elements);
        out.body.filters.extend(b.body.filters);
        out.distinct = out.distinct && b.distinct;
        for o in b.order {
            if !out.order.iter().any(|(v, _)| *v == o.0) {
                out.order.push(o);
            }
        }
        out.limit = match (out.limit, b.limit) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        out.offset = match (out.offset, b.offset) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        Ok(out)
    }

    /// Every variable name mentioned anywhere in the model tree.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        self.body.collect_vars(out);
        out.extend(self.select.iter().cloned());
        for a in &self.aggregations {
            out.insert(a.source.clone());
            out.insert(a.target.clone());
        }
    }

    /// Renames output variables (and everything bound to them at this
    /// level). Hidden variables that would capture a new name are given
    /// fresh names first.
    pub fn rename_outputs(&mut self, map: &BTreeMap<Var, Var>) {
        let mut used = self.all_vars();
        used.extend(map.values().cloned());
        self.rename_outputs_with(map, &mut used);
    }

    fn rename_outputs_with(&mut self, map: &BTreeMap<Var, Var>, used: &mut BTreeSet<Var>) {
        let map: BTreeMap<Var, Var> = map
            .iter()
            .filter(|(from, to)| from != to && self.select.contains(from))
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        if map.is_empty() {
            return;
        }
        let targets: BTreeSet<Var> = map.values().cloned().collect();
        self.freshen_hidden_with(&targets, used);
        self.substitute(&map, used);
    }

    /// Gives fresh names to hidden variables that appear in `avoid`.
    pub fn freshen_hidden(&mut self, avoid: &BTreeSet<Var>) {
        let mut used = self.all_vars();
        used.extend(avoid.iter().cloned());
        self.freshen_hidden_with(avoid, &mut used);
    }

    fn freshen_hidden_with(&mut self, avoid: &BTreeSet<Var>, used: &mut BTreeSet<Var>) {
        let mut hidden = self.hidden();
        for a in &self.aggregations {
            if !self.select.contains(&a.target) && !hidden.contains(&a.target) {
                hidden.push(a.target.clone());
            }
        }
        let mut map = BTreeMap::new();
        for h in hidden.into_iter().filter(|h| avoid.contains(h)) {
            let fresh = fresh_var(&h, used);
            map.insert(h, fresh);
        }
        if !map.is_empty() {
            self.substitute(&map, used);
        }
    }

    fn substitute(&mut self, map: &BTreeMap<Var, Var>, used: &mut BTreeSet<Var>) {
        let sub = |v: &mut Var| {
            if let Some(n) = map.get(v) {
                *v = n.clone();
            }
        };
        self.body.substitute(map, used);
        self.select.iter_mut().for_each(sub);
        if let Some(keys) = &mut self.group_by {
            keys.iter_mut().for_each(sub);
        }
        for a in &mut self.aggregations {
            sub(&mut a.source);
            sub(&mut a.target);
        }
        for h in &mut self.having {
            for (a, _) in &mut h.terms {
                sub(&mut a.source);
                sub(&mut a.target);
            }
        }
        for (v, _) in &mut self.order {
            sub(v);
        }
    }

    /// Number of subquery nodes in the tree. Union branches are not counted
    /// themselves, but subqueries inside them are.
    pub fn subquery_count(&self) -> usize {
        self.body.subquery_count()
    }

    /// Checks that every referenced variable is in scope where it is used.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.body.validate()?;
        let scope = self.scope();
        let out_of_scope = |v: &Var| ModelError::OutOfScope(v.as_str().to_string());
        if let Some(keys) = &self.group_by {
            if let Some(k) = keys.iter().find(|k| !scope.contains(k)) {
                return Err(out_of_scope(k));
            }
            if let Some(a) = self.aggregations.iter().find(|a| !scope.contains(&a.source)) {
                return Err(out_of_scope(&a.source));
            }
            if let Some(a) = self.aggregations.iter().find(|a| scope.contains(&a.target)) {
                return Err(ModelError::OutOfScope(format!("aggregate target {} already bound", a.target)));
            }
        }
        let projectable = self.projectable();
        if let Some(v) = self.select.iter().find(|v| !projectable.contains(v)) {
            return Err(out_of_scope(v));
        }
        if let Some((v, _)) = self.order.iter().find(|(v, _)| !projectable.contains(v)) {
            return Err(out_of_scope(v));
        }
        Ok(())
    }

    /// Stable, indented tree rendering for debugging and golden tests.
    pub fn tree(&self) -> String {
        let mut out = String::new();
        self.tree_into(&mut out, 0);
        out
    }

    fn tree_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let names = |vs: &[Var]| vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{pad}Select{} [{}]", if self.distinct { " distinct" } else { "" }, names(&self.select));
        group_tree(&self.body, out, depth + 1);
        if let Some(keys) = &self.group_by {
            let _ = writeln!(out, "{pad}  GroupBy [{}]", names(keys));
            for a in &self.aggregations {
                let _ = writeln!(
                    out,
                    "{pad}  Agg {}({}{}) -> {}",
                    a.func.sparql_name(),
                    if a.distinct { "distinct " } else { "" },
                    a.source,
                    a.target
                );
            }
            for h in &self.having {
                let _ = writeln!(out, "{pad}  Having {:?}", h.terms);
            }
        }
        if !self.order.is_empty() {
            let _ = writeln!(out, "{pad}  OrderBy {:?}", self.order);
        }
        if self.has_slice() {
            let _ = writeln!(out, "{pad}  Slice limit={:?} offset={:?}", self.limit, self.offset);
        }
    }
}

fn group_tree(g: &GroupPattern, out: &mut String, depth: usize) {
    let pad = "  ".repeat(depth);
    for e in &g.elements {
        match e {
            Element::Triple(t) => {
                let pos: Vec<String> = t
                    .pattern
                    .iter()
                    .map(|p| match p {
                        PatternTerm::Var(v) => v.to_string(),
                        PatternTerm::Term(t) => t.to_string(),
                    })
                    .collect();
                let _ = writeln!(out, "{pad}Triple {}", pos.join(" "));
            }
            Element::Subquery(m) => {
                let _ = writeln!(out, "{pad}Subquery");
                m.tree_into(out, depth + 1);
            }
            Element::Optional(inner) => {
                let _ = writeln!(out, "{pad}Optional");
                group_tree(inner, out, depth + 1);
            }
            Element::Union(bs) => {
                let _ = writeln!(out, "{pad}Union");
                for b in bs {
                    b.tree_into(out, depth + 1);
                }
            }
        }
    }
    for f in &g.filters {
        let _ = writeln!(out, "{pad}Filter {:?}", f.terms);
    }
}

/// `base_1`, `base_2`, ... the first name not in `used`; records it.
pub fn fresh_var(base: &Var, used: &mut BTreeSet<Var>) -> Var {
    let mut n = 1usize;
    loop {
        let candidate = Var::new(format!("{}_{n}", base.as_str())).expect("suffixing keeps names valid");
        if !used.contains(&candidate) {
            used.insert(candidate.clone());
            return candidate;
        }
        n += 1;
    }
}
