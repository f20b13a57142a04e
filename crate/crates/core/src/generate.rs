//! Frame queue to query model.
//!
//! [`generate`] folds the operator queue in FIFO order into one model,
//! nesting only where the semantics require it: an operator applied to a
//! grouped (or sliced) result, a join with a grouped side, and full outer
//! joins. [`naive_generate`] is the baseline that wraps every operator in
//! its own subquery.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::GenerateError;
use crate::frame::{join_columns, Aggregation, ColumnFilter, Direction, Frame, JoinType, OpRecord};
use crate::model::{fresh_var, Element, FilterExpr, GraphTriple, GroupPattern, HavingExpr, QueryModel};
use crate::store::{PatternTerm, TriplePattern};
use crate::term::{Iri, Term};
use crate::var::Var;

/// Switches used by mutation tests to check that verification catches a
/// broken generator.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Options {
    /// Emit optional expands as mandatory patterns.
    pub corrupt_optional: bool,
}

/// Builds the single query model for `frame`.
pub fn generate(frame: &Frame) -> Result<QueryModel, GenerateError> {
    generate_with(frame, Options::default())
}

#[doc(hidden)]
pub fn generate_with(frame: &Frame, opts: Options) -> Result<QueryModel, GenerateError> {
    let ops = check_queue(frame)?;
    let mut m = QueryModel::new(frame.prefixes().clone(), frame.graphs().to_vec());
    for op in ops {
        m = apply(m, op, opts)?;
    }
    Ok(m)
}

fn check_queue(frame: &Frame) -> Result<&[OpRecord], GenerateError> {
    let ops = frame.ops();
    match ops.first() {
        None => Err(GenerateError::EmptyQueue),
        Some(OpRecord::Seed { .. }) => Ok(ops),
        Some(_) => Err(GenerateError::MissingSeed),
    }
}

fn expand_pattern(column: &Var, predicate: &Iri, new_column: &Var, direction: Direction) -> TriplePattern {
    let (s, o) = match direction {
        Direction::Outgoing => (column, new_column),
        Direction::Incoming => (new_column, column),
    };
    [
        PatternTerm::Var(s.clone()),
        PatternTerm::Term(Term::Iri(predicate.clone())),
        PatternTerm::Var(o.clone()),
    ]
}

fn pattern_vars(p: &TriplePattern) -> Vec<Var> {
    let mut out: Vec<Var> = Vec::new();
    for v in p.iter().filter_map(PatternTerm::as_var) {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

fn wrap(m: QueryModel) -> QueryModel {
    QueryModel::wrap_as_subquery(m)
}

/// A grouped or sliced result cannot take new patterns at the same level.
fn sealed(m: &QueryModel) -> bool {
    m.is_grouped() || m.has_slice()
}

fn seal_check(m: QueryModel) -> QueryModel {
    if sealed(&m) {
        wrap(m)
    } else {
        m
    }
}

/// Adding an element that binds `vars` must not change the value a
/// group filter sees.
fn filters_allow(m: &QueryModel, vars: &BTreeSet<Var>) -> bool {
    let certain = m.body.certain();
    m.body.filter_vars().iter().all(|v| !vars.contains(v) || certain.contains(v))
}

/// Makes `name` free for a new binding: hidden variables are renamed
/// away, and a visible one is renamed too.
fn free_name(m: &mut QueryModel, name: &Var) -> Option<Var> {
    let avoid: BTreeSet<Var> = [name.clone()].into_iter().collect();
    m.freshen_hidden(&avoid);
    if m.select.contains(name) {
        let mut used = m.all_vars();
        let fresh = fresh_var(name, &mut used);
        let map: BTreeMap<Var, Var> = [(name.clone(), fresh.clone())].into_iter().collect();
        m.rename_outputs(&map);
        return Some(fresh);
    }
    None
}

fn refresh_distinct(m: &mut QueryModel) {
    if let Some(keys) = &m.group_by {
        m.distinct = !keys.is_empty()
            && m.aggregations.iter().any(|a| a.distinct)
            && keys.iter().all(|k| m.select.contains(k));
    }
}

fn filter_expr(filters: &[ColumnFilter]) -> FilterExpr {
    FilterExpr {
        terms: filters
            .iter()
            .flat_map(|f| f.conditions.iter().map(move |c| (f.column.clone(), c.clone())))
            .collect(),
    }
}

fn apply(mut m: QueryModel, op: &OpRecord, opts: Options) -> Result<QueryModel, GenerateError> {
    match op {
        OpRecord::Seed { graph, pattern } => {
            m.add_triple(pattern.clone(), graph.clone());
            m.select = pattern_vars(pattern);
        }
        OpRecord::Expand { graph, column, predicate, new_column, direction, optional } => {
            m = seal_check(m);
            free_name(&mut m, new_column);
            let vars: BTreeSet<Var> = [column.clone(), new_column.clone()].into_iter().collect();
            if !filters_allow(&m, &vars) {
                m = wrap(m);
            }
            let triple = GraphTriple {
                pattern: expand_pattern(column, predicate, new_column, *direction),
                graph: graph.clone(),
            };
            if *optional && !opts.corrupt_optional {
                m.add_optional_block(GroupPattern::from_elements(vec![Element::Triple(triple)]))?;
            } else {
                m.body.elements.push(Element::Triple(triple));
            }
            m.select.push(new_column.clone());
        }
        OpRecord::Filter(filters) => {
            if m.has_slice() {
                m = wrap(m);
            }
            if m.is_grouped() {
                let having: Option<Vec<_>> = filters
                    .iter()
                    .flat_map(|f| f.conditions.iter().map(move |c| (&f.column, c)))
                    .map(|(col, c)| {
                        m.aggregations.iter().find(|a| a.target == *col).map(|a| (a.clone(), c.clone()))
                    })
                    .collect();
                match having {
                    Some(terms) => {
                        m.add_having(HavingExpr { terms })?;
                        return Ok(m);
                    }
                    None => m = wrap(m),
                }
            }
            m.add_filter(filter_expr(filters))?;
        }
        OpRecord::SelectCols(cols) => {
            m.select = cols.clone();
            refresh_distinct(&mut m);
        }
        OpRecord::Join { other, column, other_column, kind, new_column } => {
            let theirs = generate_with(other, opts)?;
            let cols = join_columns(&m.select, column, &theirs.select, other_column, *kind, new_column);
            m = join_models(m, theirs, column, other_column, *kind, new_column, false)?;
            m.select = cols;
        }
        OpRecord::GroupBy(keys) => {
            m = seal_check(m);
            m.set_grouping(keys.clone())?;
            m.select = keys.clone();
        }
        OpRecord::Aggregation(agg) => {
            let mut agg = agg.clone();
            if let Some(fresh) = free_name(&mut m, &agg.target) {
                if agg.source == agg.target {
                    agg.source = fresh;
                }
            }
            m.select.push(agg.target.clone());
            m.add_aggregation(agg)?;
            refresh_distinct(&mut m);
        }
        OpRecord::Aggregate(agg) => {
            m = seal_check(m);
            let mut agg: Aggregation = agg.clone();
            if let Some(fresh) = free_name(&mut m, &agg.target) {
                if agg.source == agg.target {
                    agg.source = fresh;
                }
            }
            m.set_grouping(Vec::new())?;
            m.select = vec![agg.target.clone()];
            m.add_aggregation(agg)?;
        }
        OpRecord::Sort(keys) => {
            m.order = keys.clone();
        }
        OpRecord::Head { limit, offset } => {
            m.limit = Some(*limit);
            m.offset = (*offset > 0).then_some(*offset);
        }
    }
    Ok(m)
}

/// Renames the join columns on both sides, then combines the models
/// according to the join type. The caller sets the final select list.
fn join_models(
    mut mine: QueryModel,
    mut theirs: QueryModel,
    column: &Var,
    other_column: &Var,
    kind: JoinType,
    new_column: &Var,
    naive: bool,
) -> Result<QueryModel, GenerateError> {
    let rename = |m: &mut QueryModel, from: &Var| {
        if from != new_column {
            let map: BTreeMap<Var, Var> = [(from.clone(), new_column.clone())].into_iter().collect();
            m.rename_outputs(&map);
        }
    };
    rename(&mut mine, column);
    rename(&mut theirs, other_column);
    let graphs = {
        let mut g = mine.graphs.clone();
        for x in &theirs.graphs {
            if !g.contains(x) {
                g.push(x.clone());
            }
        }
        g
    };
    let mut prefixes = mine.prefixes.clone();
    prefixes.absorb(&theirs.prefixes);
    let mut out = match kind {
        JoinType::Inner if naive => {
            let mut theirs = wrap(theirs);
            let mut mine = seal_check(mine);
            separate_hidden(&mut mine, &mut theirs);
            concat_flat(mine, theirs)
        }
        JoinType::Inner => inner_join(mine, theirs),
        JoinType::LeftOuter => left_join(mine, theirs, naive),
        JoinType::RightOuter => left_join(theirs, mine, naive),
        JoinType::FullOuter => {
            let branch = |a: &QueryModel, b: &QueryModel| {
                let mut m = QueryModel::new(prefixes.clone(), graphs.clone());
                m.add_subquery(a.clone());
                m.body
                    .elements
                    .push(Element::Optional(GroupPattern::from_elements(vec![Element::Subquery(b.clone().into())])));
                m.select = m.scope();
                m
            };
            let left = branch(&mine, &theirs);
            let mut right = branch(&theirs, &mine);
            right.select = left.select.clone();
            QueryModel::union_models(left, right)?
        }
    };
    out.graphs = graphs;
    out.prefixes = prefixes;
    Ok(out)
}

/// Hidden variables of each side must not meet the other side's scope.
fn separate_hidden(a: &mut QueryModel, b: &mut QueryModel) {
    let sb: BTreeSet<Var> = b.scope().into_iter().collect();
    a.freshen_hidden(&sb);
    let sa: BTreeSet<Var> = a.scope().into_iter().collect();
    b.freshen_hidden(&sa);
}

/// Whether evaluating `x`'s elements followed by `y`'s in one group gives
/// the join of the two groups evaluated separately.
fn can_concat(x: &QueryModel, y: &QueryModel) -> bool {
    let sx: BTreeSet<Var> = x.scope().into_iter().collect();
    let sy: BTreeSet<Var> = y.scope().into_iter().collect();
    for (i, e) in y.body.elements.iter().enumerate() {
        if let Element::Optional(g) = e {
            let certain = y.body.certain_prefix(i);
            if g.scope().iter().any(|v| sx.contains(v) && !certain.contains(v)) {
                return false;
            }
        }
    }
    let cx = x.body.certain();
    let cy = y.body.certain();
    x.body.filter_vars().iter().all(|v| !sy.contains(v) || cx.contains(v))
        && y.body.filter_vars().iter().all(|v| !sx.contains(v) || cy.contains(v))
}

fn concat_flat(mut x: QueryModel, y: QueryModel) -> QueryModel {
    for v in &y.select {
        if !x.select.contains(v) {
            x.select.push(v.clone());
        }
    }
    x.body.elements.extend(y.body.elements);
    x.body.filters.extend(y.body.filters);
    for o in y.order {
        if !x.order.iter().any(|(v, _)| *v == o.0) {
            x.order.push(o);
        }
    }
    x
}

fn inner_join(a: QueryModel, b: QueryModel) -> QueryModel {
    let mut a = seal_check(a);
    let mut b = seal_check(b);
    separate_hidden(&mut a, &mut b);
    if can_concat(&a, &b) {
        return concat_flat(a, b);
    }
    if can_concat(&b, &a) {
        return concat_flat(b, a);
    }
    let b = wrap(b);
    if can_concat(&a, &b) {
        return concat_flat(a, b);
    }
    if can_concat(&b, &a) {
        return concat_flat(b, a);
    }
    concat_flat(wrap(a), b)
}

/// `a` with `b` as an OPTIONAL group.
fn left_join(a: QueryModel, b: QueryModel, naive: bool) -> QueryModel {
    let mut a = seal_check(a);
    let mut b = if naive { wrap(b) } else { seal_check(b) };
    separate_hidden(&mut a, &mut b);
    let sa: BTreeSet<Var> = a.scope().into_iter().collect();
    let sb: BTreeSet<Var> = b.scope().into_iter().collect();
    let cb = b.body.certain();
    let group = if b.body.filter_vars().iter().all(|v| !sa.contains(v) || cb.contains(v)) {
        let select = b.select.clone();
        (b.body, select)
    } else {
        let select = b.select.clone();
        (GroupPattern::from_elements(vec![Element::Subquery(b.into())]), select)
    };
    let ca = a.body.certain();
    if !a.body.filter_vars().iter().all(|v| !sb.contains(v) || ca.contains(v)) {
        a = wrap(a);
    }
    let (group, select) = group;
    a.body.elements.push(Element::Optional(group));
    for v in select {
        if !a.select.contains(&v) {
            a.select.push(v);
        }
    }
    a
}

/// Baseline generation: every seed, expand and filter becomes its own
/// subquery, joined at one outer level.
pub fn naive_generate(frame: &Frame) -> Result<QueryModel, GenerateError> {
    let ops = check_queue(frame)?;
    let mut st = Naive { m: QueryModel::new(frame.prefixes().clone(), frame.graphs().to_vec()), intro: BTreeMap::new() };
    for op in ops {
        st.apply(op)?;
    }
    Ok(st.m)
}

struct Naive {
    m: QueryModel,
    /// Column -> the mandatory triple pattern that introduced it in the
    /// current segment.
    intro: BTreeMap<Var, GraphTriple>,
}

fn leaf(triple: &GraphTriple, select: Vec<Var>, prefixes: &crate::prefix::PrefixMap) -> QueryModel {
    let mut q = QueryModel::new(prefixes.clone(), vec![triple.graph.clone()]);
    q.body.elements.push(Element::Triple(triple.clone()));
    q.select = select;
    q
}

impl Naive {
    /// Moves the current segment into a subquery of a fresh segment.
    fn close_segment(&mut self) {
        let inner = core::mem::replace(&mut self.m, QueryModel::new(Default::default(), Vec::new()));
        self.m = wrap(inner);
        self.intro.clear();
    }

    fn apply(&mut self, op: &OpRecord) -> Result<(), GenerateError> {
        match op {
            OpRecord::Seed { graph, pattern } => {
                let t = GraphTriple { pattern: pattern.clone(), graph: graph.clone() };
                let vars = pattern_vars(pattern);
                self.m.add_subquery(leaf(&t, vars.clone(), &self.m.prefixes));
                for v in &vars {
                    self.intro.insert(v.clone(), t.clone());
                }
                self.m.select = vars;
            }
            OpRecord::Expand { graph, column, predicate, new_column, direction, optional } => {
                if sealed(&self.m) {
                    self.close_segment();
                }
                if free_name(&mut self.m, new_column).is_some() {
                    self.intro.clear();
                }
                let t = GraphTriple {
                    pattern: expand_pattern(column, predicate, new_column, *direction),
                    graph: graph.clone(),
                };
                let sub = leaf(&t, vec![column.clone(), new_column.clone()], &self.m.prefixes);
                if *optional {
                    self.m.add_optional_block(GroupPattern::from_elements(vec![Element::Subquery(sub.into())]))?;
                } else {
                    self.m.add_subquery(sub);
                    self.intro.insert(new_column.clone(), t);
                }
                self.m.select.push(new_column.clone());
            }
            OpRecord::Filter(filters) => {
                if sealed(&self.m) {
                    self.close_segment();
                }
                let certain = self.m.body.certain();
                let mut by_triple: Vec<(GraphTriple, Vec<ColumnFilter>)> = Vec::new();
                let mut rematch = true;
                for f in filters {
                    match self.intro.get(&f.column) {
                        Some(t) if certain.contains(&f.column) => {
                            match by_triple.iter_mut().find(|(x, _)| x == t) {
                                Some((_, fs)) => fs.push(f.clone()),
                                None => by_triple.push((t.clone(), vec![f.clone()])),
                            }
                        }
                        _ => rematch = false,
                    }
                }
                if rematch {
                    for (t, fs) in by_triple {
                        let mut sub = leaf(&t, pattern_vars(&t.pattern), &self.m.prefixes);
                        sub.add_filter(filter_expr(&fs))?;
                        self.m.add_subquery(sub);
                    }
                } else {
                    let select = self.m.select.clone();
                    let mut inner = core::mem::replace(&mut self.m, QueryModel::new(Default::default(), Vec::new()));
                    inner.add_filter(filter_expr(filters))?;
                    inner.select = inner.scope();
                    self.m = wrap(inner);
                    self.m.select = select;
                    self.intro.clear();
                }
            }
            OpRecord::SelectCols(cols) => {
                self.m.select = cols.clone();
            }
            OpRecord::Join { other, column, other_column, kind, new_column } => {
                let theirs = naive_generate(other)?;
                let cols = join_columns(&self.m.select, column, &theirs.select, other_column, *kind, new_column);
                let mine = core::mem::replace(&mut self.m, QueryModel::new(Default::default(), Vec::new()));
                self.m = join_models(mine, theirs, column, other_column, *kind, new_column, true)?;
                self.m.select = cols;
                self.intro.clear();
            }
            OpRecord::GroupBy(keys) => {
                if sealed(&self.m) {
                    self.close_segment();
                }
                self.m.set_grouping(keys.clone())?;
                self.m.select = keys.clone();
            }
            OpRecord::Aggregation(agg) => {
                let mut agg = agg.clone();
                if let Some(fresh) = free_name(&mut self.m, &agg.target) {
                    if agg.source == agg.target {
                        agg.source = fresh;
                    }
                }
                self.m.select.push(agg.target.clone());
                self.m.add_aggregation(agg)?;
                refresh_distinct(&mut self.m);
            }
            OpRecord::Aggregate(agg) => {
                if sealed(&self.m) {
                    self.close_segment();
                }
                let mut agg = agg.clone();
                if let Some(fresh) = free_name(&mut self.m, &agg.target) {
                    if agg.source == agg.target {
                        agg.source = fresh;
                    }
                }
                self.m.set_grouping(Vec::new())?;
                self.m.select = vec![agg.target.clone()];
                self.m.add_aggregation(agg)?;
            }
            OpRecord::Sort(keys) => self.m.order = keys.clone(),
            OpRecord::Head { limit, offset } => {
                self.m.limit = Some(*limit);
                self.m.offset = (*offset > 0).then_some(*offset);
            }
        }
        Ok(())
    }
}
