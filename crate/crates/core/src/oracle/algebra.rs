use alloc::boxed::Box;
use alloc::collections::BTreeMap;

use alloc::vec::Vec;

use crate::condition::Condition;
use crate::frame::{Aggregation, SortOrder};
use crate::model::{fresh_var, Element, GraphTriple, GroupPattern, QueryModel};
use crate::solution::{Mapping, SolutionBag};
use crate::store::Dataset;
use crate::term::{order_cmp_opt, Term};
use crate::var::Var;
use crate::EvalError;

use super::{aggregate, conds_of, holds};

/// SPARQL pattern algebra over bags.
#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    /// The bag holding one empty mapping.
    Unit,
    Triple(GraphTriple),
    Join(Box<Pattern>, Box<Pattern>),
    /// Left join; the conditions are checked on the merged mapping.
    LeftJoin(Box<Pattern>, Box<Pattern>, Vec<(Var, Condition)>),
    Union(Box<Pattern>, Box<Pattern>),
    Filter(Vec<(Var, Condition)>, Box<Pattern>),
    Project(Vec<Var>, Box<Pattern>),
    Distinct(Box<Pattern>),
    /// Binds the first variable to the value of the second.
    Extend(Var, Var, Box<Pattern>),
    GroupAgg { keys: Vec<Var>, aggs: Vec<Aggregation>, input: Box<Pattern> },
    /// ORDER BY, projection, DISTINCT and LIMIT/OFFSET in that order.
    Slice {
        order: Vec<(Var, SortOrder)>,
        project: Vec<Var>,
        distinct: bool,
        limit: Option<u64>,
        offset: Option<u64>,
        input: Box<Pattern>,
    },
}

impl Pattern {
    pub fn join(a: Pattern, b: Pattern) -> Pattern {
        match (a, b) {
            (Pattern::Unit, b) => b,
            (a, Pattern::Unit) => a,
            (a, b) => Pattern::Join(Box::new(a), Box::new(b)),
        }
    }
}

/// Lowers a model: the body folds left to right into joins and left joins,
/// grouping becomes GroupAgg, HAVING a filter over extra aggregate columns,
/// and the SELECT clause a projection.
pub fn lower_model(m: &QueryModel) -> Pattern {
    let mut p = lower_group(&m.body);
    if let Some(keys) = &m.group_by {
        let mut aggs = m.aggregations.clone();
        let mut used = m.all_vars();
        let mut having = Vec::new();
        for h in &m.having {
            for (agg, cond) in &h.terms {
                let same = |a: &&Aggregation| a.func == agg.func && a.source == agg.source && a.distinct == agg.distinct;
                let target = match aggs.iter().find(same) {
                    Some(a) => a.target.clone(),
                    None => {
                        let base = Var::new("having").expect("valid name");
                        let t = fresh_var(&base, &mut used);
                        aggs.push(Aggregation { target: t.clone(), ..agg.clone() });
                        t
                    }
                };
                having.push((target, cond.clone()));
            }
        }
        p = Pattern::GroupAgg { keys: keys.clone(), aggs, input: Box::new(p) };
        if !having.is_empty() {
            p = Pattern::Filter(having, Box::new(p));
        }
    }
    if !m.order.is_empty() || m.limit.is_some() || m.offset.is_some() {
        return Pattern::Slice {
            order: m.order.clone(),
            project: m.select.clone(),
            distinct: m.distinct,
            limit: m.limit,
            offset: m.offset,
            input: Box::new(p),
        };
    }
    p = Pattern::Project(m.select.clone(), Box::new(p));
    if m.distinct {
        p = Pattern::Distinct(Box::new(p));
    }
    p
}

/// A group's elements joined in order, then its filters.
pub fn lower_group(g: &GroupPattern) -> Pattern {
    let p = lower_elements(g);
    if g.filters.is_empty() {
        p
    } else {
        Pattern::Filter(conds_of(&g.filters), Box::new(p))
    }
}

fn lower_elements(g: &GroupPattern) -> Pattern {
    let mut acc = Pattern::Unit;
    for e in &g.elements {
        acc = match e {
            Element::Triple(t) => Pattern::join(acc, Pattern::Triple(t.clone())),
            Element::Subquery(m) => Pattern::join(acc, lower_model(m)),
            Element::Optional(inner) => {
                Pattern::LeftJoin(Box::new(acc), Box::new(lower_elements(inner)), conds_of(&inner.filters))
            }
            Element::Union(branches) => {
                let mut it = branches.iter().map(lower_model);
                let first = it.next().unwrap_or(Pattern::Unit);
                let u = it.fold(first, |a, b| Pattern::Union(Box::new(a), Box::new(b)));
                Pattern::join(acc, u)
            }
        };
    }
    acc
}

/// Evaluates a model to its solution bag, ignoring nothing: modifiers
/// inside the model are honoured.
pub fn eval_model(m: &QueryModel, data: &Dataset) -> Result<SolutionBag, EvalError> {
    eval_pattern(&lower_model(m), data)
}

pub fn eval_pattern(p: &Pattern, data: &Dataset) -> Result<SolutionBag, EvalError> {
    Ok(match p {
        Pattern::Unit => SolutionBag::unit(),
        Pattern::Triple(t) => {
            let g = data.graph(&t.graph).ok_or_else(|| EvalError::UnknownGraph(t.graph.as_str().into()))?;
            g.match_triples(&t.pattern)
        }
        Pattern::Join(a, b) => {
            let (a, b) = (eval_pattern(a, data)?, eval_pattern(b, data)?);
            let mut out = SolutionBag::new();
            for (m1, c1) in a.iter() {
                for (m2, c2) in b.iter() {
                    if m1.compatible(m2) {
                        out.add(m1.merge(m2), c1 * c2);
                    }
                }
            }
            out
        }
        Pattern::LeftJoin(a, b, conds) => {
            let (a, b) = (eval_pattern(a, data)?, eval_pattern(b, data)?);
            let mut out = SolutionBag::new();
            for (m1, c1) in a.iter() {
                let mut matched = false;
                for (m2, c2) in b.iter() {
                    if m1.compatible(m2) {
                        let m = m1.merge(m2);
                        if holds(conds, &m)? {
                            matched = true;
                            out.add(m, c1 * c2);
                        }
                    }
                }
                if !matched {
                    out.add(m1.clone(), c1);
                }
            }
            out
        }
        Pattern::Union(a, b) => eval_pattern(a, data)?.union(&eval_pattern(b, data)?),
        Pattern::Filter(conds, input) => {
            let mut out = SolutionBag::new();
            for (m, c) in eval_pattern(input, data)?.iter() {
                if holds(conds, m)? {
                    out.add(m.clone(), c);
                }
            }
            out
        }
        Pattern::Project(vars, input) => {
            let mut out = SolutionBag::new();
            for (m, c) in eval_pattern(input, data)?.iter() {
                out.add(m.restrict(vars), c);
            }
            out
        }
        Pattern::Distinct(input) => {
            let mut out = SolutionBag::new();
            for (m, _) in eval_pattern(input, data)?.iter() {
                out.add(m.clone(), 1);
            }
            out
        }
        Pattern::Extend(target, source, input) => {
            let mut out = SolutionBag::new();
            for (m, c) in eval_pattern(input, data)?.iter() {
                let mut m = m.clone();
                if let Some(t) = m.get(source).cloned() {
                    m.insert(target.clone(), t);
                }
                out.add(m, c);
            }
            out
        }
        Pattern::GroupAgg { keys, aggs, input } => group_agg(&eval_pattern(input, data)?, keys, aggs),
        Pattern::Slice { order, project, distinct, limit, offset, input } => {
            let mut rows = eval_pattern(input, data)?.to_vec();
            rows.sort_by(|a, b| {
                for (v, dir) in order {
                    let ord = order_cmp_opt(a.get(v), b.get(v));
                    let ord = if *dir == SortOrder::Desc { ord.reverse() } else { ord };
                    if ord.is_ne() {
                        return ord;
                    }
                }
                a.cmp(b)
            });
            let mut projected: Vec<Mapping> = rows.iter().map(|m| m.restrict(project)).collect();
            if *distinct {
                let mut seen = alloc::collections::BTreeSet::new();
                projected.retain(|m| seen.insert(m.clone()));
            }
            let start = offset.unwrap_or(0) as usize;
            let take = limit.map_or(usize::MAX, |l| l as usize);
            projected.into_iter().skip(start).take(take).collect()
        }
    })
}

/// Partitions by the key restriction; one mapping per group. With no keys
/// an empty input still forms one group.
pub(crate) fn group_agg(input: &SolutionBag, keys: &[Var], aggs: &[Aggregation]) -> SolutionBag {
    let mut groups: BTreeMap<Mapping, Vec<(&Mapping, usize)>> = BTreeMap::new();
    if keys.is_empty() {
        groups.insert(Mapping::new(), Vec::new());
    }
    for (m, c) in input.iter() {
        groups.entry(m.restrict(keys)).or_default().push((m, c));
    }
    let mut out = SolutionBag::new();
    for (key, members) in groups {
        let mut row = key;
        for a in aggs {
            let mut values: Vec<&Term> = Vec::new();
            for (m, c) in &members {
                if let Some(t) = m.get(&a.source) {
                    values.extend(core::iter::repeat_n(t, *c));
                }
            }
            if let Some(v) = aggregate(a.func, a.distinct, &values) {
                row.insert(a.target.clone(), v);
            }
        }
        out.add(row, 1);
    }
    out
}

