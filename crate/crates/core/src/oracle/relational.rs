use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::condition::Condition;
use crate::frame::{Aggregation, Direction, Frame, JoinType, OpRecord, SortOrder};
use crate::store::{Dataset, GraphStore, PatternTerm, TriplePattern};
use crate::term::{order_cmp_opt, Iri, Term};
use crate::var::Var;
use crate::EvalError;

use super::table::{ResultTable, Row};
use super::aggregate;

/// Evaluates a frame's queue operator by operator with bag-relational
/// operators over tables. Shares no code with the pattern evaluator beyond
/// condition and aggregate value semantics.
pub fn eval_frame_relational(frame: &Frame, data: &Dataset) -> Result<ResultTable, EvalError> {
    let mut table: Option<ResultTable> = None;
    let mut group: Option<(Vec<Var>, ResultTable, Vec<Aggregation>)> = None;
    for op in frame.ops() {
        let current = table.take();
        let cur = || current.clone().ok_or_else(|| EvalError::Unsupported("operator before seed".into()));
        let next = match op {
            OpRecord::Seed { graph, pattern } => {
                let mut cols = Vec::new();
                for p in pattern {
                    if let PatternTerm::Var(v) = p {
                        if !cols.contains(v) {
                            cols.push(v.clone());
                        }
                    }
                }
                scan(store(data, graph)?, pattern, &cols)
            }
            OpRecord::Expand { graph, column, predicate, new_column, direction, optional } => {
                let pred = PatternTerm::Term(Term::Iri(predicate.clone()));
                let (x, y) = (PatternTerm::Var(column.clone()), PatternTerm::Var(new_column.clone()));
                let pattern = match direction {
                    Direction::Outgoing => [x, pred, y],
                    Direction::Incoming => [y, pred, x],
                };
                let edges = scan(store(data, graph)?, &pattern, &[column.clone(), new_column.clone()]);
                if *optional {
                    cur()?.left_outer_join(&edges)
                } else {
                    cur()?.natural_join(&edges)
                }
            }
            OpRecord::Filter(filters) => {
                let conds: Vec<(Var, Condition)> = filters
                    .iter()
                    .flat_map(|f| f.conditions.iter().map(|c| (f.column.clone(), c.clone())))
                    .collect();
                cur()?.select(&conds)?
            }
            OpRecord::SelectCols(cols) => cur()?.project(cols),
            OpRecord::Join { other, column, other_column, kind, new_column } => {
                let mine = cur()?.rename(column, new_column);
                let theirs = eval_frame_relational(other, data)?.rename(other_column, new_column);
                match kind {
                    JoinType::Inner => mine.natural_join(&theirs),
                    JoinType::LeftOuter => mine.left_outer_join(&theirs),
                    JoinType::RightOuter => theirs.left_outer_join(&mine),
                    JoinType::FullOuter => mine.left_outer_join(&theirs).union_padded(&theirs.left_outer_join(&mine)),
                }
            }
            OpRecord::GroupBy(keys) => {
                group = Some((keys.clone(), cur()?, Vec::new()));
                cur()?
            }
            OpRecord::Aggregation(agg) => {
                let (keys, input, aggs) = group.as_mut().ok_or_else(|| EvalError::Unsupported("aggregation without group_by".into()))?;
                aggs.push(agg.clone());
                input.group(keys, aggs)
            }
            OpRecord::Aggregate(agg) => cur()?.group(&[], core::slice::from_ref(agg)),
            OpRecord::Sort(keys) => cur()?.sort(keys),
            OpRecord::Head { limit, offset } => cur()?.slice(*limit, *offset),
        };
        if !matches!(op, OpRecord::GroupBy(_) | OpRecord::Aggregation(_)) {
            group = None;
        }
        table = Some(next);
    }
    let table = table.ok_or_else(|| EvalError::Unsupported("empty operator queue".into()))?;
    Ok(table.project(frame.columns()))
}

/// Textbook full outer join: each compatible pair once, plus the unmatched
/// rows of both sides padded with nulls.
pub fn full_outer_join_textbook(a: &ResultTable, b: &ResultTable) -> ResultTable {
    let mut out = a.left_outer_join(b);
    let cols = out.columns().to_vec();
    for rb in b.rows() {
        if !a.rows().iter().any(|ra| compatible(a, ra, b, rb)) {
            out.push(cols.iter().map(|c| b.index_of(c).and_then(|i| rb[i].clone())).collect());
        }
    }
    out
}

fn store<'a>(data: &'a Dataset, graph: &Iri) -> Result<&'a GraphStore, EvalError> {
    data.graph(graph).ok_or_else(|| EvalError::UnknownGraph(graph.as_str().into()))
}

fn scan(g: &GraphStore, pattern: &TriplePattern, cols: &[Var]) -> ResultTable {
    let mut t = ResultTable::empty(cols.to_vec());
    for triple in g.triples() {
        let pred = triple.predicate_term();
        let values = [triple.subject(), &pred, triple.object()];
        let mut row: Row = alloc::vec![None; cols.len()];
        let ok = pattern.iter().zip(values).all(|(p, val)| match p {
            PatternTerm::Term(term) => term == val,
            PatternTerm::Var(v) => {
                let i = cols.iter().position(|c| c == v).expect("pattern variable has a column");
                match &row[i] {
                    Some(prev) => prev == val,
                    None => {
                        row[i] = Some(val.clone());
                        true
                    }
                }
            }
        });
        if ok {
            t.push(row);
        }
    }
    t
}

/// Shared columns agree wherever both sides are non-null.
fn compatible(a: &ResultTable, ra: &Row, b: &ResultTable, rb: &Row) -> bool {
    a.columns().iter().enumerate().all(|(i, c)| match (b.index_of(c), &ra[i]) {
        (Some(j), Some(x)) => rb[j].as_ref().is_none_or(|y| x == y),
        _ => true,
    })
}

impl ResultTable {
    fn joined_columns(&self, other: &ResultTable) -> Vec<Var> {
        let mut cols = self.columns().to_vec();
        cols.extend(other.columns().iter().filter(|c| !self.columns().contains(c)).cloned());
        cols
    }

    fn merge_rows(&self, ra: &Row, other: &ResultTable, rb: &Row, cols: &[Var]) -> Row {
        cols.iter()
            .map(|c| {
                let left = self.index_of(c).and_then(|i| ra[i].clone());
                left.or_else(|| other.index_of(c).and_then(|j| rb[j].clone()))
            })
            .collect()
    }

    /// Natural join on shared columns where a null matches any value.
    pub fn natural_join(&self, other: &ResultTable) -> ResultTable {
        let cols = self.joined_columns(other);
        let mut out = ResultTable::empty(cols.clone());
        for ra in self.rows() {
            for rb in other.rows() {
                if compatible(self, ra, other, rb) {
                    out.push(self.merge_rows(ra, other, rb, &cols));
                }
            }
        }
        out
    }

    pub fn left_outer_join(&self, other: &ResultTable) -> ResultTable {
        let cols = self.joined_columns(other);
        let mut out = ResultTable::empty(cols.clone());
        let pad: Row = alloc::vec![None; other.columns().len()];
        for ra in self.rows() {
            let mut matched = false;
            for rb in other.rows() {
                if compatible(self, ra, other, rb) {
                    matched = true;
                    out.push(self.merge_rows(ra, other, rb, &cols));
                }
            }
            if !matched {
                out.push(self.merge_rows(ra, other, &pad, &cols));
            }
        }
        out
    }

    /// Bag union after padding both sides to the union of their columns.
    pub fn union_padded(&self, other: &ResultTable) -> ResultTable {
        let cols = self.joined_columns(other);
        let mut out = self.reorder(&cols);
        for r in other.reorder(&cols).into_rows() {
            out.push(r);
        }
        out
    }

    /// σ: keeps rows satisfying every condition. A null never satisfies a
    /// condition.
    pub fn select(&self, conds: &[(Var, Condition)]) -> Result<ResultTable, EvalError> {
        let idx: Vec<Option<usize>> = conds.iter().map(|(v, _)| self.index_of(v)).collect();
        let mut out = ResultTable::empty(self.columns().to_vec());
        for r in self.rows() {
            let mut keep = true;
            for ((_, c), i) in conds.iter().zip(&idx) {
                let value = i.and_then(|i| r[i].as_ref());
                match c.eval(value) {
                    Ok(true) => {}
                    Ok(false) => {
                        keep = false;
                        break;
                    }
                    Err(e) => return Err(EvalError::Unsupported(alloc::format!("raw condition `{}`", e.0))),
                }
            }
            if keep {
                out.push(r.clone());
            }
        }
        Ok(out)
    }

    /// π without duplicate elimination.
    pub fn project(&self, cols: &[Var]) -> ResultTable {
        self.reorder(cols)
    }

    /// ρ: renames a column. Renaming onto an existing column replaces it.
    pub fn rename(&self, from: &Var, to: &Var) -> ResultTable {
        if from == to {
            return self.clone();
        }
        let cols: Vec<Var> = self.columns().iter().filter(|c| *c != to).map(|c| if c == from { to.clone() } else { c.clone() }).collect();
        let source: Vec<Var> = cols.iter().map(|c| if c == to { from.clone() } else { c.clone() }).collect();
        let t = self.reorder(&source);
        ResultTable::new(cols, t.into_rows())
    }

    /// Adds column `to` holding a copy of `from`.
    pub fn extend(&self, to: &Var, from: &Var) -> ResultTable {
        let mut cols = self.columns().to_vec();
        let mut source = cols.clone();
        cols.push(to.clone());
        source.push(from.clone());
        let t = self.reorder(&source);
        ResultTable::new(cols, t.into_rows())
    }

    /// γ: one row per distinct key tuple (nulls group together). Without
    /// keys the whole table is one group, even when empty.
    pub fn group(&self, keys: &[Var], aggs: &[Aggregation]) -> ResultTable {
        let key_idx: Vec<Option<usize>> = keys.iter().map(|k| self.index_of(k)).collect();
        let mut groups: BTreeMap<Row, Vec<&Row>> = BTreeMap::new();
        if keys.is_empty() {
            groups.insert(Vec::new(), Vec::new());
        }
        for r in self.rows() {
            let key: Row = key_idx.iter().map(|i| i.and_then(|i| r[i].clone())).collect();
            groups.entry(key).or_default().push(r);
        }
        let mut cols = keys.to_vec();
        cols.extend(aggs.iter().map(|a| a.target.clone()));
        let mut out = ResultTable::empty(cols);
        for (key, members) in groups {
            let mut row = key;
            for a in aggs {
                let i = self.index_of(&a.source);
                let values: Vec<&Term> = members.iter().filter_map(|r| i.and_then(|i| r[i].as_ref())).collect();
                row.push(aggregate(a.func, a.distinct, &values));
            }
            out.push(row);
        }
        out
    }

    /// Stable sort; nulls first in ascending order.
    pub fn sort(&self, keys: &[(Var, SortOrder)]) -> ResultTable {
        let idx: Vec<(Option<usize>, SortOrder)> = keys.iter().map(|(k, o)| (self.index_of(k), *o)).collect();
        let mut rows = self.rows().to_vec();
        rows.sort_by(|a, b| {
            for (i, o) in &idx {
                let (x, y) = (i.and_then(|i| a[i].as_ref()), i.and_then(|i| b[i].as_ref()));
                let ord = order_cmp_opt(x, y);
                let ord = if *o == SortOrder::Desc { ord.reverse() } else { ord };
                if ord.is_ne() {
                    return ord;
                }
            }
            core::cmp::Ordering::Equal
        });
        ResultTable::new(self.columns().to_vec(), rows)
    }

    pub fn slice(&self, limit: u64, offset: u64) -> ResultTable {
        let rows = self.rows().iter().skip(offset as usize).take(limit as usize).cloned().collect();
        ResultTable::new(self.columns().to_vec(), rows)
    }
}
