//! Lazy frame descriptors.
//!
//! A [`Frame`] records operator calls in a FIFO queue and tracks the column
//! set they produce. Nothing is evaluated here: a frame is a logical
//! description that the generator later compiles into a single query.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::condition::{parse_quoted_literal, Condition};
use crate::error::FrameError;
use crate::prefix::PrefixMap;
use crate::store::{PatternTerm, TriplePattern};
use crate::term::{Iri, Term, RDF_TYPE};
use crate::var::{is_valid_name, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `?col pred ?new`
    Outgoing,
    /// `?new pred ?col`
    Incoming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JoinType {
    Inner,
    LeftOuter,
    RightOuter,
    FullOuter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
    Sample,
}

impl AggFunc {
    pub fn sparql_name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Sample => "SAMPLE",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "count" => AggFunc::Count,
            "sum" => AggFunc::Sum,
            "avg" | "average" | "mean" => AggFunc::Avg,
            "min" => AggFunc::Min,
            "max" => AggFunc::Max,
            "sample" => AggFunc::Sample,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SortOrder {
    Asc,
    Desc,
}

/// How a filter on a column relates to the grouping of the frame it was
/// recorded on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Plain,
    /// On an aggregation result of the current grouping.
    Having,
    /// On a grouping column after aggregation; forces a nested query.
    PostGroup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnFilter {
    pub column: Var,
    /// Conjoined.
    pub conditions: Vec<Condition>,
    pub kind: FilterKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    pub func: AggFunc,
    pub source: Var,
    pub target: Var,
    pub distinct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpRecord {
    Seed {
        graph: Iri,
        pattern: TriplePattern,
    },
    Expand {
        graph: Iri,
        column: Var,
        predicate: Iri,
        new_column: Var,
        direction: Direction,
        optional: bool,
    },
    Filter(Vec<ColumnFilter>),
    SelectCols(Vec<Var>),
    Join {
        other: Arc<Frame>,
        column: Var,
        other_column: Var,
        kind: JoinType,
        new_column: Var,
    },
    GroupBy(Vec<Var>),
    Aggregation(Aggregation),
    /// Whole-frame aggregation; terminal.
    Aggregate(Aggregation),
    Sort(Vec<(Var, SortOrder)>),
    /// Terminal.
    Head {
        limit: u64,
        offset: u64,
    },
}

impl OpRecord {
    pub fn name(&self) -> &'static str {
        match self {
            OpRecord::Seed { .. } => "seed",
            OpRecord::Expand { .. } => "expand",
            OpRecord::Filter(_) => "filter",
            OpRecord::SelectCols(_) => "select_cols",
            OpRecord::Join { .. } => "join",
            OpRecord::GroupBy(_) => "group_by",
            OpRecord::Aggregation(_) => "aggregation",
            OpRecord::Aggregate(_) => "aggregate",
            OpRecord::Sort(_) => "sort",
            OpRecord::Head { .. } => "head",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Grouping {
    None,
    /// After group_by, before its first aggregation.
    Pending { keys: Vec<Var>, input: Vec<Var> },
    Grouped { keys: Vec<Var>, targets: Vec<Var>, input: Vec<Var>, open: bool },
}

/// Column bookkeeping derived from the queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameState {
    columns: Vec<Var>,
    grouping: Grouping,
    terminal: bool,
}

impl FrameState {
    fn empty() -> Self {
        FrameState { columns: Vec::new(), grouping: Grouping::None, terminal: false }
    }

    pub fn columns(&self) -> &[Var] {
        &self.columns
    }

    fn has(&self, v: &Var) -> bool {
        self.columns.contains(v)
    }

    fn require(&self, v: &Var) -> Result<(), FrameError> {
        if self.has(v) {
            Ok(())
        } else {
            Err(FrameError::UnknownColumn(v.as_str().to_string()))
        }
    }

    /// Applies one record, validating it against the current columns.
    pub fn apply(&self, op: &OpRecord) -> Result<FrameState, FrameError> {
        if self.terminal {
            return Err(FrameError::Terminal);
        }
        let seeded = !self.columns.is_empty();
        if matches!(op, OpRecord::Seed { .. }) == seeded {
            return Err(if seeded {
                FrameError::InvalidArgument("seed must be the first operator".into())
            } else {
                FrameError::InvalidArgument("frame must start with a seed".into())
            });
        }
        if matches!(self.grouping, Grouping::Pending { .. }) && !matches!(op, OpRecord::Aggregation(_)) {
            return Err(FrameError::GroupByWithoutAggregation);
        }
        let mut next = self.clone();
        if let Grouping::Grouped { open, .. } = &mut next.grouping {
            *open = false;
        }
        match op {
            OpRecord::Seed { pattern, .. } => {
                for pos in pattern {
                    match pos {
                        PatternTerm::Var(v) => {
                            if !next.columns.contains(v) {
                                next.columns.push(v.clone());
                            }
                        }
                        PatternTerm::Term(Term::BlankNode(_)) => {
                            return Err(FrameError::InvalidArgument(
                                "blank nodes are not allowed in seed patterns".into(),
                            ))
                        }
                        PatternTerm::Term(_) => {}
                    }
                }
                if next.columns.is_empty() {
                    return Err(FrameError::NoColumns);
                }
                if let PatternTerm::Term(t) = &pattern[1] {
                    if !t.is_iri() {
                        return Err(FrameError::InvalidArgument("seed predicate must be an IRI".into()));
                    }
                }
                if let PatternTerm::Term(Term::Literal(_)) = &pattern[0] {
                    return Err(FrameError::InvalidArgument("seed subject cannot be a literal".into()));
                }
            }
            OpRecord::Expand { column, new_column, .. } => {
                self.require(column)?;
                if self.has(new_column) {
                    return Err(FrameError::DuplicateColumn(new_column.as_str().to_string()));
                }
                next.columns.push(new_column.clone());
                next.grouping = Grouping::None;
            }
            OpRecord::Filter(filters) => {
                let mut post_group = false;
                for f in filters {
                    self.require(&f.column)?;
                    if f.kind == FilterKind::PostGroup {
                        post_group = true;
                    }
                }
                if post_group {
                    next.grouping = Grouping::None;
                }
            }
            OpRecord::SelectCols(cols) => {
                if cols.is_empty() {
                    return Err(FrameError::InvalidArgument("select_cols needs at least one column".into()));
                }
                for (i, c) in cols.iter().enumerate() {
                    self.require(c)?;
                    if cols[..i].contains(c) {
                        return Err(FrameError::DuplicateColumn(c.as_str().to_string()));
                    }
                }
                next.columns = cols.clone();
                if let Grouping::Grouped { keys, targets, .. } = &mut next.grouping {
                    keys.retain(|k| cols.contains(k));
                    targets.retain(|t| cols.contains(t));
                }
            }
            OpRecord::Join { other, column, other_column, kind, new_column } => {
                self.require(column)?;
                let theirs = other.columns();
                if !theirs.contains(other_column) {
                    return Err(FrameError::UnknownColumn(other_column.as_str().to_string()));
                }
                if matches!(other.state.grouping, Grouping::Pending { .. }) {
                    return Err(FrameError::GroupByWithoutAggregation);
                }
                let mine_rest = self.columns.iter().filter(|c| *c != column);
                let theirs_rest = theirs.iter().filter(|c| *c != other_column);
                if mine_rest.chain(theirs_rest).any(|c| c == new_column) {
                    return Err(FrameError::DuplicateColumn(new_column.as_str().to_string()));
                }
                next.columns = join_columns(&self.columns, column, theirs, other_column, *kind, new_column);
                next.grouping = Grouping::None;
            }
            OpRecord::GroupBy(keys) => {
                if keys.is_empty() {
                    return Err(FrameError::InvalidArgument("group_by needs at least one column".into()));
                }
                for (i, k) in keys.iter().enumerate() {
                    self.require(k)?;
                    if keys[..i].contains(k) {
                        return Err(FrameError::DuplicateColumn(k.as_str().to_string()));
                    }
                }
                next.grouping = Grouping::Pending { keys: keys.clone(), input: self.columns.clone() };
            }
            OpRecord::Aggregation(agg) => {
                let (keys, mut targets, input) = match &self.grouping {
                    Grouping::Pending { keys, input } => (keys.clone(), Vec::new(), input.clone()),
                    Grouping::Grouped { keys, targets, input, open: true } => {
                        (keys.clone(), targets.clone(), input.clone())
                    }
                    _ => return Err(FrameError::AggregationWithoutGroupBy),
                };
                if !input.contains(&agg.source) {
                    return Err(FrameError::UnknownColumn(agg.source.as_str().to_string()));
                }
                if input.contains(&agg.target) || targets.contains(&agg.target) {
                    return Err(FrameError::DuplicateColumn(agg.target.as_str().to_string()));
                }
                targets.push(agg.target.clone());
                next.columns = keys.iter().chain(&targets).cloned().collect();
                next.grouping = Grouping::Grouped { keys, targets, input, open: true };
            }
            OpRecord::Aggregate(agg) => {
                self.require(&agg.source)?;
                if !is_valid_name(agg.target.as_str()) {
                    return Err(FrameError::InvalidColumnName(agg.target.as_str().to_string()));
                }
                next.columns = vec![agg.target.clone()];
                next.grouping = Grouping::None;
                next.terminal = true;
            }
            OpRecord::Sort(keys) => {
                if keys.is_empty() {
                    return Err(FrameError::InvalidArgument("sort needs at least one column".into()));
                }
                for (c, _) in keys {
                    self.require(c)?;
                }
            }
            OpRecord::Head { .. } => {
                next.terminal = true;
            }
        }
        Ok(next)
    }
}

/// Result columns of a join. The join columns are replaced by `new_column`
/// in place; the preserved side (the right frame for right-outer joins)
/// supplies the leading columns.
pub fn join_columns(
    mine: &[Var],
    column: &Var,
    theirs: &[Var],
    other_column: &Var,
    kind: JoinType,
    new_column: &Var,
) -> Vec<Var> {
    let rename = |cols: &[Var], key: &Var| -> Vec<Var> {
        cols.iter().map(|c| if c == key { new_column.clone() } else { c.clone() }).collect()
    };
    let (mut first, second) = if kind == JoinType::RightOuter {
        (rename(theirs, other_column), rename(mine, column))
    } else {
        (rename(mine, column), rename(theirs, other_column))
    };
    for c in second {
        if !first.contains(&c) {
            first.push(c);
        }
    }
    first
}

/// Replays a queue from scratch, returning the final state.
pub fn replay(ops: &[OpRecord]) -> Result<FrameState, FrameError> {
    let mut state = FrameState::empty();
    for op in ops {
        state = state.apply(op)?;
    }
    Ok(state)
}

/// A knowledge graph handle: the graph IRI plus the prefixes used to
/// resolve names in operator arguments. Creating frames from it performs no
/// IO.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    iri: Iri,
    prefixes: PrefixMap,
}

impl KnowledgeGraph {
    pub fn new(iri: Iri) -> Self {
        KnowledgeGraph { iri, prefixes: PrefixMap::with_defaults() }
    }

    pub fn with_prefixes(iri: Iri, prefixes: PrefixMap) -> Self {
        KnowledgeGraph { iri, prefixes }
    }

    pub fn with_prefix(mut self, name: &str, namespace: &str) -> Self {
        self.prefixes.insert(name, namespace);
        self
    }

    pub fn iri(&self) -> &Iri {
        &self.iri
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    /// Each slot is a column name (`movie` or `?movie`), an `<iri>`, a
    /// prefixed name or a quoted literal.
    pub fn seed(&self, s: &str, p: &str, o: &str) -> Result<Frame, FrameError> {
        let pattern = [
            parse_slot(s, &self.prefixes)?,
            parse_slot(p, &self.prefixes)?,
            parse_slot(o, &self.prefixes)?,
        ];
        self.seed_pattern(pattern)
    }

    pub fn seed_pattern(&self, pattern: TriplePattern) -> Result<Frame, FrameError> {
        Frame::from_ops(
            vec![self.iri.clone()],
            self.prefixes.clone(),
            vec![OpRecord::Seed { graph: self.iri.clone(), pattern }],
        )
    }

    /// All `(domain, range)` pairs connected by `predicate`.
    pub fn feature_domain_range(&self, predicate: &str, domain: &str, range: &str) -> Result<Frame, FrameError> {
        self.seed(domain, predicate, range)
    }

    /// All instances of `class`.
    pub fn entities(&self, class: &str, column: &str) -> Result<Frame, FrameError> {
        let pattern = [
            PatternTerm::Var(Var::new(column.trim_start_matches('?'))?),
            PatternTerm::Term(Term::Iri(Iri::new(RDF_TYPE)?)),
            parse_slot(class, &self.prefixes)?,
        ];
        if pattern[2].as_var().is_some() {
            return Err(FrameError::InvalidArgument(alloc::format!("`{class}` is not a class IRI")));
        }
        self.seed_pattern(pattern)
    }

    /// `(class, frequency)` pairs: the number of instances of each class.
    pub fn explore_classes(&self) -> Result<Frame, FrameError> {
        let pattern = [
            PatternTerm::Var(Var::new("instance")?),
            PatternTerm::Term(Term::Iri(Iri::new(RDF_TYPE)?)),
            PatternTerm::Var(Var::new("class")?),
        ];
        self.seed_pattern(pattern)?.group_by(&["class"])?.count("instance", "frequency", false)
    }
}

/// Parses one seed position.
pub fn parse_slot(text: &str, prefixes: &PrefixMap) -> Result<PatternTerm, FrameError> {
    let s = text.trim();
    if let Some(body) = s.strip_prefix('<') {
        let iri = body.strip_suffix('>').ok_or_else(|| FrameError::InvalidArgument(s.to_string()))?;
        return Ok(PatternTerm::Term(Term::Iri(Iri::new(iri)?)));
    }
    if s.starts_with('"') {
        return parse_quoted_literal(s, prefixes)
            .map(PatternTerm::Term)
            .ok_or_else(|| FrameError::InvalidArgument(s.to_string()));
    }
    let name = s.strip_prefix('?').unwrap_or(s);
    if is_valid_name(name) {
        return Ok(PatternTerm::Var(Var::new(name)?));
    }
    if s.contains(':') {
        return Ok(PatternTerm::Term(Term::Iri(prefixes.expand(s)?)));
    }
    Err(FrameError::InvalidColumnName(s.to_string()))
}

fn column(name: &str) -> Result<Var, FrameError> {
    Var::new(name.trim_start_matches('?'))
}

/// A lazily evaluated table. Every operator returns a new frame; the
/// receiver is never modified, so a frame can be branched freely.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    graphs: Vec<Iri>,
    prefixes: PrefixMap,
    ops: Vec<OpRecord>,
    state: FrameState,
    cached: bool,
}

impl Frame {
    /// Builds a frame by replaying `ops`.
    pub fn from_ops(graphs: Vec<Iri>, prefixes: PrefixMap, ops: Vec<OpRecord>) -> Result<Frame, FrameError> {
        let state = replay(&ops)?;
        Ok(Frame { graphs, prefixes, ops, state, cached: false })
    }

    pub fn columns(&self) -> &[Var] {
        &self.state.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.state.columns.iter().map(Var::as_str).collect()
    }

    pub fn ops(&self) -> &[OpRecord] {
        &self.ops
    }

    pub fn graphs(&self) -> &[Iri] {
        &self.graphs
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn state(&self) -> &FrameState {
        &self.state
    }

    /// True while the frame's rows are the groups of its latest grouping,
    /// i.e. nothing has been recorded since that would need the grouped
    /// result as an input.
    pub fn is_grouped(&self) -> bool {
        matches!(self.state.grouping, Grouping::Grouped { .. })
    }

    /// True right after `group_by` or one of its aggregations, where a
    /// further aggregation extends the same grouping.
    pub fn accepts_aggregation(&self) -> bool {
        matches!(self.state.grouping, Grouping::Pending { .. } | Grouping::Grouped { open: true, .. })
    }

    pub fn grouping_columns(&self) -> &[Var] {
        match &self.state.grouping {
            Grouping::Pending { keys, .. } | Grouping::Grouped { keys, .. } => keys,
            Grouping::None => &[],
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.state.terminal
    }

    pub fn is_cached(&self) -> bool {
        self.cached
    }

    fn push(&self, op: OpRecord) -> Result<Frame, FrameError> {
        let state = self.state.apply(&op)?;
        let mut ops = self.ops.clone();
        ops.push(op);
        Ok(Frame { graphs: self.graphs.clone(), prefixes: self.prefixes.clone(), ops, state, cached: false })
    }

    /// Appends a pre-built record after validating it.
    pub fn append(&self, op: OpRecord) -> Result<Frame, FrameError> {
        self.push(op)
    }

    /// Marks the frame as a branch point. Derivations always copy the
    /// queue, so this is advisory and performs no materialization.
    pub fn cache(&self) -> Frame {
        let mut f = self.clone();
        f.cached = true;
        f
    }

    pub fn expand(&self, col: &str, predicate: &str, new_col: &str) -> Result<Frame, FrameError> {
        self.expand_with(col, predicate, new_col, Direction::Outgoing, false)
    }

    pub fn expand_with(
        &self,
        col: &str,
        predicate: &str,
        new_col: &str,
        direction: Direction,
        optional: bool,
    ) -> Result<Frame, FrameError> {
        let predicate = match parse_slot(predicate, &self.prefixes)? {
            PatternTerm::Term(Term::Iri(i)) => i,
            _ => return Err(FrameError::InvalidArgument(alloc::format!("`{predicate}` is not a predicate IRI"))),
        };
        self.push(OpRecord::Expand {
            graph: self.graphs[0].clone(),
            column: column(col)?,
            predicate,
            new_column: column(new_col)?,
            direction,
            optional,
        })
    }

    /// One expand per `(predicate, new_col, direction, optional)` entry, in
    /// order.
    pub fn expand_many(&self, col: &str, steps: &[(&str, &str, Direction, bool)]) -> Result<Frame, FrameError> {
        let mut f = self.clone();
        for (pred, new_col, dir, opt) in steps {
            f = f.expand_with(col, pred, new_col, *dir, *opt)?;
        }
        Ok(f)
    }

    /// Conditions use the compact string syntax of [`Condition::parse`].
    /// An empty map leaves the frame unchanged.
    pub fn filter(&self, conditions: &[(&str, &[&str])]) -> Result<Frame, FrameError> {
        let mut parsed = Vec::new();
        for (col, conds) in conditions {
            let conds = conds
                .iter()
                .map(|c| Condition::parse(c, &self.prefixes))
                .collect::<Result<Vec<_>, _>>()?;
            parsed.push((column(col)?, conds));
        }
        self.filter_conditions(parsed)
    }

    pub fn filter_conditions(&self, conditions: Vec<(Var, Vec<Condition>)>) -> Result<Frame, FrameError> {
        let mut filters = Vec::new();
        for (col, conds) in conditions {
            self.state.require(&col)?;
            if conds.is_empty() {
                continue;
            }
            let kind = match &self.state.grouping {
                Grouping::Grouped { targets, .. } if targets.contains(&col) => FilterKind::Having,
                Grouping::Grouped { .. } => FilterKind::PostGroup,
                _ => FilterKind::Plain,
            };
            filters.push(ColumnFilter { column: col, conditions: conds, kind });
        }
        if filters.is_empty() {
            if matches!(self.state.grouping, Grouping::Pending { .. }) {
                return Err(FrameError::GroupByWithoutAggregation);
            }
            if self.state.terminal {
                return Err(FrameError::Terminal);
            }
            return Ok(self.clone());
        }
        self.push(OpRecord::Filter(filters))
    }

    pub fn select_cols(&self, cols: &[&str]) -> Result<Frame, FrameError> {
        let cols = cols.iter().map(|c| column(c)).collect::<Result<Vec<_>, _>>()?;
        self.push(OpRecord::SelectCols(cols))
    }

    pub fn join(&self, other: &Frame, col: &str, other_col: &str, kind: JoinType, new_col: &str) -> Result<Frame, FrameError> {
        let op = OpRecord::Join {
            other: Arc::new(other.clone()),
            column: column(col)?,
            other_column: column(other_col)?,
            kind,
            new_column: column(new_col)?,
        };
        let mut f = self.push(op)?;
        for g in &other.graphs {
            if !f.graphs.contains(g) {
                f.graphs.push(g.clone());
            }
        }
        f.prefixes.absorb(&other.prefixes);
        Ok(f)
    }

    /// Joins on a column of the same name in both frames.
    pub fn join_on(&self, other: &Frame, col: &str, kind: JoinType) -> Result<Frame, FrameError> {
        self.join(other, col, col, kind, col)
    }

    pub fn group_by(&self, cols: &[&str]) -> Result<Frame, FrameError> {
        let cols = cols.iter().map(|c| column(c)).collect::<Result<Vec<_>, _>>()?;
        self.push(OpRecord::GroupBy(cols))
    }

    /// Adds an aggregation to the grouping recorded just before.
    pub fn aggregation(&self, func: AggFunc, col: &str, new_col: &str, distinct: bool) -> Result<Frame, FrameError> {
        self.push(OpRecord::Aggregation(Aggregation {
            func,
            source: column(col)?,
            target: column(new_col)?,
            distinct,
        }))
    }

    pub fn count(&self, col: &str, new_col: &str, distinct: bool) -> Result<Frame, FrameError> {
        self.aggregation(AggFunc::Count, col, new_col, distinct)
    }

    pub fn sum(&self, col: &str, new_col: &str) -> Result<Frame, FrameError> {
        self.aggregation(AggFunc::Sum, col, new_col, false)
    }

    pub fn avg(&self, col: &str, new_col: &str) -> Result<Frame, FrameError> {
        self.aggregation(AggFunc::Avg, col, new_col, false)
    }

    pub fn min(&self, col: &str, new_col: &str) -> Result<Frame, FrameError> {
        self.aggregation(AggFunc::Min, col, new_col, false)
    }

    pub fn max(&self, col: &str, new_col: &str) -> Result<Frame, FrameError> {
        self.aggregation(AggFunc::Max, col, new_col, false)
    }

    pub fn sample(&self, col: &str, new_col: &str) -> Result<Frame, FrameError> {
        self.aggregation(AggFunc::Sample, col, new_col, false)
    }

    /// Aggregates a whole column into a single value. Terminal.
    pub fn aggregate(&self, func: AggFunc, col: &str, new_col: &str, distinct: bool) -> Result<Frame, FrameError> {
        self.push(OpRecord::Aggregate(Aggregation {
            func,
            source: column(col)?,
            target: column(new_col)?,
            distinct,
        }))
    }

    pub fn sort(&self, keys: &[(&str, SortOrder)]) -> Result<Frame, FrameError> {
        let keys = keys.iter().map(|(c, o)| Ok((column(c)?, *o))).collect::<Result<Vec<_>, FrameError>>()?;
        self.push(OpRecord::Sort(keys))
    }

    /// First `k` rows after skipping `offset`. Terminal.
    pub fn head(&self, k: i64, offset: i64) -> Result<Frame, FrameError> {
        if k < 0 || offset < 0 {
            return Err(FrameError::InvalidArgument(alloc::format!("head({k}, {offset}): negative count")));
        }
        self.push(OpRecord::Head { limit: k as u64, offset: offset as u64 })
    }

    /// Operator names in queue order, e.g. `seed.expand.filter`.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (i, op) in self.ops.iter().enumerate() {
            if i > 0 {
                out.push('.');
            }
            out.push_str(op.name());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dbpedia() -> KnowledgeGraph {
        KnowledgeGraph::new(Iri::new("http://dbpedia.org").unwrap())
            .with_prefix("dbpp", "http://dbpedia.org/property/")
            .with_prefix("dbpo", "http://dbpedia.org/ontology/")
            .with_prefix("dbpr", "http://dbpedia.org/resource/")
    }

    fn names(f: &Frame) -> Vec<&str> {
        f.column_names()
    }

    #[test]
    fn seed_forms() {
        let g = dbpedia();
        let movies = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
        assert_eq!(names(&movies), ["movie", "actor"]);
        let papers = g.entities("dbpo:Film", "film").unwrap();
        assert_eq!(names(&papers), ["film"]);
        assert_eq!(g.seed("dbpr:a", "dbpp:b", "dbpr:c"), Err(FrameError::NoColumns));
        assert!(g.seed("x", "y", "x").is_ok());
    }

    #[test]
    fn listing_one_columns() {
        let g = dbpedia();
        let movies = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
        let american = movies
            .expand("actor", "dbpp:birthPlace", "country")
            .unwrap()
            .filter(&[("country", &["=dbpr:United_States"])])
            .unwrap();
        let prolific = american
            .group_by(&["actor"])
            .unwrap()
            .count("movie", "movie_count", true)
            .unwrap()
            .filter(&[("movie_count", &[">=50"])])
            .unwrap();
        assert!(prolific.is_grouped());
        match prolific.ops().last().unwrap() {
            OpRecord::Filter(f) => assert_eq!(f[0].kind, FilterKind::Having),
            other => panic!("{other:?}"),
        }
        let result = prolific
            .expand_many(
                "actor",
                &[
                    ("dbpp:starring", "movie", Direction::Incoming, false),
                    ("dbpp:academyAward", "award", Direction::Outgoing, true),
                ],
            )
            .unwrap();
        assert_eq!(names(&result), ["actor", "movie_count", "movie", "award"]);
        assert!(!result.is_grouped());
        assert_eq!(movies.ops().len(), 1);
        assert_eq!(american.ops().len(), 3);
    }

    #[test]
    fn expand_errors() {
        let g = dbpedia();
        let movies = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
        assert!(matches!(movies.expand("nope", "dbpp:x", "y"), Err(FrameError::UnknownColumn(_))));
        assert!(matches!(movies.expand("movie", "dbpp:x", "actor"), Err(FrameError::DuplicateColumn(_))));
        assert!(matches!(movies.expand("movie", "zz:x", "y"), Err(FrameError::UnknownPrefix(_))));
    }

    #[test]
    fn filter_kinds_and_identity() {
        let g = dbpedia();
        let movies = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
        assert_eq!(movies.filter(&[]).unwrap(), movies);
        assert!(matches!(movies.filter(&[("zzz", &["isURI"])]), Err(FrameError::UnknownColumn(_))));
        let grouped = movies.group_by(&["actor"]).unwrap().count("movie", "n", false).unwrap();
        let post = grouped.filter(&[("actor", &["isURI"])]).unwrap();
        match post.ops().last().unwrap() {
            OpRecord::Filter(f) => assert_eq!(f[0].kind, FilterKind::PostGroup),
            other => panic!("{other:?}"),
        }
        assert!(!post.is_grouped());
    }

    #[test]
    fn grouping_protocol() {
        let g = dbpedia();
        let movies = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
        assert_eq!(movies.count("movie", "n", false), Err(FrameError::AggregationWithoutGroupBy));
        let pending = movies.group_by(&["actor"]).unwrap();
        assert_eq!(
            pending.expand("actor", "dbpp:x", "y"),
            Err(FrameError::GroupByWithoutAggregation)
        );
        let two = pending.count("movie", "n", false).unwrap().max("movie", "top").unwrap();
        assert_eq!(names(&two), ["actor", "n", "top"]);
        let sorted = two.sort(&[("n", SortOrder::Desc)]).unwrap();
        assert_eq!(sorted.count("movie", "m", false), Err(FrameError::AggregationWithoutGroupBy));
        assert!(matches!(pending.count("movie", "actor", false), Err(FrameError::DuplicateColumn(_))));
    }

    #[test]
    fn terminal_operators() {
        let g = dbpedia();
        let movies = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
        let n = movies.aggregate(AggFunc::Count, "movie", "n", false).unwrap();
        assert_eq!(names(&n), ["n"]);
        assert!(n.is_terminal());
        assert_eq!(n.expand("n", "dbpp:x", "y"), Err(FrameError::Terminal));
        let top = movies.head(3, 0).unwrap();
        assert_eq!(top.sort(&[("movie", SortOrder::Asc)]), Err(FrameError::Terminal));
        assert!(movies.head(-1, 0).is_err());
        assert!(movies.head(0, 0).is_ok());
    }

    #[test]
    fn join_columns_and_graphs() {
        let g = dbpedia();
        let other = KnowledgeGraph::new(Iri::new("http://other").unwrap())
            .with_prefix("ex", "http://example.org/");
        let a = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
        let b = other.feature_domain_range("ex:knows", "person", "friend").unwrap();
        let j = a.join(&b, "actor", "person", JoinType::Inner, "who").unwrap();
        assert_eq!(names(&j), ["movie", "who", "friend"]);
        assert_eq!(j.graphs().len(), 2);
        assert!(j.prefixes().get("ex").is_some());
        let r = a.join(&b, "actor", "person", JoinType::RightOuter, "who").unwrap();
        assert_eq!(names(&r), ["who", "friend", "movie"]);
        assert!(matches!(
            a.join(&b, "actor", "person", JoinType::Inner, "movie"),
            Err(FrameError::DuplicateColumn(_))
        ));
        let natural = a.join_on(&a, "actor", JoinType::Inner).unwrap();
        assert_eq!(names(&natural), ["movie", "actor"]);
    }

    #[test]
    fn replay_matches_stored_columns() {
        let g = dbpedia();
        let f = g
            .feature_domain_range("dbpp:starring", "movie", "actor")
            .unwrap()
            .expand("actor", "dbpp:birthPlace", "country")
            .unwrap()
            .group_by(&["country"])
            .unwrap()
            .count("actor", "n", true)
            .unwrap()
            .select_cols(&["n"])
            .unwrap();
        assert_eq!(replay(f.ops()).unwrap(), *f.state());
    }

    #[test]
    fn explore_classes_shape() {
        let f = dbpedia().explore_classes().unwrap();
        assert_eq!(names(&f), ["class", "frequency"]);
        assert_eq!(f.describe(), "seed.group_by.aggregation");
    }

    #[test]
    fn cache_is_advisory() {
        let g = dbpedia();
        let base = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap().cache();
        let a = base.filter(&[("actor", &["isURI"])]).unwrap();
        let b = base.group_by(&["actor"]).unwrap().count("movie", "n", false).unwrap();
        assert_eq!(base.ops().len(), 1);
        assert_eq!(a.ops().len(), 2);
        assert_eq!(b.ops().len(), 3);
        assert_eq!(a.ops()[0], b.ops()[0]);
        assert!(base.is_cached());
        assert!(!a.is_cached());
    }
}
