//! Random stores and operator programs for differential testing.
//!
//! Programs only use conditions the reference evaluator understands (no raw
//! text). `head` is only emitted right after a sort over every column so
//! the sliced rows are determined by the data alone.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::condition::Condition;
use crate::frame::{AggFunc, Aggregation, Direction, Frame, JoinType, KnowledgeGraph, SortOrder};
use crate::model::GraphTriple;
use crate::oracle::Pattern;
use crate::store::{Dataset, GraphStore, PatternTerm};
use crate::var::Var;
use crate::term::{Iri, Literal, Term, Triple};

pub const NS: &str = "http://example.org/";
pub const GRAPH_A: &str = "http://example.org/graph/a";
pub const GRAPH_B: &str = "http://example.org/graph/b";

const PREDICATES: &[&str] = &["p0", "p1", "p2", "p3"];
const ENTITIES: usize = 4;

pub fn graph_a() -> KnowledgeGraph {
    KnowledgeGraph::new(Iri::new(GRAPH_A).expect("valid iri")).with_prefix("ex", NS)
}

pub fn graph_b() -> KnowledgeGraph {
    KnowledgeGraph::new(Iri::new(GRAPH_B).expect("valid iri")).with_prefix("ex", NS)
}

fn entity(i: usize) -> Term {
    Term::iri(&format!("{NS}e{i}")).expect("valid iri")
}

fn random_object<R: Rng>(rng: &mut R) -> Term {
    match rng.random_range(0..10) {
        0..=6 => entity(rng.random_range(0..ENTITIES)),
        7..=8 => Term::Literal(Literal::integer(rng.random_range(0..6))),
        _ => Term::Literal(Literal::simple(["a", "b", "ab"][rng.random_range(0..3)])),
    }
}

/// A store with up to `max_triples` triples. Both graphs always exist;
/// the second only receives triples when `two_graphs` is set, and then
/// about a quarter of them.
pub fn random_store<R: Rng>(rng: &mut R, max_triples: usize, two_graphs: bool) -> Dataset {
    let mut data = Dataset::new();
    for name in [GRAPH_A, GRAPH_B] {
        data.insert_graph(GraphStore::new(Iri::new(name).expect("valid iri")));
    }
    let n = rng.random_range(max_triples / 2..=max_triples);
    for _ in 0..n {
        let s = entity(rng.random_range(0..ENTITIES));
        let p = Iri::new(format!("{NS}{}", PREDICATES.choose(rng).expect("non-empty"))).expect("valid iri");
        let t = Triple::new(s, p, random_object(rng)).expect("entity subject");
        let g = if two_graphs && rng.random_bool(0.25) { GRAPH_B } else { GRAPH_A };
        let g = Iri::new(g).expect("valid iri");
        data.graph_mut(&g).insert(t);
    }
    data
}

struct Names(usize);

impl Names {
    fn fresh(&mut self, base: &str) -> String {
        self.0 += 1;
        format!("{base}{}", self.0)
    }
}

fn pick_col<R: Rng>(rng: &mut R, f: &Frame) -> String {
    String::from(f.columns().choose(rng).expect("frames have columns").as_str())
}

fn random_condition<R: Rng>(rng: &mut R) -> String {
    let e = rng.random_range(0..ENTITIES);
    let n = rng.random_range(0..6);
    match rng.random_range(0..12) {
        0 | 1 => format!("!=ex:e{e}"),
        2 => format!("=ex:e{e}"),
        3 => format!(">={n}"),
        4 => format!("<{n}"),
        5 | 6 => String::from("isURI"),
        7 => String::from("isLiteral"),
        8 | 9 => format!("In(ex:e{e}, ex:e{}, {n})", (e + 1) % ENTITIES),
        10 => String::from("regex:^a"),
        _ => String::from("<=5"),
    }
}

fn random_seed<R: Rng>(rng: &mut R, kg: &KnowledgeGraph, names: &mut Names, shared: bool) -> Frame {
    let pred = format!("ex:{}", PREDICATES.choose(rng).expect("non-empty"));
    let (s, o) = if shared { (String::from("s"), String::from("o")) } else { (names.fresh("s"), names.fresh("o")) };
    let attempt = match rng.random_range(0..6) {
        0 => kg.seed(&s, &pred, &format!("ex:e{}", rng.random_range(0..ENTITIES))),
        1 => kg.seed(&s, &names.fresh("p"), &o),
        _ => kg.seed(&s, &pred, &o),
    };
    attempt.expect("seed arguments are well formed")
}

fn random_aggregation<R: Rng>(rng: &mut R) -> (AggFunc, bool) {
    let func = *[AggFunc::Count, AggFunc::Count, AggFunc::Sum, AggFunc::Avg, AggFunc::Min, AggFunc::Max, AggFunc::Sample]
        .choose(rng)
        .expect("non-empty");
    (func, func == AggFunc::Count && rng.random_bool(0.5))
}

/// A program of at most `depth` operators after its seed. Operators the
/// frame rejects are skipped, so the result is always valid.
pub fn random_program<R: Rng>(rng: &mut R, depth: usize, allow_join: bool) -> Frame {
    let mut names = Names(0);
    build(rng, depth, allow_join, &mut names, false)
}

fn pick_graph_b<R: Rng>(rng: &mut R) -> bool {
    rng.random_bool(0.1)
}

fn build<R: Rng>(rng: &mut R, depth: usize, allow_join: bool, names: &mut Names, shared: bool) -> Frame {
    let kg = if pick_graph_b(rng) { graph_b() } else { graph_a() };
    let mut f = random_seed(rng, &kg, names, shared);
    let mut ops = 0;
    while ops < depth && !f.is_terminal() {
        let choice = rng.random_range(0..20);
        let next = match choice {
            0..=5 => {
                let dir = if rng.random_bool(0.3) { Direction::Incoming } else { Direction::Outgoing };
                let pred = format!("ex:{}", PREDICATES.choose(rng).expect("non-empty"));
                let col = pick_col(rng, &f);
                f.expand_with(&col, &pred, &names.fresh("x"), dir, rng.random_bool(0.4))
            }
            6..=8 => {
                let col = pick_col(rng, &f);
                let cond = random_condition(rng);
                f.filter(&[(col.as_str(), &[cond.as_str()])])
            }
            9 => {
                let mut cols: Vec<String> = f.columns().iter().map(|c| String::from(c.as_str())).collect();
                cols.retain(|_| rng.random_bool(0.7));
                if cols.is_empty() {
                    cols.push(pick_col(rng, &f));
                }
                let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
                f.select_cols(&refs)
            }
            10..=12 if allow_join => {
                let (depth, shared) = (rng.random_range(0..=2), rng.random_bool(0.3));
                let other = build(rng, depth, false, names, shared);
                let kind = *[JoinType::Inner, JoinType::Inner, JoinType::LeftOuter, JoinType::RightOuter, JoinType::FullOuter]
                    .choose(rng)
                    .expect("non-empty");
                let col = pick_col(rng, &f);
                let col2 = pick_col(rng, &other);
                let new = if rng.random_bool(0.7) { col.clone() } else { names.fresh("j") };
                f.join(&other, &col, &col2, kind, &new)
            }
            13..=15 => {
                let mut keys: Vec<String> = f.columns().iter().map(|c| String::from(c.as_str())).collect();
                keys.retain(|_| rng.random_bool(0.5));
                if keys.is_empty() {
                    keys.push(pick_col(rng, &f));
                }
                let refs: Vec<&str> = keys.iter().map(String::as_str).collect();
                let input: Vec<String> = f.columns().iter().map(|c| String::from(c.as_str())).collect();
                f.group_by(&refs).and_then(|g| {
                    let mut g = g;
                    for _ in 0..rng.random_range(1..=2) {
                        let (func, distinct) = random_aggregation(rng);
                        let src = input.choose(rng).expect("non-empty").clone();
                        g = g.aggregation(func, &src, &names.fresh("agg"), distinct)?;
                    }
                    if rng.random_bool(0.4) {
                        let target = String::from(g.columns().last().expect("target").as_str());
                        let cond = format!(">={}", rng.random_range(0..3));
                        g = g.filter(&[(target.as_str(), &[cond.as_str()])])?;
                    }
                    Ok(g)
                })
            }
            16 => {
                let (func, distinct) = random_aggregation(rng);
                let col = pick_col(rng, &f);
                f.aggregate(func, &col, &names.fresh("total"), distinct)
            }
            17 => {
                let keys: Vec<(String, SortOrder)> = f
                    .columns()
                    .iter()
                    .map(|c| (String::from(c.as_str()), if rng.random_bool(0.5) { SortOrder::Asc } else { SortOrder::Desc }))
                    .collect();
                let refs: Vec<(&str, SortOrder)> = keys.iter().map(|(c, o)| (c.as_str(), *o)).collect();
                f.sort(&refs).and_then(|s| s.head(rng.random_range(1..5), rng.random_range(0..3)))
            }
            _ => {
                let col = pick_col(rng, &f);
                f.expand(&col, &format!("ex:{}", PREDICATES.choose(rng).expect("non-empty")), &names.fresh("x"))
            }
        };
        if let Ok(n) = next {
            f = n;
            ops += 1;
        }
    }
    f
}

/// A program of `k` operator records: the seed followed by `k - 1`
/// alternating expands and filters on fresh columns. This is the flat shape
/// that needs no nesting.
pub fn chain_program(k: usize) -> Frame {
    let kg = graph_a();
    let mut f = kg.seed("c0", "ex:p0", "c1").expect("valid seed");
    let mut last = 1;
    for i in 1..k {
        f = if i % 2 == 1 {
            last += 1;
            f.expand(&format!("c{}", last - 1), "ex:p1", &format!("c{last}")).expect("fresh column")
        } else {
            f.filter(&[(format!("c{last}").as_str(), &["isURI"])]).expect("known column")
        };
    }
    f
}

const PATTERN_VARS: &[&str] = &["a", "b", "c", "d"];

fn pattern_slot<R: Rng>(rng: &mut R, object: bool) -> PatternTerm {
    if rng.random_bool(0.8) {
        PatternTerm::Var(Var::new(*PATTERN_VARS.choose(rng).expect("non-empty")).expect("valid name"))
    } else if object {
        PatternTerm::Term(random_object(rng))
    } else {
        PatternTerm::Term(entity(rng.random_range(0..ENTITIES)))
    }
}

/// A random triple pattern over graph A with variables from a small pool.
pub fn random_triple<R: Rng>(rng: &mut R) -> GraphTriple {
    let pred = Term::iri(&format!("{NS}{}", PREDICATES.choose(rng).expect("non-empty"))).expect("valid iri");
    let p = if rng.random_bool(0.15) { pattern_slot(rng, false) } else { PatternTerm::Term(pred) };
    GraphTriple { pattern: [pattern_slot(rng, false), p, pattern_slot(rng, true)], graph: Iri::new(GRAPH_A).expect("valid iri") }
}

/// A random pattern built from triples with joins, left joins, unions and
/// filters, nested at most `depth` deep.
pub fn random_pattern<R: Rng>(rng: &mut R, depth: usize) -> Pattern {
    if depth == 0 || rng.random_bool(0.35) {
        return Pattern::Triple(random_triple(rng));
    }
    let sub = |rng: &mut R| Box::new(random_pattern(rng, depth - 1));
    match rng.random_range(0..5) {
        0 | 1 => Pattern::Join(sub(rng), sub(rng)),
        2 => Pattern::LeftJoin(sub(rng), sub(rng), Vec::new()),
        3 => Pattern::Union(sub(rng), sub(rng)),
        _ => {
            let inner = sub(rng);
            Pattern::Filter(alloc::vec![random_filter(rng)], inner)
        }
    }
}

/// A single-variable condition over the pattern variable pool.
pub fn random_filter<R: Rng>(rng: &mut R) -> (Var, Condition) {
    let v = Var::new(*PATTERN_VARS.choose(rng).expect("non-empty")).expect("valid name");
    let prefixes = graph_a().prefixes().clone();
    let cond = Condition::parse(&random_condition(rng), &prefixes).expect("generated conditions parse");
    (v, cond)
}

pub fn pattern_var<R: Rng>(rng: &mut R) -> Var {
    Var::new(*PATTERN_VARS.choose(rng).expect("non-empty")).expect("valid name")
}

pub fn random_agg<R: Rng>(rng: &mut R, target: &str) -> Aggregation {
    let (func, distinct) = random_aggregation(rng);
    Aggregation { func, source: pattern_var(rng), target: Var::new(target).expect("valid name"), distinct }
}

/// One of the operator equivalences between the pattern algebra and the
/// relational operators on λ-converted inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equivalence {
    Join,
    LeftJoin,
    Union,
    Extend,
    Filter,
    Project,
    GroupAggregate,
}

impl Equivalence {
    pub const ALL: [Equivalence; 7] = [
        Equivalence::Join,
        Equivalence::LeftJoin,
        Equivalence::Union,
        Equivalence::Extend,
        Equivalence::Filter,
        Equivalence::Project,
        Equivalence::GroupAggregate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Equivalence::Join => "join",
            Equivalence::LeftJoin => "left join",
            Equivalence::Union => "union",
            Equivalence::Extend => "extend",
            Equivalence::Filter => "filter",
            Equivalence::Project => "project",
            Equivalence::GroupAggregate => "group aggregate",
        }
    }

    /// Draws random operands and checks that λ of the combined pattern
    /// equals the relational operator applied to λ of the operands. The
    /// combined bag may bind no variable outside the relational columns.
    pub fn holds<R: Rng>(self, rng: &mut R, data: &Dataset) -> Result<bool, crate::EvalError> {
        use crate::oracle::{bag_equal, eval_pattern, solution_to_table, solution_to_table_with};
        let table = |p: &Pattern| eval_pattern(p, data).map(|b| solution_to_table(&b));
        let p1 = random_pattern(rng, 2);
        let (rel, combined) = match self {
            Equivalence::Join | Equivalence::LeftJoin | Equivalence::Union => {
                let p2 = random_pattern(rng, 2);
                let (a, b) = (table(&p1)?, table(&p2)?);
                let (p1, p2) = (Box::new(p1), Box::new(p2));
                match self {
                    Equivalence::Join => (a.natural_join(&b), Pattern::Join(p1, p2)),
                    Equivalence::LeftJoin => (a.left_outer_join(&b), Pattern::LeftJoin(p1, p2, Vec::new())),
                    _ => (a.union_padded(&b), Pattern::Union(p1, p2)),
                }
            }
            Equivalence::Extend => {
                let src = pattern_var(rng);
                let new = Var::new("z").expect("valid name");
                (table(&p1)?.extend(&new, &src), Pattern::Extend(new, src, Box::new(p1)))
            }
            Equivalence::Filter => {
                let cond = random_filter(rng);
                (table(&p1)?.select(core::slice::from_ref(&cond))?, Pattern::Filter(alloc::vec![cond], Box::new(p1)))
            }
            Equivalence::Project => {
                let mut cols: Vec<Var> =
                    PATTERN_VARS.iter().map(|n| Var::new(*n).expect("valid name")).filter(|_| rng.random_bool(0.5)).collect();
                if cols.is_empty() {
                    cols.push(pattern_var(rng));
                }
                (table(&p1)?.project(&cols), Pattern::Project(cols, Box::new(p1)))
            }
            Equivalence::GroupAggregate => {
                let keys: Vec<Var> =
                    PATTERN_VARS[..2].iter().map(|n| Var::new(*n).expect("valid name")).filter(|_| rng.random_bool(0.5)).collect();
                let agg = random_agg(rng, "z");
                let rel = table(&p1)?.group(&keys, core::slice::from_ref(&agg));
                (rel, Pattern::GroupAgg { keys, aggs: alloc::vec![agg], input: Box::new(p1) })
            }
        };
        let bag = eval_pattern(&combined, data)?;
        Ok(bag.vars().iter().all(|v| rel.columns().contains(v)) && bag_equal(&solution_to_table_with(&bag, rel.columns()), &rel))
    }

    /// Seeds `0..pairs`, each with a fresh store of at most 20 triples.
    /// Returns the seeds that failed.
    pub fn run(self, pairs: u64) -> Vec<u64> {
        use rand::SeedableRng;
        (0..pairs)
            .filter(|&seed| {
                let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
                let data = random_store(&mut rng, 20, false);
                !matches!(self.holds(&mut rng, &data), Ok(true))
            })
            .collect()
    }
}
