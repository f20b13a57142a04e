mod common;

use kgframe::program::Program;
use kgframe_core::frame::OpRecord;
use kgframe_core::{emit, generate, Direction, JoinType, SortOrder};
use proptest::prelude::*;

const HEAD: &str = "prefix ex: <http://example.org/>\ngraph g = <http://example.org/g>\n";

fn parse(body: &str) -> Program {
    Program::parse(&format!("{HEAD}{body}")).unwrap_or_else(|e| panic!("{e}"))
}

fn parse_err(body: &str) -> (usize, String) {
    let e = Program::parse(&format!("{HEAD}{body}")).unwrap_err();
    (e.line, e.message)
}

#[test]
fn expand_forms() {
    let p = parse(
        "a = g.seed('s', 'ex:p', 'o')\n\
         b = a.expand('s', 'ex:q', 'q', INCOMING, OPTIONAL)\n\
         c = a.expand('o', [('ex:r', 'r'), ('ex:t', 't', Optional), ('ex:u', 'u', IN, True)])\n",
    );
    let last = |f: &kgframe_core::Frame| f.ops().last().cloned().unwrap();
    match last(p.frame("b").unwrap()) {
        OpRecord::Expand { direction, optional, .. } => assert_eq!((direction, optional), (Direction::Incoming, true)),
        other => panic!("{other:?}"),
    }
    let c = p.frame("c").unwrap();
    assert_eq!(c.column_names(), ["s", "o", "r", "t", "u"]);
    match &c.ops()[3] {
        OpRecord::Expand { direction, optional, .. } => assert_eq!((*direction, *optional), (Direction::Incoming, true)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn join_forms() {
    let p = parse(
        "a = g.seed('s', 'ex:p', 'o')\n\
         b = g.seed('x', 'ex:q', 'y')\n\
         j1 = a.join(b, 's', 'x', LeftOuterJoin, 'k')\n\
         j2 = a.join(b, 's', 'x')\n\
         j3 = a.join(b, 's', join_col_name2='x', join_type=OuterJoin, new_col='n')\n",
    );
    let kind = |name: &str| match p.frame(name).unwrap().ops().last().unwrap() {
        OpRecord::Join { kind, new_column, .. } => (*kind, new_column.as_str().to_string()),
        other => panic!("{other:?}"),
    };
    assert_eq!(kind("j1"), (JoinType::LeftOuter, "k".into()));
    assert_eq!(kind("j2"), (JoinType::Inner, "s".into()));
    assert_eq!(kind("j3"), (JoinType::FullOuter, "n".into()));
}

#[test]
fn aggregation_sort_and_head() {
    let p = parse(
        "a = g.seed('s', 'ex:p', 'o')\n\
         grouped = a.group_by(['s']).count('o', 'n', unique=True).max('o', 'top')\n\
         whole = a.aggregate('avg', 'o', 'mean')\n\
         sorted = a.sort({'s': 'desc', 'o': 'ASC'}).head(5, offset=2)\n\
         listed = a.sort([('o', 'descending'), 's'])\n",
    );
    assert_eq!(p.frame("grouped").unwrap().column_names(), ["s", "n", "top"]);
    assert_eq!(p.frame("whole").unwrap().column_names(), ["mean"]);
    assert!(p.frame("whole").unwrap().is_terminal());
    let ops = p.frame("sorted").unwrap().ops();
    assert!(matches!(ops.last(), Some(OpRecord::Head { limit: 5, offset: 2 })));
    match &p.frame("listed").unwrap().ops()[1] {
        OpRecord::Sort(keys) => assert_eq!(keys.iter().map(|(_, o)| *o).collect::<Vec<_>>(), [SortOrder::Desc, SortOrder::Asc]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn output_selects_result_and_redefinition_shadows() {
    let p = parse("a = g.seed('s', 'ex:p', 'o')\nb = a.select_cols(['s'])\na = a.filter({'o': '>=3'})\noutput a\nc = b\n");
    assert_eq!(p.result_name(), "a");
    assert_eq!(p.result().describe(), "seed.filter");
    assert_eq!(p.frames().count(), 4);
}

#[test]
fn prefixes_reach_graphs_declared_earlier() {
    let p = Program::parse("graph g = <http://g>\nx = g.seed('s', 'late:p', 'o')\nprefix late: <http://late/>\n").unwrap();
    assert!(emit(&generate(p.result()).unwrap()).contains("late:p"));
}

#[test]
fn errors_name_their_line() {
    let cases = [
        ("a = g.seed('s', 'ex:p', 'o')\nb = a.bogus()\n", 4, "unknown frame method"),
        ("a = g.seed('s', 'ex:p', 'o'\n", 3, "expected"),
        ("a = g.seed('s, 'ex:p', 'o')\n", 3, "unterminated string"),
        ("a = g.seed(s='s', 'ex:p', 'o')\n", 3, "positional argument after keyword"),
        ("a = g.seed('s', 'ex:p', 'o')\nb = a.join(zz, 's')\n", 4, "unknown frame `zz`"),
        ("a = g\n", 3, "is a graph"),
        ("a = g.seed('s', 'ex:p', 'o')\noutput a\noutput a\n", 5, "second output"),
        ("a = g.seed('s', 'ex:p', 'o').head(1, wat=2)\n", 3, "unexpected keyword"),
        ("a = g.seed('s', 'ex:p', 'o').group_by(['s'])\n  .filter({'o': ['>1']})\n", 4, "group_by must be followed"),
        ("graph g = <http://other>\n", 3, "already defined"),
        ("a = g.seed('s', 'ex:p', 'o') $\n", 3, "unexpected character"),
    ];
    for (body, line, needle) in cases {
        let (l, msg) = parse_err(body);
        assert!(msg.contains(needle), "{body:?}: {msg}");
        assert_eq!(l, line, "{body:?}: {msg}");
    }
    assert!(Program::parse("").is_err());
    assert!(Program::parse("graph g = <http://g>\n").unwrap_err().message.contains("no frames"));
}

#[test]
fn shipped_programs_parse() {
    for name in ["prolific_actors", "movie_genres", "topic_modeling", "embedding_triples"] {
        let p = Program::parse(&common::read_program(&format!("{name}.kgf"))).unwrap();
        assert!(!p.result().columns().is_empty());
    }
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(text in "[a-z(){}\\[\\]'.,:=<> \n\\\\#0-9_]{0,80}") {
        let _ = Program::parse(&text);
    }

    #[test]
    fn compile_is_deterministic(threshold in 0i64..1000, optional in any::<bool>()) {
        let opt = if optional { ", OPTIONAL" } else { "" };
        let text = format!(
            "{HEAD}a = g.seed('s', 'ex:p', 'o').expand('o', [('ex:q', 'q'{opt})])\n.group_by(['s']).count('q', 'n')\n.filter({{'n': ['>={threshold}']}})\n"
        );
        let one = emit(&generate(Program::parse(&text).unwrap().result()).unwrap());
        let two = emit(&generate(Program::parse(&text).unwrap().result()).unwrap());
        prop_assert_eq!(one, two);
    }
}
