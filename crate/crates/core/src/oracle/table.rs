use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::solution::{Mapping, SolutionBag};
use crate::term::Term;
use crate::var::Var;

/// One table row; `None` is the null marker for an unbound column.
pub type Row = Vec<Option<Term>>;

/// A relation with bag semantics: ordered columns, rows in no particular
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultTable {
    columns: Vec<Var>,
    rows: Vec<Row>,
}

impl ResultTable {
    /// Panics if a row's width differs from the column count.
    pub fn new(columns: Vec<Var>, rows: Vec<Row>) -> Self {
        assert!(rows.iter().all(|r| r.len() == columns.len()), "row width must match column count");
        ResultTable { columns, rows }
    }

    pub fn empty(columns: Vec<Var>) -> Self {
        ResultTable { columns, rows: Vec::new() }
    }

    pub fn columns(&self) -> &[Var] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, col: &Var) -> Option<usize> {
        self.columns.iter().position(|c| c == col)
    }

    pub fn push(&mut self, row: Row) {
        assert_eq!(row.len(), self.columns.len(), "row width must match column count");
        self.rows.push(row);
    }

    /// Row as a mapping; nulls are left out of the domain.
    pub fn row_mapping(&self, row: &Row) -> Mapping {
        self.columns.iter().zip(row).filter_map(|(c, v)| v.clone().map(|t| (c.clone(), t))).collect()
    }

    /// Columns reordered (and possibly dropped) to `cols`. Columns missing
    /// from the table come out null.
    pub fn reorder(&self, cols: &[Var]) -> ResultTable {
        let idx: Vec<Option<usize>> = cols.iter().map(|c| self.index_of(c)).collect();
        let rows = self.rows.iter().map(|r| idx.iter().map(|i| i.and_then(|i| r[i].clone())).collect()).collect();
        ResultTable { columns: cols.to_vec(), rows }
    }

    /// Rows sorted into a canonical order, for comparing bags.
    pub fn sorted_rows(&self) -> Vec<Row> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<String> = self.columns.iter().map(|c| String::from(c.as_str())).collect();
        writeln!(f, "{}", header.join("\t"))?;
        for r in &self.rows {
            let cells: Vec<String> = r
                .iter()
                .map(|v| match v {
                    Some(t) => alloc::format!("{t}"),
                    None => String::from("null"),
                })
                .collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// λ: one column per variable bound somewhere in the bag (in variable
/// order), one row per occurrence of each mapping.
pub fn solution_to_table(bag: &SolutionBag) -> ResultTable {
    let cols: Vec<Var> = bag.vars().into_iter().collect();
    solution_to_table_with(bag, &cols)
}

/// λ over an explicit column list. Variables outside `cols` are dropped.
pub fn solution_to_table_with(bag: &SolutionBag, cols: &[Var]) -> ResultTable {
    let mut rows = Vec::with_capacity(bag.len());
    for (m, count) in bag.iter() {
        let row: Row = cols.iter().map(|c| m.get(c).cloned()).collect();
        for _ in 0..count {
            rows.push(row.clone());
        }
    }
    ResultTable { columns: cols.to_vec(), rows }
}

/// Same column set (in any order) and the same multiset of rows once
/// columns are aligned by name. Nulls equal nulls.
pub fn bag_equal(a: &ResultTable, b: &ResultTable) -> bool {
    let ca: BTreeSet<&Var> = a.columns.iter().collect();
    let cb: BTreeSet<&Var> = b.columns.iter().collect();
    if ca != cb || a.columns.len() != b.columns.len() || a.len() != b.len() {
        return false;
    }
    a.sorted_rows() == b.reorder(&a.columns).sorted_rows()
}
