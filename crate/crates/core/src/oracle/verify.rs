use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{bag_equal, eval_frame_relational, eval_model, solution_to_table_with, ResultTable, Row};
use crate::frame::Frame;
use crate::model::QueryModel;
use crate::store::Dataset;
use crate::EvalError;

/// The two sides of one equivalence check: the relational evaluation of a
/// frame and λ of the bag evaluation of a model compiled from it.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub expected: ResultTable,
    pub actual: ResultTable,
    /// Structural problems found before comparing rows.
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Difference {
    /// A row occurs more often on the relational side.
    Missing { row: Row, expected: usize, actual: usize },
    /// A row occurs more often on the model side.
    Extra { row: Row, expected: usize, actual: usize },
}

impl Comparison {
    pub fn holds(&self) -> bool {
        self.problems.is_empty() && bag_equal(&self.expected, &self.actual)
    }

    /// The smallest row (in term order) whose multiplicity differs.
    pub fn first_difference(&self) -> Option<Difference> {
        let a = counts(&self.expected);
        let b = counts(&self.actual.reorder(self.expected.columns()));
        let mut keys: Vec<&Row> = a.keys().chain(b.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter().find_map(|row| {
            let (e, g) = (a.get(row).copied().unwrap_or(0), b.get(row).copied().unwrap_or(0));
            match e.cmp(&g) {
                core::cmp::Ordering::Greater => Some(Difference::Missing { row: row.clone(), expected: e, actual: g }),
                core::cmp::Ordering::Less => Some(Difference::Extra { row: row.clone(), expected: e, actual: g }),
                core::cmp::Ordering::Equal => None,
            }
        })
    }
}

fn counts(t: &ResultTable) -> BTreeMap<Row, usize> {
    let mut m = BTreeMap::new();
    for r in t.rows() {
        *m.entry(r.clone()).or_insert(0) += 1;
    }
    m
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, row, e, g) = match self {
            Difference::Missing { row, expected, actual } => ("missing", row, expected, actual),
            Difference::Extra { row, expected, actual } => ("unexpected", row, expected, actual),
        };
        write!(f, "{kind} row (")?;
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match v {
                Some(t) => write!(f, "{t}")?,
                None => f.write_str("null")?,
            }
        }
        write!(f, "): relational x{e}, query x{g}")
    }
}

/// Evaluates `frame` relationally and `model` under bag semantics over the
/// same data, with λ taken over the frame's columns.
pub fn compare_model(frame: &Frame, model: &QueryModel, data: &Dataset) -> Result<Comparison, EvalError> {
    let mut problems = Vec::new();
    if let Err(e) = model.validate() {
        problems.push(format!("invalid model: {e}"));
    }
    let mut sel = model.select.clone();
    sel.sort();
    let mut cols = frame.columns().to_vec();
    cols.sort();
    if sel != cols {
        problems.push(format!("model selects {:?}, frame has columns {:?}", model.select, frame.columns()));
    }
    let expected = eval_frame_relational(frame, data)?;
    let bag = eval_model(model, data)?;
    let extra: Vec<_> = bag.vars().into_iter().filter(|v| !frame.columns().contains(v)).collect();
    if !extra.is_empty() {
        problems.push(format!("query binds variables outside the frame: {extra:?}"));
    }
    let actual = solution_to_table_with(&bag, frame.columns());
    Ok(Comparison { expected, actual, problems })
}
