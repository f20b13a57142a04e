//! Reference evaluator: bag semantics for query models, a relational
//! evaluator for operator queues, and the conversion between the two.
//!
//! Nothing here is tuned for speed. Joins are nested loops over bags.

mod aggregate;
mod algebra;
mod relational;
mod table;
mod verify;

pub use aggregate::aggregate;
pub use algebra::{eval_model, eval_pattern, lower_group, lower_model, Pattern};
pub use relational::{eval_frame_relational, full_outer_join_textbook};
pub use table::{bag_equal, solution_to_table, solution_to_table_with, ResultTable, Row};
pub use verify::{compare_model, Comparison, Difference};

use alloc::vec::Vec;

use crate::condition::Condition;
use crate::solution::Mapping;
use crate::var::Var;
use crate::EvalError;

/// Conjunction of single-column conditions, evaluated against a mapping.
pub(crate) fn holds(conds: &[(Var, Condition)], m: &Mapping) -> Result<bool, EvalError> {
    for (v, c) in conds {
        match c.eval(m.get(v)) {
            Ok(true) => {}
            Ok(false) => return Ok(false),
            Err(e) => return Err(EvalError::Unsupported(alloc::format!("raw condition `{}`", e.0))),
        }
    }
    Ok(true)
}

pub(crate) fn conds_of(filters: &[crate::model::FilterExpr]) -> Vec<(Var, Condition)> {
    filters.iter().flat_map(|f| f.terms.iter().cloned()).collect()
}
