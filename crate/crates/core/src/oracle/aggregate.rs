use alloc::vec::Vec;

use crate::frame::AggFunc;
use crate::term::{Literal, Numeric, Term};

/// Applies an aggregate to the bound values of one group, one entry per
/// occurrence. Unbound values are skipped before calling. `None` is the
/// error case: the target stays unbound.
pub fn aggregate(func: AggFunc, distinct: bool, values: &[&Term]) -> Option<Term> {
    let mut values: Vec<&Term> = values.to_vec();
    if distinct {
        values.sort();
        values.dedup();
    }
    match func {
        AggFunc::Count => Some(Term::Literal(Literal::integer(values.len() as i64))),
        AggFunc::Sum => sum(&values).map(Numeric::to_term),
        AggFunc::Avg => {
            if values.is_empty() {
                return Some(Term::Literal(Literal::integer(0)));
            }
            let total = sum(&values)?;
            Some(Term::Literal(Literal::decimal(total.as_f64() / values.len() as f64)))
        }
        AggFunc::Min | AggFunc::Sample => values.into_iter().min_by(|a, b| a.order_cmp(b)).cloned(),
        AggFunc::Max => values.into_iter().max_by(|a, b| a.order_cmp(b)).cloned(),
    }
}

fn sum(values: &[&Term]) -> Option<Numeric> {
    let mut acc = Numeric::Integer(0);
    for v in values {
        let n = v.numeric()?;
        acc = match (acc, n) {
            (Numeric::Integer(a), Numeric::Integer(b)) => match a.checked_add(b) {
                Some(s) => Numeric::Integer(s),
                None => Numeric::Double(a as f64 + b as f64),
            },
            (a, b) => Numeric::Double(a.as_f64() + b.as_f64()),
        };
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(i: i64) -> Term {
        Term::Literal(Literal::integer(i))
    }

    #[test]
    fn count_and_distinct() {
        let (a, b) = (int(1), int(2));
        let vals = [&a, &a, &b];
        assert_eq!(aggregate(AggFunc::Count, false, &vals), Some(int(3)));
        assert_eq!(aggregate(AggFunc::Count, true, &vals), Some(int(2)));
        assert_eq!(aggregate(AggFunc::Count, false, &[]), Some(int(0)));
    }

    #[test]
    fn numeric_errors_and_empty_groups() {
        let (a, s) = (int(4), Term::literal("x"));
        assert_eq!(aggregate(AggFunc::Sum, false, &[&a, &a]), Some(int(8)));
        assert_eq!(aggregate(AggFunc::Sum, false, &[&a, &s]), None);
        assert_eq!(aggregate(AggFunc::Sum, false, &[]), Some(int(0)));
        assert_eq!(aggregate(AggFunc::Avg, false, &[]), Some(int(0)));
        assert_eq!(aggregate(AggFunc::Min, false, &[]), None);
        assert_eq!(aggregate(AggFunc::Max, false, &[&a, &s]), Some(s.clone()));
        assert_eq!(aggregate(AggFunc::Avg, false, &[&a, &int(2)]), Some(Term::Literal(Literal::decimal(3.0))));
    }
}
