//! Predicate and aggregate evaluation.
//!
//! Null semantics: any comparison involving Null is false; IS NULL is the
//! only Null test. Integer and Real compare after numeric promotion.
//! LIKE is case-insensitive with `%`/`_` wildcards.

use super::{execute_subquery, ExecError, Relation};
use crate::relational::{cmp_values, Database, Value};
use crate::sql::ast::*;
use std::cmp::Ordering;

pub(crate) struct EvalContext<'a> {
    pub db: &'a Database,
}

/// Promotion-aware comparison; `None` means the kinds are incompatible.
/// Callers decide whether Null involvement is an error or just false.
pub(crate) fn compare_values(a: &Value, b: &Value) -> Option<Ordering> {
    use Value::*;
    match (a, b) {
        (Integer(_) | Real(_), Integer(_) | Real(_)) => Some(cmp_values(a, b)),
        (Text(x), Text(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn truth_of_comparison(left: &Value, op: CmpOp, right: &Value) -> Result<bool, ExecError> {
    if left.is_null() || right.is_null() {
        return Ok(false);
    }
    let ord = compare_values(left, right).ok_or_else(|| {
        ExecError::TypeMismatch(format!(
            "cannot compare {} with {}",
            super::kind_name(left),
            super::kind_name(right)
        ))
    })?;
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::NotEq => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::LtEq => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::GtEq => ord != Ordering::Less,
    })
}

fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Null => Value::Null,
        Literal::Integer(i) => Value::Integer(*i),
        Literal::Real(r) => Value::Real(*r),
        Literal::Text(t) => Value::Text(t.clone()),
    }
}

/// Evaluates a row-context operand (WHERE / join filters).
fn eval_operand(
    o: &Operand,
    rel: &Relation,
    row: &[Value],
    ctx: &EvalContext,
) -> Result<Value, ExecError> {
    match o {
        Operand::Column(c) => Ok(row[rel.resolve(c)?].clone()),
        Operand::Literal(l) => Ok(literal_value(l)),
        Operand::Scalar(q) => scalar_subquery(q, ctx),
        Operand::Aggregate(a) => {
            // Parser rejects aggregates in WHERE; reaching this means a
            // hand-built AST put one there.
            Err(ExecError::TypeMismatch(format!(
                "aggregate {a} outside HAVING"
            )))
        }
    }
}

fn scalar_subquery(q: &SetExpr, ctx: &EvalContext) -> Result<Value, ExecError> {
    let rs = execute_subquery(q, ctx.db)?;
    if rs.columns.len() != 1 || rs.rows.len() > 1 {
        if rs.rows.is_empty() && rs.columns.len() == 1 {
            return Ok(Value::Null);
        }
        return Err(ExecError::NonScalarSubquery {
            rows: rs.rows.len(),
            columns: rs.columns.len(),
        });
    }
    Ok(rs.rows.first().map_or(Value::Null, |r| r[0].clone()))
}

fn subquery_column(q: &SetExpr, ctx: &EvalContext) -> Result<Vec<Value>, ExecError> {
    let rs = execute_subquery(q, ctx.db)?;
    if rs.columns.len() != 1 {
        return Err(ExecError::NonScalarSubquery {
            rows: rs.rows.len(),
            columns: rs.columns.len(),
        });
    }
    Ok(rs.rows.into_iter().map(|mut r| r.remove(0)).collect())
}

pub(crate) fn eval_predicate(
    p: &Predicate,
    rel: &Relation,
    row: &[Value],
    ctx: &EvalContext,
) -> Result<bool, ExecError> {
    eval_pred_with(p, ctx, &mut |o| eval_operand(o, rel, row, ctx))
}

/// HAVING-context evaluation: aggregate operands compute over the group,
/// plain columns must be group-by keys.
pub(crate) fn eval_having(
    p: &Predicate,
    rel: &Relation,
    key: &[Value],
    key_indices: &[usize],
    group_rows: &[&Vec<Value>],
    ctx: &EvalContext,
) -> Result<bool, ExecError> {
    eval_pred_with(p, ctx, &mut |o| match o {
        Operand::Aggregate(a) => eval_aggregate(a, rel, group_rows),
        Operand::Column(c) => {
            let idx = rel.resolve(c)?;
            let key_pos = key_indices
                .iter()
                .position(|&k| k == idx)
                .ok_or_else(|| ExecError::UngroupedColumn(c.column.clone()))?;
            Ok(key[key_pos].clone())
        }
        Operand::Literal(l) => Ok(literal_value(l)),
        Operand::Scalar(q) => scalar_subquery(q, ctx),
    })
}

fn eval_pred_with(
    p: &Predicate,
    ctx: &EvalContext,
    operand: &mut dyn FnMut(&Operand) -> Result<Value, ExecError>,
) -> Result<bool, ExecError> {
    match p {
        Predicate::And(l, r) => {
            Ok(eval_pred_with(l, ctx, operand)? && eval_pred_with(r, ctx, operand)?)
        }
        Predicate::Or(l, r) => {
            Ok(eval_pred_with(l, ctx, operand)? || eval_pred_with(r, ctx, operand)?)
        }
        Predicate::Not(inner) => Ok(!eval_pred_with(inner, ctx, operand)?),
        Predicate::Compare { left, op, right } => {
            let l = operand(left)?;
            let r = operand(right)?;
            truth_of_comparison(&l, *op, &r)
        }
        Predicate::CompareQuantified {
            left,
            op,
            quantifier,
            query,
        } => {
            let l = operand(left)?;
            let members = subquery_column(query, ctx)?;
            match quantifier {
                Quantifier::Any => {
                    for m in &members {
                        if truth_of_comparison(&l, *op, m)? {
                            return Ok(true);
                        }
                    }
                    Ok(false)
                }
                Quantifier::All => {
                    for m in &members {
                        if !truth_of_comparison(&l, *op, m)? {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
            }
        }
        Predicate::Between {
            operand: subject,
            low,
            high,
            negated,
        } => {
            let v = operand(subject)?;
            let lo = operand(low)?;
            let hi = operand(high)?;
            let within =
                truth_of_comparison(&v, CmpOp::GtEq, &lo)? && truth_of_comparison(&v, CmpOp::LtEq, &hi)?;
            Ok(within != *negated)
        }
        Predicate::Like {
            operand: subject,
            pattern,
            negated,
        } => {
            let v = operand(subject)?;
            let matched = match &v {
                Value::Null => false,
                Value::Text(t) => like_match(pattern, t),
                other => {
                    return Err(ExecError::TypeMismatch(format!(
                        "LIKE applied to {}",
                        super::kind_name(other)
                    )));
                }
            };
            if v.is_null() {
                Ok(false)
            } else {
                Ok(matched != *negated)
            }
        }
        Predicate::InList {
            operand: subject,
            items,
            negated,
        } => {
            let v = operand(subject)?;
            if v.is_null() {
                return Ok(false);
            }
            let mut found = false;
            for item in items {
                let iv = literal_value(item);
                if iv.is_null() {
                    continue;
                }
                if truth_of_comparison(&v, CmpOp::Eq, &iv)? {
                    found = true;
                    break;
                }
            }
            Ok(found != *negated)
        }
        Predicate::InQuery {
            operand: subject,
            query,
            negated,
        } => {
            let v = operand(subject)?;
            if v.is_null() {
                return Ok(false);
            }
            let members = subquery_column(query, ctx)?;
            let mut found = false;
            for m in &members {
                if m.is_null() {
                    continue;
                }
                if truth_of_comparison(&v, CmpOp::Eq, m)? {
                    found = true;
                    break;
                }
            }
            Ok(found != *negated)
        }
        Predicate::IsNull {
            operand: subject,
            negated,
        } => {
            let v = operand(subject)?;
            Ok(v.is_null() != *negated)
        }
        Predicate::Exists { query } => {
            let rs = execute_subquery(query, ctx.db)?;
            Ok(!rs.rows.is_empty())
        }
    }
}

/// Case-insensitive LIKE with `%` (any run) and `_` (any one char).
fn like_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.to_lowercase().chars().collect();
    let t: Vec<char> = text.to_lowercase().chars().collect();
    // Iterative matcher with backtracking on the last `%`.
    let (mut pi, mut ti) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '_' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '%' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '%' {
        pi += 1;
    }
    pi == p.len()
}

/// Computes one aggregate over the rows of a group. Null inputs are
/// ignored except for COUNT(*). Empty inputs give COUNT = 0 and Null for
/// SUM/AVG/MAX/MIN. AVG is always Real.
pub(crate) fn eval_aggregate(
    a: &Aggregate,
    rel: &Relation,
    group_rows: &[&Vec<Value>],
) -> Result<Value, ExecError> {
    let values: Vec<Value> = match &a.arg {
        AggArg::Star => {
            if a.func == AggFunc::Count {
                if a.distinct {
                    return Err(ExecError::TypeMismatch("COUNT(DISTINCT *)".into()));
                }
                return Ok(Value::Integer(group_rows.len() as i64));
            }
            return Err(ExecError::TypeMismatch(format!("{}(*)", a)));
        }
        AggArg::Column(c) => {
            let idx = rel.resolve(c)?;
            group_rows
                .iter()
                .map(|r| r[idx].clone())
                .filter(|v| !v.is_null())
                .collect()
        }
    };

    let values = if a.distinct {
        let mut distinct: Vec<Value> = Vec::with_capacity(values.len());
        for v in values {
            if !distinct
                .iter()
                .any(|d| cmp_values(d, &v) == Ordering::Equal)
            {
                distinct.push(v);
            }
        }
        distinct
    } else {
        values
    };

    let column_name = match &a.arg {
        AggArg::Column(c) => c.column.clone(),
        AggArg::Star => "*".into(),
    };

    match a.func {
        AggFunc::Count => Ok(Value::Integer(values.len() as i64)),
        AggFunc::Max => Ok(values
            .into_iter()
            .max_by(cmp_values)
            .unwrap_or(Value::Null)),
        AggFunc::Min => Ok(values
            .into_iter()
            .min_by(cmp_values)
            .unwrap_or(Value::Null)),
        AggFunc::Sum => {
            if values.is_empty() {
                return Ok(Value::Null);
            }
            if values.iter().all(|v| matches!(v, Value::Integer(_))) {
                let mut sum = 0i64;
                for v in &values {
                    if let Value::Integer(i) = v {
                        sum += i;
                    }
                }
                Ok(Value::Integer(sum))
            } else {
                let mut sum = 0f64;
                for v in &values {
                    sum += v
                        .as_f64()
                        .ok_or_else(|| ExecError::NonNumericAggregate(column_name.clone()))?;
                }
                Ok(Value::Real(sum))
            }
        }
        AggFunc::Avg => {
            if values.is_empty() {
                return Ok(Value::Null);
            }
            let mut sum = 0f64;
            for v in &values {
                sum += v
                    .as_f64()
                    .ok_or_else(|| ExecError::NonNumericAggregate(column_name.clone()))?;
            }
            Ok(Value::Real(sum / values.len() as f64))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn like_wildcards() {
        assert!(like_match("%airport%", "Kazan International Airport"));
        assert!(like_match("k_zan%", "Kazan Airport"));
        assert!(!like_match("kazan", "Kazan Airport"));
        assert!(like_match("%", ""));
        assert!(!like_match("_", ""));
        assert!(like_match("a%b%c", "aXXbYYc"));
    }

    #[test]
    fn null_comparisons_are_false() {
        assert!(!truth_of_comparison(&Value::Null, CmpOp::Eq, &Value::Null).unwrap());
        assert!(!truth_of_comparison(&Value::Integer(1), CmpOp::Gt, &Value::Null).unwrap());
        assert!(!truth_of_comparison(&Value::Null, CmpOp::NotEq, &Value::Integer(1)).unwrap());
    }

    #[test]
    fn cross_kind_comparison_promotes_integer() {
        assert!(truth_of_comparison(&Value::Real(50.5), CmpOp::Gt, &Value::Integer(50)).unwrap());
        assert!(
            truth_of_comparison(&Value::Integer(1), CmpOp::Eq, &Value::Real(1.0)).unwrap()
        );
    }

    #[test]
    fn text_number_comparison_is_type_mismatch() {
        let err =
            truth_of_comparison(&Value::Text("a".into()), CmpOp::Lt, &Value::Integer(1)).unwrap_err();
        assert!(matches!(err, ExecError::TypeMismatch(_)));
    }
}
