//! Brute-force reference executor used only by tests.
//!
//! Deliberately naive and structurally unlike the production executor:
//! rows are dictionaries keyed by (label, column) pairs, joins materialize
//! the full cross product before filtering, groups are found by linear
//! scanning, and sorting is an insertion sort. It shares nothing with the
//! execution pipeline except the AST and Value definitions, so agreement
//! between the two is meaningful.

use crate::relational::{cmp_values, Database, Value};
use crate::sql::ast::*;
use std::cmp::Ordering;
use std::collections::BTreeMap;

type DictRow = BTreeMap<(String, String), Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub ordered: bool,
}

pub fn oracle_execute(ast: &SetExpr, db: &Database) -> Result<OracleResult, String> {
    match ast {
        SetExpr::Select(s) => oracle_select(s, db),
        SetExpr::Compound { op, left, right } => {
            let l = oracle_execute(left, db)?;
            let r = oracle_execute(right, db)?;
            if l.columns.len() != r.columns.len() {
                return Err("arity mismatch".into());
            }
            let mut rows: Vec<Vec<Value>> = Vec::new();
            let push_unique = |rows: &mut Vec<Vec<Value>>, row: &Vec<Value>| {
                if !rows.iter().any(|r| rows_equal(r, row)) {
                    rows.push(row.clone());
                }
            };
            match op {
                SetOp::Union => {
                    for row in l.rows.iter().chain(r.rows.iter()) {
                        push_unique(&mut rows, row);
                    }
                }
                SetOp::Except => {
                    for row in &l.rows {
                        if !r.rows.iter().any(|x| rows_equal(x, row)) {
                            push_unique(&mut rows, row);
                        }
                    }
                }
                SetOp::Intersect => {
                    for row in &l.rows {
                        if r.rows.iter().any(|x| rows_equal(x, row)) {
                            push_unique(&mut rows, row);
                        }
                    }
                }
            }
            Ok(OracleResult {
                columns: l.columns,
                rows,
                ordered: false,
            })
        }
    }
}

fn rows_equal(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| cmp_values(x, y) == Ordering::Equal)
}

fn dict_rows_for(db: &Database, tr: &TableRef) -> Result<Vec<DictRow>, String> {
    let table = db
        .table(&tr.table)
        .ok_or_else(|| format!("unknown table {}", tr.table))?;
    let label = tr
        .alias
        .clone()
        .unwrap_or_else(|| tr.table.clone())
        .to_lowercase();
    Ok(table
        .rows
        .iter()
        .map(|row| {
            table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| ((label.clone(), c.name.to_lowercase()), v.clone()))
                .collect()
        })
        .collect())
}

fn lookup(row: &DictRow, c: &ColumnRef) -> Result<Value, String> {
    match &c.table {
        Some(t) => row
            .get(&(t.to_lowercase(), c.column.to_lowercase()))
            .cloned()
            .ok_or_else(|| format!("unknown column {c}")),
        None => {
            let name = c.column.to_lowercase();
            let mut found = None;
            for ((_, col), v) in row {
                if *col == name {
                    if found.is_some() {
                        return Err(format!("ambiguous column {name}"));
                    }
                    found = Some(v.clone());
                }
            }
            found.ok_or_else(|| format!("unknown column {name}"))
        }
    }
}

fn oracle_select(s: &Select, db: &Database) -> Result<OracleResult, String> {
    // FROM and JOIN: full cross product, then keep rows satisfying every
    // ON equality.
    let mut working = dict_rows_for(db, &s.from)?;
    for join in &s.joins {
        let right = dict_rows_for(db, &join.table)?;
        let mut product = Vec::new();
        for l in &working {
            for r in &right {
                let mut combined = l.clone();
                for (k, v) in r {
                    combined.insert(k.clone(), v.clone());
                }
                product.push(combined);
            }
        }
        working = product
            .into_iter()
            .filter_map(|row| {
                for (a, b) in &join.on {
                    let x = match lookup(&row, a) {
                        Ok(v) => v,
                        Err(e) => return Some(Err(e)),
                    };
                    let y = match lookup(&row, b) {
                        Ok(v) => v,
                        Err(e) => return Some(Err(e)),
                    };
                    if x.is_null() || y.is_null() || cmp_values(&x, &y) != Ordering::Equal {
                        return None;
                    }
                    if matches!((&x, &y), (Value::Text(_), Value::Integer(_) | Value::Real(_)))
                        || matches!((&x, &y), (Value::Integer(_) | Value::Real(_), Value::Text(_)))
                    {
                        return Some(Err("join type mismatch".into()));
                    }
                }
                Some(Ok(row))
            })
            .collect::<Result<Vec<_>, String>>()?;
    }

    if let Some(w) = &s.where_clause {
        let mut kept = Vec::new();
        for row in working {
            if truth(w, Some(&row), None, db)? {
                kept.push(row);
            }
        }
        working = kept;
    }

    let aggregated = !s.group_by.is_empty()
        || s.having.is_some()
        || s.items.iter().any(|i| {
            matches!(
                i,
                SelectItem::Expr {
                    expr: ScalarExpr::Aggregate(_),
                    ..
                }
            )
        })
        || s.order_by
            .iter()
            .any(|k| matches!(k.expr, ScalarExpr::Aggregate(_)));

    // Each output row carries its ORDER BY key tuple.
    let mut output: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
    let mut columns = Vec::new();

    if aggregated {
        // Group discovery by linear scan over key tuples.
        let mut groups: Vec<(Vec<Value>, Vec<DictRow>)> = Vec::new();
        if s.group_by.is_empty() {
            groups.push((Vec::new(), working));
        } else {
            for row in working {
                let mut key = Vec::new();
                for c in &s.group_by {
                    key.push(lookup(&row, c)?);
                }
                match groups.iter_mut().find(|(k, _)| rows_equal(k, &key)) {
                    Some((_, members)) => members.push(row),
                    None => groups.push((key, vec![row])),
                }
            }
        }

        if let Some(h) = &s.having {
            let mut kept = Vec::new();
            for (key, members) in groups {
                if truth(h, None, Some((&key, &s.group_by, &members)), db)? {
                    kept.push((key, members));
                }
            }
            groups = kept;
        }

        for item in &s.items {
            match item {
                SelectItem::Star => return Err("* in aggregate query".into()),
                SelectItem::Expr { expr, alias } => columns.push(match (expr, alias) {
                    (_, Some(a)) => a.clone(),
                    (ScalarExpr::Column(c), None) => c.column.clone(),
                    (ScalarExpr::Aggregate(a), None) => a.to_string(),
                }),
            }
        }

        for (key, members) in &groups {
            let mut out_row = Vec::new();
            for item in &s.items {
                let SelectItem::Expr { expr, .. } = item else {
                    unreachable!()
                };
                out_row.push(group_scalar(expr, key, &s.group_by, members)?);
            }
            let mut sort_key = Vec::new();
            for k in &s.order_by {
                sort_key.push(order_value(&k.expr, s, &out_row, key, &s.group_by, members)?);
            }
            output.push((out_row, sort_key));
        }
    } else {
        for item in &s.items {
            match item {
                SelectItem::Star => {
                    // Column order: FROM then JOINs, declaration order.
                    for tr in std::iter::once(&s.from).chain(s.joins.iter().map(|j| &j.table)) {
                        let table = db.table(&tr.table).ok_or("unknown table")?;
                        for c in &table.columns {
                            columns.push(c.name.clone());
                        }
                    }
                }
                SelectItem::Expr { expr, alias } => columns.push(match (expr, alias) {
                    (_, Some(a)) => a.clone(),
                    (ScalarExpr::Column(c), None) => c.column.clone(),
                    (ScalarExpr::Aggregate(_), None) => unreachable!("aggregated handled above"),
                }),
            }
        }
        for row in &working {
            let mut out_row = Vec::new();
            for item in &s.items {
                match item {
                    SelectItem::Star => {
                        for tr in std::iter::once(&s.from).chain(s.joins.iter().map(|j| &j.table))
                        {
                            let table = db.table(&tr.table).ok_or("unknown table")?;
                            let label = tr
                                .alias
                                .clone()
                                .unwrap_or_else(|| tr.table.clone())
                                .to_lowercase();
                            for c in &table.columns {
                                out_row.push(
                                    row.get(&(label.clone(), c.name.to_lowercase()))
                                        .cloned()
                                        .ok_or("missing star cell")?,
                                );
                            }
                        }
                    }
                    SelectItem::Expr { expr, .. } => match expr {
                        ScalarExpr::Column(c) => out_row.push(lookup(row, c)?),
                        ScalarExpr::Aggregate(_) => unreachable!(),
                    },
                }
            }
            let mut sort_key = Vec::new();
            for k in &s.order_by {
                match &k.expr {
                    ScalarExpr::Column(c) => {
                        // Alias takes priority over an underlying column.
                        let alias_pos = if c.table.is_none() {
                            s.items.iter().enumerate().find_map(|(i, item)| match item {
                                SelectItem::Expr { alias: Some(a), .. }
                                    if a.eq_ignore_ascii_case(&c.column) =>
                                {
                                    Some(i)
                                }
                                _ => None,
                            })
                        } else {
                            None
                        };
                        match alias_pos {
                            Some(i) => sort_key.push(out_row[i].clone()),
                            None => sort_key.push(lookup(row, c)?),
                        }
                    }
                    ScalarExpr::Aggregate(_) => unreachable!(),
                }
            }
            output.push((out_row, sort_key));
        }
    }

    if s.distinct {
        let mut unique: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
        for (row, key) in output {
            if !unique.iter().any(|(r, _)| rows_equal(r, &row)) {
                unique.push((row, key));
            }
        }
        output = unique;
    }

    if !s.order_by.is_empty() {
        // Insertion sort: stable by construction.
        let descs: Vec<bool> = s.order_by.iter().map(|k| k.desc).collect();
        let mut sorted: Vec<(Vec<Value>, Vec<Value>)> = Vec::with_capacity(output.len());
        for item in output {
            let mut at = sorted.len();
            for (i, existing) in sorted.iter().enumerate() {
                if key_less(&item.1, &existing.1, &descs) {
                    at = i;
                    break;
                }
            }
            sorted.insert(at, item);
        }
        output = sorted;
    }

    if let Some(limit) = s.limit {
        output.truncate(limit as usize);
    }

    Ok(OracleResult {
        columns,
        rows: output.into_iter().map(|(r, _)| r).collect(),
        ordered: !s.order_by.is_empty(),
    })
}

fn key_less(a: &[Value], b: &[Value], descs: &[bool]) -> bool {
    for ((x, y), desc) in a.iter().zip(b).zip(descs) {
        let ord = cmp_values(x, y);
        let ord = if *desc { ord.reverse() } else { ord };
        match ord {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

fn group_scalar(
    expr: &ScalarExpr,
    key: &[Value],
    group_by: &[ColumnRef],
    members: &[DictRow],
) -> Result<Value, String> {
    match expr {
        ScalarExpr::Column(c) => {
            for (i, g) in group_by.iter().enumerate() {
                if g.column.eq_ignore_ascii_case(&c.column)
                    && (c.table.is_none()
                        || g.table.is_none()
                        || g.table
                            .as_deref()
                            .unwrap()
                            .eq_ignore_ascii_case(c.table.as_deref().unwrap()))
                {
                    return Ok(key[i].clone());
                }
            }
            // Qualified/unqualified mismatch: fall back to value lookup in
            // the first member and check it is constant across the group.
            if let Some(first) = members.first() {
                let v = lookup(first, c)?;
                for m in members {
                    if cmp_values(&lookup(m, c)?, &v) != Ordering::Equal {
                        return Err(format!("column {c} not constant in group"));
                    }
                }
                return Ok(v);
            }
            Err(format!("ungrouped column {c}"))
        }
        ScalarExpr::Aggregate(a) => oracle_aggregate(a, members),
    }
}

fn order_value(
    expr: &ScalarExpr,
    s: &Select,
    out_row: &[Value],
    key: &[Value],
    group_by: &[ColumnRef],
    members: &[DictRow],
) -> Result<Value, String> {
    if let ScalarExpr::Column(c) = expr {
        if c.table.is_none() {
            for (i, item) in s.items.iter().enumerate() {
                if let SelectItem::Expr { alias: Some(a), .. } = item {
                    if a.eq_ignore_ascii_case(&c.column) {
                        return Ok(out_row[i].clone());
                    }
                }
            }
        }
    }
    group_scalar(expr, key, group_by, members)
}

fn oracle_aggregate(a: &Aggregate, members: &[DictRow]) -> Result<Value, String> {
    let mut values: Vec<Value> = Vec::new();
    match &a.arg {
        AggArg::Star => {
            if a.func == AggFunc::Count {
                return Ok(Value::Integer(members.len() as i64));
            }
            return Err("aggregate(*) other than COUNT".into());
        }
        AggArg::Column(c) => {
            for m in members {
                let v = lookup(m, c)?;
                if !v.is_null() {
                    values.push(v);
                }
            }
        }
    }
    if a.distinct {
        let mut unique: Vec<Value> = Vec::new();
        for v in values {
            if !unique.iter().any(|u| cmp_values(u, &v) == Ordering::Equal) {
                unique.push(v);
            }
        }
        values = unique;
    }
    match a.func {
        AggFunc::Count => Ok(Value::Integer(values.len() as i64)),
        AggFunc::Max => {
            let mut best: Option<Value> = None;
            for v in values {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        if cmp_values(&v, &b) == Ordering::Greater {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.unwrap_or(Value::Null))
        }
        AggFunc::Min => {
            let mut best: Option<Value> = None;
            for v in values {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        if cmp_values(&v, &b) == Ordering::Less {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.unwrap_or(Value::Null))
        }
        AggFunc::Sum => {
            if values.is_empty() {
                return Ok(Value::Null);
            }
            if values.iter().all(|v| matches!(v, Value::Integer(_))) {
                let mut s = 0i64;
                for v in &values {
                    if let Value::Integer(i) = v {
                        s += i;
                    }
                }
                Ok(Value::Integer(s))
            } else {
                let mut s = 0.0;
                for v in &values {
                    s += v.as_f64().ok_or("sum over non-numeric")?;
                }
                Ok(Value::Real(s))
            }
        }
        AggFunc::Avg => {
            if values.is_empty() {
                return Ok(Value::Null);
            }
            let mut s = 0.0;
            for v in &values {
                s += v.as_f64().ok_or("avg over non-numeric")?;
            }
            Ok(Value::Real(s / values.len() as f64))
        }
    }
}

type GroupCtx<'a> = (&'a [Value], &'a [ColumnRef], &'a [DictRow]);

fn operand_value(
    o: &Operand,
    row: Option<&DictRow>,
    group: Option<GroupCtx<'_>>,
    db: &Database,
) -> Result<Value, String> {
    match o {
        Operand::Literal(Literal::Null) => Ok(Value::Null),
        Operand::Literal(Literal::Integer(i)) => Ok(Value::Integer(*i)),
        Operand::Literal(Literal::Real(r)) => Ok(Value::Real(*r)),
        Operand::Literal(Literal::Text(t)) => Ok(Value::Text(t.clone())),
        Operand::Column(c) => match (row, group) {
            (Some(row), _) => lookup(row, c),
            (None, Some((key, group_by, members))) => {
                group_scalar(&ScalarExpr::Column(c.clone()), key, group_by, members)
            }
            (None, None) => Err("column outside row context".into()),
        },
        Operand::Aggregate(a) => match group {
            Some((_, _, members)) => oracle_aggregate(a, members),
            None => Err("aggregate outside group context".into()),
        },
        Operand::Scalar(q) => {
            let rs = oracle_execute(q, db)?;
            if rs.columns.len() != 1 {
                return Err("non-scalar subquery".into());
            }
            match rs.rows.len() {
                0 => Ok(Value::Null),
                1 => Ok(rs.rows[0][0].clone()),
                n => Err(format!("scalar subquery returned {n} rows")),
            }
        }
    }
}

fn cmp_truth(l: &Value, op: CmpOp, r: &Value) -> Result<bool, String> {
    if l.is_null() || r.is_null() {
        return Ok(false);
    }
    let numeric = |v: &Value| matches!(v, Value::Integer(_) | Value::Real(_));
    if (numeric(l) && matches!(r, Value::Text(_))) || (matches!(l, Value::Text(_)) && numeric(r)) {
        return Err("type mismatch".into());
    }
    let ord = cmp_values(l, r);
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::NotEq => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::LtEq => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::GtEq => ord != Ordering::Less,
    })
}

fn truth(
    p: &Predicate,
    row: Option<&DictRow>,
    group: Option<GroupCtx<'_>>,
    db: &Database,
) -> Result<bool, String> {
    match p {
        Predicate::And(l, r) => Ok(truth(l, row, group, db)? && truth(r, row, group, db)?),
        Predicate::Or(l, r) => Ok(truth(l, row, group, db)? || truth(r, row, group, db)?),
        Predicate::Not(i) => Ok(!truth(i, row, group, db)?),
        Predicate::Compare { left, op, right } => {
            let l = operand_value(left, row, group, db)?;
            let r = operand_value(right, row, group, db)?;
            cmp_truth(&l, *op, &r)
        }
        Predicate::CompareQuantified {
            left,
            op,
            quantifier,
            query,
        } => {
            let l = operand_value(left, row, group, db)?;
            let rs = oracle_execute(query, db)?;
            if rs.columns.len() != 1 {
                return Err("non-scalar subquery".into());
            }
            match quantifier {
                Quantifier::Any => {
                    for r in &rs.rows {
                        if cmp_truth(&l, *op, &r[0])? {
                            return Ok(true);
                        }
                    }
                    Ok(false)
                }
                Quantifier::All => {
                    for r in &rs.rows {
                        if !cmp_truth(&l, *op, &r[0])? {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
            }
        }
        Predicate::Between {
            operand,
            low,
            high,
            negated,
        } => {
            let v = operand_value(operand, row, group, db)?;
            let lo = operand_value(low, row, group, db)?;
            let hi = operand_value(high, row, group, db)?;
            let within = cmp_truth(&v, CmpOp::GtEq, &lo)? && cmp_truth(&v, CmpOp::LtEq, &hi)?;
            Ok(within != *negated)
        }
        Predicate::Like {
            operand,
            pattern,
            negated,
        } => {
            let v = operand_value(operand, row, group, db)?;
            match v {
                Value::Null => Ok(false),
                Value::Text(t) => Ok(naive_like(pattern, &t) != *negated),
                _ => Err("LIKE on non-text".into()),
            }
        }
        Predicate::InList {
            operand,
            items,
            negated,
        } => {
            let v = operand_value(operand, row, group, db)?;
            if v.is_null() {
                return Ok(false);
            }
            let mut found = false;
            for item in items {
                let iv = operand_value(&Operand::Literal(item.clone()), row, group, db)?;
                if iv.is_null() {
                    continue;
                }
                if cmp_truth(&v, CmpOp::Eq, &iv)? {
                    found = true;
                    break;
                }
            }
            Ok(found != *negated)
        }
        Predicate::InQuery {
            operand,
            query,
            negated,
        } => {
            let v = operand_value(operand, row, group, db)?;
            if v.is_null() {
                return Ok(false);
            }
            let rs = oracle_execute(query, db)?;
            if rs.columns.len() != 1 {
                return Err("non-scalar subquery".into());
            }
            let mut found = false;
            for r in &rs.rows {
                if r[0].is_null() {
                    continue;
                }
                if cmp_truth(&v, CmpOp::Eq, &r[0])? {
                    found = true;
                    break;
                }
            }
            Ok(found != *negated)
        }
        Predicate::IsNull { operand, negated } => {
            let v = operand_value(operand, row, group, db)?;
            Ok(v.is_null() != *negated)
        }
        Predicate::Exists { query } => Ok(!oracle_execute(query, db)?.rows.is_empty()),
    }
}

/// Recursive LIKE matcher, case-insensitive, `%` and `_` wildcards.
fn naive_like(pattern: &str, text: &str) -> bool {
    fn rec(p: &[char], t: &[char]) -> bool {
        match p.first() {
            None => t.is_empty(),
            Some('%') => (0..=t.len()).any(|k| rec(&p[1..], &t[k..])),
            Some('_') => !t.is_empty() && rec(&p[1..], &t[1..]),
            Some(c) => t.first() == Some(c) && rec(&p[1..], &t[1..]),
        }
    }
    let p: Vec<char> = pattern.to_lowercase().chars().collect();
    let t: Vec<char> = text.to_lowercase().chars().collect();
    rec(&p, &t)
}
