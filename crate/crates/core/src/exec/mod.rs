//! In-memory evaluation of the SQL subset over a [`Database`].
//!
//! Bag semantics for SELECT/JOIN/WHERE, set semantics (deduplicating) for
//! UNION/EXCEPT/INTERSECT. Aggregates ignore Null except COUNT(*).
//! Comparisons involving Null are false; IS NULL is the only Null test.
//! ORDER BY is a stable sort over ingest order, so gold answers are
//! deterministic across runs.

mod expr;

use crate::relational::{cmp_rows, Database, Value};
use crate::sql::ast::*;
use expr::{compare_values, eval_predicate, EvalContext};
use std::cmp::Ordering;
use thiserror::Error;

/// Columns plus typed rows. `ordered` is set iff the query had ORDER BY,
/// in which case row order is meaningful for judging.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub ordered: bool,
}

impl ResultSet {
    /// Header line plus one comma-separated record per row, RFC-4180
    /// quoted, Null rendered as empty. This is the textual form embedded
    /// in prompts and reports.
    pub fn to_text(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.columns).expect("header");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.render())).expect("row");
        }
        let bytes = w.into_inner().expect("flush");
        String::from_utf8(bytes).expect("utf8")
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("ambiguous column `{0}`")]
    AmbiguousColumn(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("scalar subquery returned {rows} rows and {columns} columns")]
    NonScalarSubquery { rows: usize, columns: usize },
    #[error("column `{0}` must appear in GROUP BY to be selected")]
    UngroupedColumn(String),
    #[error("`*` cannot be used with aggregates or GROUP BY")]
    StarInGroupedQuery,
    #[error("set operation arms have different arities ({left} vs {right})")]
    ArityMismatch { left: usize, right: usize },
    #[error("aggregate over non-numeric column `{0}`")]
    NonNumericAggregate(String),
}

/// Executes a parsed query against the database and returns the result
/// set. Pure with respect to its inputs.
pub fn execute(ast: &SetExpr, db: &Database) -> Result<ResultSet, ExecError> {
    match ast {
        SetExpr::Select(s) => execute_select(s, db),
        SetExpr::Compound { op, left, right } => {
            let l = execute(left, db)?;
            let r = execute(right, db)?;
            if l.columns.len() != r.columns.len() {
                return Err(ExecError::ArityMismatch {
                    left: l.columns.len(),
                    right: r.columns.len(),
                });
            }
            let rows = match op {
                SetOp::Union => {
                    let mut rows = dedup_rows(l.rows);
                    for row in r.rows {
                        if !contains_row(&rows, &row) {
                            rows.push(row);
                        }
                    }
                    rows
                }
                SetOp::Except => dedup_rows(l.rows)
                    .into_iter()
                    .filter(|row| !contains_row(&r.rows, row))
                    .collect(),
                SetOp::Intersect => dedup_rows(l.rows)
                    .into_iter()
                    .filter(|row| contains_row(&r.rows, row))
                    .collect(),
            };
            Ok(ResultSet {
                columns: l.columns,
                rows,
                ordered: false,
            })
        }
    }
}

fn dedup_rows(rows: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = Vec::with_capacity(rows.len());
    for row in rows {
        if !contains_row(&out, &row) {
            out.push(row);
        }
    }
    out
}

fn contains_row(rows: &[Vec<Value>], needle: &[Value]) -> bool {
    rows.iter().any(|r| cmp_rows(r, needle) == Ordering::Equal)
}

// --- scoped relation -----------------------------------------------------

/// One column of the joined working relation: which FROM/JOIN entry it
/// came from (alias or table name, lowercased) plus its name.
#[derive(Debug, Clone)]
struct ScopedColumn {
    label: String,
    name: String,
    /// Original-case name, used for `SELECT *` headers.
    display: String,
}

struct Relation {
    schema: Vec<ScopedColumn>,
    rows: Vec<Vec<Value>>,
}

impl Relation {
    fn resolve(&self, c: &ColumnRef) -> Result<usize, ExecError> {
        let name = c.column.to_ascii_lowercase();
        match &c.table {
            Some(q) => {
                let label = q.to_ascii_lowercase();
                self.schema
                    .iter()
                    .position(|sc| sc.label == label && sc.name == name)
                    .ok_or_else(|| ExecError::UnknownColumn(format!("{c}")))
            }
            None => {
                let mut hits = self
                    .schema
                    .iter()
                    .enumerate()
                    .filter(|(_, sc)| sc.name == name);
                match (hits.next(), hits.next()) {
                    (Some((i, _)), None) => Ok(i),
                    (Some(_), Some(_)) => Err(ExecError::AmbiguousColumn(c.column.clone())),
                    (None, _) => Err(ExecError::UnknownColumn(c.column.clone())),
                }
            }
        }
    }
}

fn base_relation(db: &Database, tr: &TableRef) -> Result<Relation, ExecError> {
    let table = db
        .table(&tr.table)
        .ok_or_else(|| ExecError::UnknownTable(tr.table.clone()))?;
    let label = tr
        .alias
        .as_ref()
        .unwrap_or(&tr.table)
        .to_ascii_lowercase();
    let schema = table
        .columns
        .iter()
        .map(|c| ScopedColumn {
            label: label.clone(),
            name: c.name.to_ascii_lowercase(),
            display: c.name.clone(),
        })
        .collect();
    Ok(Relation {
        schema,
        rows: table.rows.clone(),
    })
}

fn join_relation(mut acc: Relation, db: &Database, join: &Join) -> Result<Relation, ExecError> {
    let right = base_relation(db, &join.table)?;
    let mut schema = acc.schema.clone();
    schema.extend(right.schema.iter().cloned());
    let combined = Relation {
        schema,
        rows: Vec::new(),
    };

    // Resolve ON equalities against the combined schema once.
    let mut pairs = Vec::new();
    for (l, r) in &join.on {
        pairs.push((combined.resolve(l)?, combined.resolve(r)?));
    }

    let left_width = acc.schema.len();
    let mut rows = Vec::new();
    for lrow in acc.rows.drain(..) {
        for rrow in &right.rows {
            let mut candidate = lrow.clone();
            candidate.extend(rrow.iter().cloned());
            let mut keep = true;
            for &(a, b) in &pairs {
                let (x, y) = (&candidate[a], &candidate[b]);
                if x.is_null() || y.is_null() {
                    keep = false;
                    break;
                }
                match compare_values(x, y) {
                    Some(Ordering::Equal) => {}
                    Some(_) => {
                        keep = false;
                        break;
                    }
                    None => {
                        return Err(ExecError::TypeMismatch(format!(
                            "join comparison between incompatible kinds ({} vs {})",
                            kind_name(x),
                            kind_name(y)
                        )));
                    }
                }
            }
            if keep {
                rows.push(candidate);
            }
        }
    }
    let _ = left_width;
    Ok(Relation {
        schema: combined.schema,
        rows,
    })
}

fn kind_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Integer(_) => "integer",
        Value::Real(_) => "real",
        Value::Text(_) => "text",
    }
}

// --- select pipeline -----------------------------------------------------

fn execute_select(s: &Select, db: &Database) -> Result<ResultSet, ExecError> {
    let mut rel = base_relation(db, &s.from)?;
    for join in &s.joins {
        rel = join_relation(rel, db, join)?;
    }

    if let Some(w) = &s.where_clause {
        let ctx = EvalContext { db };
        let candidates = std::mem::take(&mut rel.rows);
        let mut kept = Vec::with_capacity(candidates.len());
        for row in candidates {
            if eval_predicate(w, &rel, &row, &ctx)? {
                kept.push(row);
            }
        }
        rel.rows = kept;
    }

    let has_aggregates = select_has_aggregates(s);
    let (columns, mut keyed_rows) = if has_aggregates || !s.group_by.is_empty() {
        project_grouped(s, &rel, db)?
    } else {
        project_plain(s, &rel, db)?
    };

    if s.distinct {
        let mut seen: Vec<Vec<Value>> = Vec::new();
        keyed_rows.retain(|(row, _)| {
            if contains_row(&seen, row) {
                false
            } else {
                seen.push(row.clone());
                true
            }
        });
    }

    if !s.order_by.is_empty() {
        let descs: Vec<bool> = s.order_by.iter().map(|k| k.desc).collect();
        keyed_rows.sort_by(|(_, ka), (_, kb)| {
            for ((a, b), desc) in ka.iter().zip(kb.iter()).zip(descs.iter()) {
                let ord = crate::relational::cmp_values(a, b);
                let ord = if *desc { ord.reverse() } else { ord };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        });
    }

    let mut rows: Vec<Vec<Value>> = keyed_rows.into_iter().map(|(row, _)| row).collect();
    if let Some(limit) = s.limit {
        rows.truncate(limit as usize);
    }

    Ok(ResultSet {
        columns,
        rows,
        ordered: !s.order_by.is_empty(),
    })
}

fn select_has_aggregates(s: &Select) -> bool {
    let item_agg = s.items.iter().any(|i| {
        matches!(
            i,
            SelectItem::Expr {
                expr: ScalarExpr::Aggregate(_),
                ..
            }
        )
    });
    let order_agg = s
        .order_by
        .iter()
        .any(|k| matches!(k.expr, ScalarExpr::Aggregate(_)));
    item_agg || order_agg || s.having.is_some()
}

/// Row-at-a-time projection. Returns (headers, rows paired with their
/// ORDER BY key tuples).
#[allow(clippy::type_complexity)]
fn project_plain(
    s: &Select,
    rel: &Relation,
    db: &Database,
) -> Result<(Vec<String>, Vec<(Vec<Value>, Vec<Value>)>), ExecError> {
    // Pre-resolve item columns.
    enum Plan {
        Star,
        Col(usize),
    }
    let mut columns = Vec::new();
    let mut plans = Vec::new();
    for item in &s.items {
        match item {
            SelectItem::Star => {
                for sc in &rel.schema {
                    columns.push(sc.display.clone());
                }
                plans.push(Plan::Star);
            }
            SelectItem::Expr { expr, alias } => match expr {
                ScalarExpr::Column(c) => {
                    let idx = rel.resolve(c)?;
                    columns.push(alias.clone().unwrap_or_else(|| c.column.clone()));
                    plans.push(Plan::Col(idx));
                }
                ScalarExpr::Aggregate(_) => unreachable!("aggregates route to grouped projection"),
            },
        }
    }

    // ORDER BY resolution: select alias first, then underlying column.
    enum KeyPlan {
        Output(usize),
        Underlying(usize),
    }
    let mut key_plans = Vec::new();
    for k in &s.order_by {
        match &k.expr {
            ScalarExpr::Column(c) if c.table.is_none() => {
                if let Some(pos) = alias_position(s, &c.column) {
                    key_plans.push(KeyPlan::Output(pos));
                    continue;
                }
                key_plans.push(KeyPlan::Underlying(rel.resolve(c)?));
            }
            ScalarExpr::Column(c) => key_plans.push(KeyPlan::Underlying(rel.resolve(c)?)),
            ScalarExpr::Aggregate(_) => {
                unreachable!("order-by aggregates route to grouped projection")
            }
        }
    }
    let _ = db;

    let mut out = Vec::with_capacity(rel.rows.len());
    for row in &rel.rows {
        let mut projected = Vec::with_capacity(columns.len());
        for plan in &plans {
            match plan {
                Plan::Star => projected.extend(row.iter().cloned()),
                Plan::Col(i) => projected.push(row[*i].clone()),
            }
        }
        let mut keys = Vec::with_capacity(key_plans.len());
        for kp in &key_plans {
            match kp {
                KeyPlan::Output(pos) => keys.push(projected[*pos].clone()),
                KeyPlan::Underlying(i) => keys.push(row[*i].clone()),
            }
        }
        out.push((projected, keys));
    }
    Ok((columns, out))
}

/// Positional index of a select-list alias in the output row, accounting
/// for `*` expansion not being addressable by alias.
fn alias_position(s: &Select, name: &str) -> Option<usize> {
    let mut pos = 0;
    for item in &s.items {
        match item {
            SelectItem::Star => return None,
            SelectItem::Expr { alias, .. } => {
                if alias.as_deref().is_some_and(|a| a.eq_ignore_ascii_case(name)) {
                    return Some(pos);
                }
                pos += 1;
            }
        }
    }
    None
}

#[allow(clippy::type_complexity)]
fn project_grouped(
    s: &Select,
    rel: &Relation,
    db: &Database,
) -> Result<(Vec<String>, Vec<(Vec<Value>, Vec<Value>)>), ExecError> {
    // Group keys resolve against the working relation.
    let key_indices: Vec<usize> = s
        .group_by
        .iter()
        .map(|c| rel.resolve(c))
        .collect::<Result<_, _>>()?;

    // Partition rows by group-key equality, first-encounter order.
    let mut groups: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
    if key_indices.is_empty() {
        // Implicit single group, present even over an empty relation.
        groups.push((Vec::new(), (0..rel.rows.len()).collect()));
    } else {
        for (ri, row) in rel.rows.iter().enumerate() {
            let key: Vec<Value> = key_indices.iter().map(|&i| row[i].clone()).collect();
            match groups
                .iter_mut()
                .find(|(k, _)| cmp_rows(k, &key) == Ordering::Equal)
            {
                Some((_, members)) => members.push(ri),
                None => groups.push((key, vec![ri])),
            }
        }
    }

    let ctx = EvalContext { db };

    // HAVING filters groups.
    if let Some(h) = &s.having {
        let mut kept = Vec::new();
        for (key, members) in groups {
            let rows: Vec<&Vec<Value>> = members.iter().map(|&i| &rel.rows[i]).collect();
            if expr::eval_having(h, rel, &key, &key_indices, &rows, &ctx)? {
                kept.push((key, members));
            }
        }
        groups = kept;
    }

    // Projection plans.
    enum Plan {
        GroupCol { key_pos: usize, header: String },
        Agg(Aggregate, String),
    }
    let mut plans = Vec::new();
    for item in &s.items {
        match item {
            SelectItem::Star => return Err(ExecError::StarInGroupedQuery),
            SelectItem::Expr { expr, alias } => match expr {
                ScalarExpr::Column(c) => {
                    let idx = rel.resolve(c)?;
                    let key_pos = key_indices
                        .iter()
                        .position(|&k| k == idx)
                        .ok_or_else(|| ExecError::UngroupedColumn(c.column.clone()))?;
                    plans.push(Plan::GroupCol {
                        key_pos,
                        header: alias.clone().unwrap_or_else(|| c.column.clone()),
                    });
                }
                ScalarExpr::Aggregate(a) => {
                    let header = alias.clone().unwrap_or_else(|| a.to_string());
                    plans.push(Plan::Agg(a.clone(), header));
                }
            },
        }
    }
    let columns: Vec<String> = plans
        .iter()
        .map(|p| match p {
            Plan::GroupCol { header, .. } => header.clone(),
            Plan::Agg(_, header) => header.clone(),
        })
        .collect();

    // ORDER BY plans: alias, group-by column, or aggregate.
    enum KeyPlan {
        Output(usize),
        GroupKey(usize),
        Agg(Aggregate),
    }
    let mut key_plans = Vec::new();
    for k in &s.order_by {
        match &k.expr {
            ScalarExpr::Aggregate(a) => key_plans.push(KeyPlan::Agg(a.clone())),
            ScalarExpr::Column(c) => {
                if c.table.is_none() {
                    if let Some(pos) = alias_position(s, &c.column) {
                        key_plans.push(KeyPlan::Output(pos));
                        continue;
                    }
                }
                let idx = rel.resolve(c)?;
                let key_pos = key_indices
                    .iter()
                    .position(|&kidx| kidx == idx)
                    .ok_or_else(|| ExecError::UngroupedColumn(c.column.clone()))?;
                key_plans.push(KeyPlan::GroupKey(key_pos));
            }
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    for (key, members) in &groups {
        let rows: Vec<&Vec<Value>> = members.iter().map(|&i| &rel.rows[i]).collect();
        let mut projected = Vec::with_capacity(plans.len());
        for plan in &plans {
            match plan {
                Plan::GroupCol { key_pos, .. } => projected.push(key[*key_pos].clone()),
                Plan::Agg(a, _) => projected.push(expr::eval_aggregate(a, rel, &rows)?),
            }
        }
        let mut keys = Vec::with_capacity(key_plans.len());
        for kp in &key_plans {
            match kp {
                KeyPlan::Output(pos) => keys.push(projected[*pos].clone()),
                KeyPlan::GroupKey(pos) => keys.push(key[*pos].clone()),
                KeyPlan::Agg(a) => keys.push(expr::eval_aggregate(a, rel, &rows)?),
            }
        }
        out.push((projected, keys));
    }
    Ok((columns, out))
}

// Internal hooks used by expression evaluation for subqueries.
pub(crate) fn execute_subquery(ast: &SetExpr, db: &Database) -> Result<ResultSet, ExecError> {
    execute(ast, db)
}
