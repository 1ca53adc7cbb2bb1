//! Abstract syntax tree for the supported SQL subset.
//!
//! The `Display` impls emit canonical SQL that reparses to an equal tree,
//! which is what the suite round-trip check relies on.

use std::fmt;

/// A full query: a single SELECT or a set-operation tree over SELECTs.
#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Select(Box<Select>),
    Compound {
        op: SetOp,
        left: Box<SetExpr>,
        right: Box<SetExpr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Except,
    Intersect,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: TableRef,
    pub joins: Vec<Join>,
    pub where_clause: Option<Predicate>,
    pub group_by: Vec<ColumnRef>,
    pub having: Option<Predicate>,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableRef {
    pub table: String,
    pub alias: Option<String>,
}

/// An inner join with one or more AND-ed ON equalities.
#[derive(Debug, Clone, PartialEq)]
pub struct Join {
    pub table: TableRef,
    pub on: Vec<(ColumnRef, ColumnRef)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRef {
    pub table: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn bare(column: impl Into<String>) -> Self {
        ColumnRef {
            table: None,
            column: column.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Star,
    Expr {
        expr: ScalarExpr,
        alias: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Column(ColumnRef),
    Aggregate(Aggregate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub func: AggFunc,
    pub distinct: bool,
    pub arg: AggArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggArg {
    Star,
    Column(ColumnRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderKey {
    pub expr: ScalarExpr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
    Compare {
        left: Operand,
        op: CmpOp,
        right: Operand,
    },
    /// `x > ANY (subquery)` / `x = ALL (subquery)`
    CompareQuantified {
        left: Operand,
        op: CmpOp,
        quantifier: Quantifier,
        query: Box<SetExpr>,
    },
    Between {
        operand: Operand,
        low: Operand,
        high: Operand,
        negated: bool,
    },
    Like {
        operand: Operand,
        pattern: String,
        negated: bool,
    },
    InList {
        operand: Operand,
        items: Vec<Literal>,
        negated: bool,
    },
    InQuery {
        operand: Operand,
        query: Box<SetExpr>,
        negated: bool,
    },
    IsNull {
        operand: Operand,
        negated: bool,
    },
    Exists {
        query: Box<SetExpr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Column(ColumnRef),
    Literal(Literal),
    /// Aggregate operand; permitted in HAVING and ORDER BY, never WHERE.
    Aggregate(Aggregate),
    /// Scalar subquery: one column, at most one row at execution time.
    Scalar(Box<SetExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Any,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

// --- canonical rendering -------------------------------------------------

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Select(s) => write!(f, "{s}"),
            SetExpr::Compound { op, left, right } => {
                write!(f, "{left} {op} ")?;
                // Right-nested compounds need parens to survive the
                // parser's left associativity.
                match right.as_ref() {
                    SetExpr::Compound { .. } => write!(f, "({right})"),
                    _ => write!(f, "{right}"),
                }
            }
        }
    }
}

impl fmt::Display for SetOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetOp::Union => "UNION",
            SetOp::Except => "EXCEPT",
            SetOp::Intersect => "INTERSECT",
        })
    }
}

impl fmt::Display for Select {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECT ")?;
        if self.distinct {
            write!(f, "DISTINCT ")?;
        }
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{item}")?;
        }
        write!(f, " FROM {}", self.from)?;
        for join in &self.joins {
            write!(f, " INNER JOIN {} ON ", join.table)?;
            for (i, (l, r)) in join.on.iter().enumerate() {
                if i > 0 {
                    write!(f, " AND ")?;
                }
                write!(f, "{l} = {r}")?;
            }
        }
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            write!(f, " GROUP BY ")?;
            for (i, c) in self.group_by.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        if !self.order_by.is_empty() {
            write!(f, " ORDER BY ")?;
            for (i, k) in self.order_by.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", k.expr)?;
                if k.desc {
                    write!(f, " DESC")?;
                }
            }
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}

impl fmt::Display for TableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.table)?;
        if let Some(a) = &self.alias {
            write!(f, " AS {a}")?;
        }
        Ok(())
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = &self.table {
            write!(f, "{t}.")?;
        }
        write!(f, "{}", self.column)
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Star => write!(f, "*"),
            SelectItem::Expr { expr, alias } => {
                write!(f, "{expr}")?;
                if let Some(a) = alias {
                    write!(f, " AS {a}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Column(c) => write!(f, "{c}"),
            ScalarExpr::Aggregate(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.func {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Max => "MAX",
            AggFunc::Min => "MIN",
        };
        write!(f, "{name}(")?;
        if self.distinct {
            write!(f, "DISTINCT ")?;
        }
        match &self.arg {
            AggArg::Star => write!(f, "*")?,
            AggArg::Column(c) => write!(f, "{c}")?,
        }
        write!(f, ")")
    }
}

/// Precedence levels used to decide parenthesization: OR < AND < NOT < atom.
fn pred_prec(p: &Predicate) -> u8 {
    match p {
        Predicate::Or(..) => 1,
        Predicate::And(..) => 2,
        Predicate::Not(..) => 3,
        _ => 4,
    }
}

fn fmt_pred(p: &Predicate, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = pred_prec(p);
    if prec < min_prec {
        write!(f, "(")?;
        fmt_pred_inner(p, f)?;
        write!(f, ")")
    } else {
        fmt_pred_inner(p, f)
    }
}

fn fmt_pred_inner(p: &Predicate, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Predicate::Or(l, r) => {
            fmt_pred(l, 1, f)?;
            write!(f, " OR ")?;
            fmt_pred(r, 2, f)
        }
        Predicate::And(l, r) => {
            fmt_pred(l, 2, f)?;
            write!(f, " AND ")?;
            fmt_pred(r, 3, f)
        }
        Predicate::Not(inner) => {
            write!(f, "NOT ")?;
            fmt_pred(inner, 3, f)
        }
        Predicate::Compare { left, op, right } => write!(f, "{left} {op} {right}"),
        Predicate::CompareQuantified {
            left,
            op,
            quantifier,
            query,
        } => {
            let q = match quantifier {
                Quantifier::Any => "ANY",
                Quantifier::All => "ALL",
            };
            write!(f, "{left} {op} {q} ({query})")
        }
        Predicate::Between {
            operand,
            low,
            high,
            negated,
        } => {
            write!(f, "{operand} ")?;
            if *negated {
                write!(f, "NOT ")?;
            }
            write!(f, "BETWEEN {low} AND {high}")
        }
        Predicate::Like {
            operand,
            pattern,
            negated,
        } => {
            write!(f, "{operand} ")?;
            if *negated {
                write!(f, "NOT ")?;
            }
            write!(f, "LIKE {}", Literal::Text(pattern.clone()))
        }
        Predicate::InList {
            operand,
            items,
            negated,
        } => {
            write!(f, "{operand} ")?;
            if *negated {
                write!(f, "NOT ")?;
            }
            write!(f, "IN (")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{item}")?;
            }
            write!(f, ")")
        }
        Predicate::InQuery {
            operand,
            query,
            negated,
        } => {
            write!(f, "{operand} ")?;
            if *negated {
                write!(f, "NOT ")?;
            }
            write!(f, "IN ({query})")
        }
        Predicate::IsNull { operand, negated } => {
            write!(f, "{operand} IS ")?;
            if *negated {
                write!(f, "NOT ")?;
            }
            write!(f, "NULL")
        }
        Predicate::Exists { query } => write!(f, "EXISTS ({query})"),
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_pred(self, 1, f)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => write!(f, "{c}"),
            Operand::Literal(l) => write!(f, "{l}"),
            Operand::Aggregate(a) => write!(f, "{a}"),
            Operand::Scalar(q) => write!(f, "({q})"),
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtEq => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtEq => ">=",
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => write!(f, "NULL"),
            Literal::Integer(i) => write!(f, "{i}"),
            Literal::Real(r) => {
                let s = format!("{r}");
                // Keep a decimal point so the literal reparses as Real.
                if s.contains('.') || s.contains('e') || s.contains('E') {
                    write!(f, "{s}")
                } else {
                    write!(f, "{s}.0")
                }
            }
            Literal::Text(t) => write!(f, "'{}'", t.replace('\'', "''")),
        }
    }
}
