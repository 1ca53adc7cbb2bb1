//! Recursive-descent parser for the SQL subset.
//!
//! Supported: SELECT lists with aggregates and DISTINCT, FROM with aliases,
//! INNER JOIN .. ON equality chains, WHERE trees (comparison, AND/OR/NOT,
//! BETWEEN, LIKE, IN, IS NULL, scalar/EXISTS/ANY/ALL subqueries), GROUP BY,
//! HAVING, ORDER BY, LIMIT, and UNION/EXCEPT/INTERSECT over sub-selects.
//! Everything else is rejected with a named [`SqlError::Unsupported`].

use super::ast::*;
use super::lexer::{lex, LexError, Tok, Token};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SqlError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported construct at {pos}: {construct}")]
    Unsupported { pos: usize, construct: String },
    #[error("aggregate not allowed in WHERE at {pos}")]
    AggregateInWhere { pos: usize },
    #[error("unresolved column reference `{reference}`: no table or alias `{qualifier}` in scope")]
    UnresolvedColumn {
        reference: String,
        qualifier: String,
    },
}

impl From<LexError> for SqlError {
    fn from(e: LexError) -> Self {
        match e {
            LexError::UnterminatedString(pos) => SqlError::Syntax {
                pos,
                expected: "closing `'`".into(),
                found: "end of input".into(),
            },
            LexError::UnexpectedChar { ch, pos } => SqlError::Syntax {
                pos,
                expected: "a token".into(),
                found: format!("`{ch}`"),
            },
        }
    }
}

/// Parses one statement of the subset into an AST and validates that
/// qualified column references resolve to an in-scope table or alias.
pub fn parse_sql(text: &str) -> Result<SetExpr, SqlError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };

    // Reject non-query statements up front with a named construct.
    if let Tok::Ident(word) = &p.peek().tok {
        let upper = word.to_ascii_uppercase();
        if matches!(
            upper.as_str(),
            "INSERT" | "UPDATE" | "DELETE" | "CREATE" | "DROP" | "ALTER" | "WITH"
        ) {
            return Err(SqlError::Unsupported {
                pos: p.peek().pos,
                construct: upper,
            });
        }
    }

    let expr = p.parse_set_expr()?;
    if p.peek_kw("ORDER") || p.peek_kw("LIMIT") {
        // ORDER BY / LIMIT applying to a whole compound is out of subset.
        return Err(SqlError::Unsupported {
            pos: p.peek().pos,
            construct: "ORDER BY/LIMIT on a set operation".into(),
        });
    }
    if matches!(p.peek().tok, Tok::Semicolon) {
        p.advance();
    }
    p.expect_eof()?;
    validate(&expr)?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, expected: impl Into<String>) -> SqlError {
        SqlError::Syntax {
            pos: self.peek().pos,
            expected: expected.into(),
            found: self.peek().tok.describe(),
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn peek_kw_at(&self, offset: usize, kw: &str) -> bool {
        matches!(&self.peek_at(offset).tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err_here(format!("`{kw}`")))
        }
    }

    fn expect_tok(&mut self, tok: Tok, what: &str) -> Result<(), SqlError> {
        if self.peek().tok == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.err_here(what))
        }
    }

    fn expect_eof(&self) -> Result<(), SqlError> {
        if matches!(self.peek().tok, Tok::Eof) {
            Ok(())
        } else {
            Err(self.err_here("end of statement"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SqlError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.err_here(what)),
        }
    }

    // -- grammar ----------------------------------------------------------

    fn parse_set_expr(&mut self) -> Result<SetExpr, SqlError> {
        let mut left = self.parse_set_operand()?;
        loop {
            let op = if self.peek_kw("UNION") {
                SetOp::Union
            } else if self.peek_kw("EXCEPT") {
                SetOp::Except
            } else if self.peek_kw("INTERSECT") {
                SetOp::Intersect
            } else {
                break;
            };
            let op_pos = self.peek().pos;
            self.advance();
            if self.peek_kw("ALL") {
                return Err(SqlError::Unsupported {
                    pos: op_pos,
                    construct: format!("{op} ALL"),
                });
            }
            let right = self.parse_set_operand()?;
            left = SetExpr::Compound {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_set_operand(&mut self) -> Result<SetExpr, SqlError> {
        if matches!(self.peek().tok, Tok::LParen) {
            self.advance();
            let inner = self.parse_set_expr()?;
            self.expect_tok(Tok::RParen, "`)`")?;
            Ok(inner)
        } else {
            Ok(SetExpr::Select(Box::new(self.parse_select()?)))
        }
    }

    fn parse_select(&mut self) -> Result<Select, SqlError> {
        self.expect_kw("SELECT")?;
        let distinct = self.eat_kw("DISTINCT");

        let mut items = Vec::new();
        loop {
            items.push(self.parse_select_item()?);
            if matches!(self.peek().tok, Tok::Comma) {
                self.advance();
            } else {
                break;
            }
        }

        self.expect_kw("FROM")?;
        let from = self.parse_table_ref()?;

        let mut joins = Vec::new();
        loop {
            if self.peek_kw("INNER") || self.peek_kw("JOIN") {
                if self.peek_kw("INNER") {
                    self.advance();
                }
                self.expect_kw("JOIN")?;
                let table = self.parse_table_ref()?;
                self.expect_kw("ON")?;
                let mut on = vec![self.parse_on_equality()?];
                while self.peek_kw("AND") {
                    self.advance();
                    on.push(self.parse_on_equality()?);
                }
                joins.push(Join { table, on });
            } else if let Some(construct) = self.unsupported_join() {
                return Err(SqlError::Unsupported {
                    pos: self.peek().pos,
                    construct,
                });
            } else if matches!(self.peek().tok, Tok::Comma) {
                return Err(SqlError::Unsupported {
                    pos: self.peek().pos,
                    construct: "comma join (implicit cross product)".into(),
                });
            } else {
                break;
            }
        }

        let where_clause = if self.eat_kw("WHERE") {
            Some(self.parse_predicate(false)?)
        } else {
            None
        };

        let mut group_by = Vec::new();
        if self.peek_kw("GROUP") {
            self.advance();
            self.expect_kw("BY")?;
            loop {
                group_by.push(self.parse_column_ref()?);
                if matches!(self.peek().tok, Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }

        let having = if self.eat_kw("HAVING") {
            Some(self.parse_predicate(true)?)
        } else {
            None
        };

        let mut order_by = Vec::new();
        if self.peek_kw("ORDER") {
            self.advance();
            self.expect_kw("BY")?;
            loop {
                let expr = self.parse_scalar_expr()?;
                let desc = if self.eat_kw("DESC") {
                    true
                } else {
                    self.eat_kw("ASC");
                    false
                };
                order_by.push(OrderKey { expr, desc });
                if matches!(self.peek().tok, Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }

        let limit = if self.eat_kw("LIMIT") {
            let pos = self.peek().pos;
            match &self.peek().tok {
                Tok::Number(n) => {
                    let v = n.parse::<u64>().map_err(|_| SqlError::Syntax {
                        pos,
                        expected: "a non-negative integer".into(),
                        found: format!("`{n}`"),
                    })?;
                    self.advance();
                    if self.peek_kw("OFFSET") {
                        return Err(SqlError::Unsupported {
                            pos: self.peek().pos,
                            construct: "OFFSET".into(),
                        });
                    }
                    Some(v)
                }
                _ => return Err(self.err_here("a limit count")),
            }
        } else {
            None
        };

        Ok(Select {
            distinct,
            items,
            from,
            joins,
            where_clause,
            group_by,
            having,
            order_by,
            limit,
        })
    }

    /// Names the join flavor we refuse, reading ahead for two-word forms
    /// such as `LEFT OUTER JOIN` and `CROSS APPLY`.
    fn unsupported_join(&self) -> Option<String> {
        let first = match &self.peek().tok {
            Tok::Ident(s) => s.to_ascii_uppercase(),
            _ => return None,
        };
        if !matches!(
            first.as_str(),
            "LEFT" | "RIGHT" | "FULL" | "OUTER" | "CROSS" | "NATURAL"
        ) {
            return None;
        }
        let mut words = vec![first];
        for offset in 1..3 {
            match &self.peek_at(offset).tok {
                Tok::Ident(s) => {
                    let upper = s.to_ascii_uppercase();
                    let done = matches!(upper.as_str(), "JOIN" | "APPLY");
                    words.push(upper);
                    if done {
                        break;
                    }
                }
                _ => break,
            }
        }
        Some(words.join(" "))
    }

    fn parse_table_ref(&mut self) -> Result<TableRef, SqlError> {
        let table = self.ident("a table name")?;
        let alias = if self.eat_kw("AS") {
            Some(self.ident("an alias")?)
        } else if let Tok::Ident(s) = &self.peek().tok {
            // Bare alias, provided the word is not a clause keyword.
            if is_clause_keyword(s) {
                None
            } else {
                Some(self.ident("an alias")?)
            }
        } else {
            None
        };
        Ok(TableRef { table, alias })
    }

    fn parse_on_equality(&mut self) -> Result<(ColumnRef, ColumnRef), SqlError> {
        let left = self.parse_column_ref()?;
        self.expect_tok(Tok::Eq, "`=`")?;
        let right = self.parse_column_ref()?;
        Ok((left, right))
    }

    fn parse_column_ref(&mut self) -> Result<ColumnRef, SqlError> {
        let first = self.ident("a column name")?;
        if matches!(self.peek().tok, Tok::Dot) {
            self.advance();
            let column = self.ident("a column name")?;
            Ok(ColumnRef {
                table: Some(first),
                column,
            })
        } else {
            Ok(ColumnRef {
                table: None,
                column: first,
            })
        }
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, SqlError> {
        if matches!(self.peek().tok, Tok::Star) {
            self.advance();
            return Ok(SelectItem::Star);
        }
        let expr = self.parse_scalar_expr()?;
        let alias = if self.eat_kw("AS") {
            Some(self.ident("an alias")?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn parse_scalar_expr(&mut self) -> Result<ScalarExpr, SqlError> {
        if self.is_function_call() {
            Ok(ScalarExpr::Aggregate(self.parse_aggregate()?))
        } else {
            Ok(ScalarExpr::Column(self.parse_column_ref()?))
        }
    }

    fn is_function_call(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(_)) && matches!(self.peek_at(1).tok, Tok::LParen)
    }

    fn parse_aggregate(&mut self) -> Result<Aggregate, SqlError> {
        let pos = self.peek().pos;
        let name = self.ident("a function name")?;
        let func = match name.to_ascii_uppercase().as_str() {
            "COUNT" => AggFunc::Count,
            "SUM" => AggFunc::Sum,
            "AVG" => AggFunc::Avg,
            "MAX" => AggFunc::Max,
            "MIN" => AggFunc::Min,
            other => {
                return Err(SqlError::Unsupported {
                    pos,
                    construct: format!("function {other}"),
                });
            }
        };
        self.expect_tok(Tok::LParen, "`(`")?;
        let distinct = self.eat_kw("DISTINCT");
        let arg = if matches!(self.peek().tok, Tok::Star) {
            self.advance();
            AggArg::Star
        } else {
            AggArg::Column(self.parse_column_ref()?)
        };
        self.expect_tok(Tok::RParen, "`)`")?;
        Ok(Aggregate {
            func,
            distinct,
            arg,
        })
    }

    fn parse_predicate(&mut self, allow_agg: bool) -> Result<Predicate, SqlError> {
        self.parse_or(allow_agg)
    }

    fn parse_or(&mut self, allow_agg: bool) -> Result<Predicate, SqlError> {
        let mut left = self.parse_and(allow_agg)?;
        while self.eat_kw("OR") {
            let right = self.parse_and(allow_agg)?;
            left = Predicate::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_and(&mut self, allow_agg: bool) -> Result<Predicate, SqlError> {
        let mut left = self.parse_not(allow_agg)?;
        while self.eat_kw("AND") {
            let right = self.parse_not(allow_agg)?;
            left = Predicate::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_not(&mut self, allow_agg: bool) -> Result<Predicate, SqlError> {
        if self.eat_kw("NOT") {
            let inner = self.parse_not(allow_agg)?;
            Ok(Predicate::Not(Box::new(inner)))
        } else {
            self.parse_pred_atom(allow_agg)
        }
    }

    fn parse_pred_atom(&mut self, allow_agg: bool) -> Result<Predicate, SqlError> {
        if self.peek_kw("EXISTS") {
            self.advance();
            self.expect_tok(Tok::LParen, "`(`")?;
            let query = self.parse_set_expr()?;
            self.expect_tok(Tok::RParen, "`)`")?;
            return Ok(Predicate::Exists {
                query: Box::new(query),
            });
        }

        // A parenthesized group, unless it opens a scalar subquery operand.
        if matches!(self.peek().tok, Tok::LParen) && !self.peek_kw_at(1, "SELECT") {
            self.advance();
            let inner = self.parse_predicate(allow_agg)?;
            self.expect_tok(Tok::RParen, "`)`")?;
            return Ok(inner);
        }

        let operand = self.parse_operand(allow_agg)?;
        self.parse_pred_tail(operand, allow_agg)
    }

    fn parse_pred_tail(
        &mut self,
        operand: Operand,
        allow_agg: bool,
    ) -> Result<Predicate, SqlError> {
        if self.peek_kw("IS") {
            self.advance();
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Predicate::IsNull { operand, negated });
        }

        let negated = if self.peek_kw("NOT")
            && (self.peek_kw_at(1, "BETWEEN") || self.peek_kw_at(1, "LIKE") || self.peek_kw_at(1, "IN"))
        {
            self.advance();
            true
        } else {
            false
        };

        if self.eat_kw("BETWEEN") {
            let low = self.parse_operand(allow_agg)?;
            self.expect_kw("AND")?;
            let high = self.parse_operand(allow_agg)?;
            return Ok(Predicate::Between {
                operand,
                low,
                high,
                negated,
            });
        }

        if self.eat_kw("LIKE") {
            let pos = self.peek().pos;
            match &self.peek().tok {
                Tok::Str(pattern) => {
                    let pattern = pattern.clone();
                    self.advance();
                    return Ok(Predicate::Like {
                        operand,
                        pattern,
                        negated,
                    });
                }
                other => {
                    return Err(SqlError::Syntax {
                        pos,
                        expected: "a string pattern".into(),
                        found: other.describe(),
                    });
                }
            }
        }

        if self.eat_kw("IN") {
            self.expect_tok(Tok::LParen, "`(`")?;
            if self.peek_kw("SELECT") || matches!(self.peek().tok, Tok::LParen) {
                let query = self.parse_set_expr()?;
                self.expect_tok(Tok::RParen, "`)`")?;
                return Ok(Predicate::InQuery {
                    operand,
                    query: Box::new(query),
                    negated,
                });
            }
            let mut items = vec![self.parse_literal()?];
            while matches!(self.peek().tok, Tok::Comma) {
                self.advance();
                items.push(self.parse_literal()?);
            }
            self.expect_tok(Tok::RParen, "`)`")?;
            return Ok(Predicate::InList {
                operand,
                items,
                negated,
            });
        }

        let op = match self.peek().tok {
            Tok::Eq => CmpOp::Eq,
            Tok::NotEq => CmpOp::NotEq,
            Tok::Lt => CmpOp::Lt,
            Tok::LtEq => CmpOp::LtEq,
            Tok::Gt => CmpOp::Gt,
            Tok::GtEq => CmpOp::GtEq,
            _ => return Err(self.err_here("a comparison operator, BETWEEN, LIKE, IN, or IS")),
        };
        self.advance();

        if self.peek_kw("ANY") || self.peek_kw("ALL") || self.peek_kw("SOME") {
            let quantifier = if self.eat_kw("ALL") {
                Quantifier::All
            } else {
                self.advance();
                Quantifier::Any
            };
            self.expect_tok(Tok::LParen, "`(`")?;
            let query = self.parse_set_expr()?;
            self.expect_tok(Tok::RParen, "`)`")?;
            return Ok(Predicate::CompareQuantified {
                left: operand,
                op,
                quantifier,
                query: Box::new(query),
            });
        }

        let right = self.parse_operand(allow_agg)?;
        Ok(Predicate::Compare {
            left: operand,
            op,
            right,
        })
    }

    fn parse_operand(&mut self, allow_agg: bool) -> Result<Operand, SqlError> {
        match &self.peek().tok {
            Tok::LParen => {
                self.advance();
                let query = self.parse_set_expr()?;
                self.expect_tok(Tok::RParen, "`)`")?;
                Ok(Operand::Scalar(Box::new(query)))
            }
            Tok::Number(_) | Tok::Minus | Tok::Str(_) => Ok(Operand::Literal(self.parse_literal()?)),
            Tok::Ident(word) => {
                if word.eq_ignore_ascii_case("NULL") {
                    self.advance();
                    return Ok(Operand::Literal(Literal::Null));
                }
                if self.is_function_call() {
                    let pos = self.peek().pos;
                    let agg = self.parse_aggregate()?;
                    if !allow_agg {
                        return Err(SqlError::AggregateInWhere { pos });
                    }
                    return Ok(Operand::Aggregate(agg));
                }
                Ok(Operand::Column(self.parse_column_ref()?))
            }
            _ => Err(self.err_here("an operand")),
        }
    }

    fn parse_literal(&mut self) -> Result<Literal, SqlError> {
        let negative = if matches!(self.peek().tok, Tok::Minus) {
            self.advance();
            true
        } else {
            false
        };
        let pos = self.peek().pos;
        match &self.peek().tok {
            Tok::Number(raw) => {
                let raw = raw.clone();
                self.advance();
                parse_number(&raw, negative).ok_or(SqlError::Syntax {
                    pos,
                    expected: "a numeric literal".into(),
                    found: format!("`{raw}`"),
                })
            }
            Tok::Str(s) => {
                if negative {
                    return Err(SqlError::Syntax {
                        pos,
                        expected: "a number after `-`".into(),
                        found: "string literal".into(),
                    });
                }
                let s = s.clone();
                self.advance();
                Ok(Literal::Text(s))
            }
            Tok::Ident(word) if word.eq_ignore_ascii_case("NULL") => {
                self.advance();
                Ok(Literal::Null)
            }
            other => Err(SqlError::Syntax {
                pos,
                expected: "a literal".into(),
                found: other.describe(),
            }),
        }
    }
}

fn parse_number(raw: &str, negative: bool) -> Option<Literal> {
    if raw.contains('.') || raw.contains('e') || raw.contains('E') {
        let mut v: f64 = raw.parse().ok()?;
        if negative {
            v = -v;
        }
        v.is_finite().then_some(Literal::Real(v))
    } else {
        match raw.parse::<i64>() {
            Ok(v) => Some(Literal::Integer(if negative { -v } else { v })),
            Err(_) => {
                let mut v: f64 = raw.parse().ok()?;
                if negative {
                    v = -v;
                }
                v.is_finite().then_some(Literal::Real(v))
            }
        }
    }
}

fn is_clause_keyword(word: &str) -> bool {
    matches!(
        word.to_ascii_uppercase().as_str(),
        "SELECT"
            | "FROM"
            | "WHERE"
            | "GROUP"
            | "HAVING"
            | "ORDER"
            | "LIMIT"
            | "JOIN"
            | "INNER"
            | "ON"
            | "AND"
            | "OR"
            | "NOT"
            | "UNION"
            | "EXCEPT"
            | "INTERSECT"
            | "LEFT"
            | "RIGHT"
            | "FULL"
            | "OUTER"
            | "CROSS"
            | "NATURAL"
    )
}

// --- scope validation ----------------------------------------------------

/// Checks that every qualified column reference names a table or alias
/// visible in its own select scope (subqueries are self-contained).
fn validate(expr: &SetExpr) -> Result<(), SqlError> {
    match expr {
        SetExpr::Select(s) => validate_select(s),
        SetExpr::Compound { left, right, .. } => {
            validate(left)?;
            validate(right)
        }
    }
}

fn validate_select(s: &Select) -> Result<(), SqlError> {
    let mut scope: Vec<String> = Vec::new();
    for tr in std::iter::once(&s.from).chain(s.joins.iter().map(|j| &j.table)) {
        scope.push(tr.table.to_ascii_lowercase());
        if let Some(a) = &tr.alias {
            scope.push(a.to_ascii_lowercase());
        }
    }
    let check = |c: &ColumnRef| -> Result<(), SqlError> {
        if let Some(q) = &c.table {
            if !scope.contains(&q.to_ascii_lowercase()) {
                return Err(SqlError::UnresolvedColumn {
                    reference: format!("{c}"),
                    qualifier: q.clone(),
                });
            }
        }
        Ok(())
    };

    let check_scalar = |e: &ScalarExpr| -> Result<(), SqlError> {
        match e {
            ScalarExpr::Column(c) => check(c),
            ScalarExpr::Aggregate(a) => match &a.arg {
                AggArg::Star => Ok(()),
                AggArg::Column(c) => check(c),
            },
        }
    };

    for item in &s.items {
        if let SelectItem::Expr { expr, .. } = item {
            check_scalar(expr)?;
        }
    }
    for j in &s.joins {
        for (l, r) in &j.on {
            check(l)?;
            check(r)?;
        }
    }
    for c in &s.group_by {
        check(c)?;
    }
    for k in &s.order_by {
        check_scalar(&k.expr)?;
    }
    if let Some(p) = &s.where_clause {
        validate_pred(p, &check)?;
    }
    if let Some(p) = &s.having {
        validate_pred(p, &check)?;
    }
    Ok(())
}

fn validate_pred(
    p: &Predicate,
    check: &dyn Fn(&ColumnRef) -> Result<(), SqlError>,
) -> Result<(), SqlError> {
    let check_operand = |o: &Operand| -> Result<(), SqlError> {
        match o {
            Operand::Column(c) => check(c),
            Operand::Aggregate(a) => match &a.arg {
                AggArg::Star => Ok(()),
                AggArg::Column(c) => check(c),
            },
            Operand::Literal(_) => Ok(()),
            Operand::Scalar(q) => validate(q),
        }
    };
    match p {
        Predicate::And(l, r) | Predicate::Or(l, r) => {
            validate_pred(l, check)?;
            validate_pred(r, check)
        }
        Predicate::Not(inner) => validate_pred(inner, check),
        Predicate::Compare { left, right, .. } => {
            check_operand(left)?;
            check_operand(right)
        }
        Predicate::CompareQuantified { left, query, .. } => {
            check_operand(left)?;
            validate(query)
        }
        Predicate::Between {
            operand, low, high, ..
        } => {
            check_operand(operand)?;
            check_operand(low)?;
            check_operand(high)
        }
        Predicate::Like { operand, .. } | Predicate::IsNull { operand, .. } => {
            check_operand(operand)
        }
        Predicate::InList { operand, .. } => check_operand(operand),
        Predicate::InQuery { operand, query, .. } => {
            check_operand(operand)?;
            validate(query)
        }
        Predicate::Exists { query } => validate(query),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> SetExpr {
        parse_sql(s).unwrap()
    }

    #[test]
    fn parses_simple_aggregate() {
        let ast = parse("SELECT MAX(capacity) FROM classroom");
        match ast {
            SetExpr::Select(s) => {
                assert_eq!(s.items.len(), 1);
                assert!(s.joins.is_empty());
                match &s.items[0] {
                    SelectItem::Expr {
                        expr: ScalarExpr::Aggregate(a),
                        ..
                    } => assert_eq!(a.func, AggFunc::Max),
                    other => panic!("unexpected item: {other:?}"),
                }
            }
            _ => panic!("expected select"),
        }
    }

    #[test]
    fn incomplete_statement_errors_at_end_of_input() {
        let err = parse_sql("SELECT").unwrap_err();
        match err {
            SqlError::Syntax { pos, found, .. } => {
                assert_eq!(pos, 6);
                assert_eq!(found, "end of input");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn cross_apply_is_named_as_unsupported() {
        let err = parse_sql("SELECT * FROM a CROSS APPLY b").unwrap_err();
        match err {
            SqlError::Unsupported { construct, .. } => assert_eq!(construct, "CROSS APPLY"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn left_join_is_unsupported() {
        let err = parse_sql("SELECT a.x FROM a LEFT JOIN b ON a.x = b.x").unwrap_err();
        assert!(matches!(err, SqlError::Unsupported { construct, .. } if construct == "LEFT JOIN"));
    }

    #[test]
    fn aggregates_rejected_in_where() {
        let err = parse_sql("SELECT x FROM t WHERE MAX(y) > 3").unwrap_err();
        assert!(matches!(err, SqlError::AggregateInWhere { .. }));
    }

    #[test]
    fn aggregates_allowed_in_having() {
        parse("SELECT x FROM t GROUP BY x HAVING COUNT(*) > 3");
    }

    #[test]
    fn scalar_subquery_comparison() {
        let ast = parse("SELECT wine_name FROM wine WHERE price = (SELECT MAX(price) FROM wine)");
        let SetExpr::Select(s) = ast else {
            panic!()
        };
        match s.where_clause.unwrap() {
            Predicate::Compare { right, .. } => {
                assert!(matches!(right, Operand::Scalar(_)));
            }
            other => panic!("unexpected predicate: {other:?}"),
        }
    }

    #[test]
    fn unresolved_alias_is_rejected() {
        let err = parse_sql("SELECT T9.x FROM wine AS T1").unwrap_err();
        assert!(matches!(err, SqlError::UnresolvedColumn { qualifier, .. } if qualifier == "T9"));
    }

    #[test]
    fn set_operations_parse_left_associative() {
        let ast = parse("SELECT a FROM t UNION SELECT a FROM u EXCEPT SELECT a FROM v");
        match ast {
            SetExpr::Compound { op, left, .. } => {
                assert_eq!(op, SetOp::Except);
                assert!(matches!(*left, SetExpr::Compound { op: SetOp::Union, .. }));
            }
            _ => panic!("expected compound"),
        }
    }

    #[test]
    fn between_and_binds_tighter_than_conjunction() {
        let ast = parse("SELECT x FROM t WHERE x BETWEEN 1 AND 5 AND y = 2");
        let SetExpr::Select(s) = ast else {
            panic!()
        };
        match s.where_clause.unwrap() {
            Predicate::And(l, _) => assert!(matches!(*l, Predicate::Between { .. })),
            other => panic!("unexpected predicate: {other:?}"),
        }
    }

    #[test]
    fn negative_literals_and_not_in() {
        let ast = parse("SELECT x FROM t WHERE y NOT IN (-1, 2.5, 'a')");
        let SetExpr::Select(s) = ast else {
            panic!()
        };
        match s.where_clause.unwrap() {
            Predicate::InList { items, negated, .. } => {
                assert!(negated);
                assert_eq!(
                    items,
                    vec![
                        Literal::Integer(-1),
                        Literal::Real(2.5),
                        Literal::Text("a".into())
                    ]
                );
            }
            other => panic!("unexpected predicate: {other:?}"),
        }
    }

    #[test]
    fn trailing_semicolon_is_accepted() {
        parse("SELECT count(DISTINCT instructor_name) FROM advisor;");
    }

    #[test]
    fn bare_table_alias() {
        let ast = parse("SELECT T1.a FROM things T1 WHERE T1.a > 0");
        let SetExpr::Select(s) = ast else {
            panic!()
        };
        assert_eq!(s.from.alias.as_deref(), Some("T1"));
    }

    #[test]
    fn nonsense_function_is_unsupported() {
        let err = parse_sql("SELECT SUBSTR(name) FROM t").unwrap_err();
        assert!(
            matches!(err, SqlError::Unsupported { construct, .. } if construct == "function SUBSTR")
        );
    }
}
