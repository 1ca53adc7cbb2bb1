//! Query-type and difficulty classification, plus referenced-table
//! extraction. All three are pure functions of the AST.

use super::ast::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QueryType {
    Aggregation,
    MaxMin,
    Join,
    Comparison,
    Ranking,
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryType::Aggregation => "Aggregation",
            QueryType::MaxMin => "Max/Min",
            QueryType::Join => "Join",
            QueryType::Comparison => "Comparison",
            QueryType::Ranking => "Ranking",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Medium",
            Difficulty::Hard => "Hard",
        })
    }
}

/// Derives the set of query types from the operators the query uses:
/// SUM/AVG/COUNT mark Aggregation, MAX/MIN mark Max/Min, a join clause
/// marks Join, ORDER BY with LIMIT marks Ranking, and a WHERE comparison
/// against a numeric literal (including BETWEEN bounds and IN lists)
/// marks Comparison.
pub fn classify_types(ast: &SetExpr) -> BTreeSet<QueryType> {
    let mut types = BTreeSet::new();
    let mut stats = Stats::default();
    collect(ast, &mut stats);

    if stats.agg_funcs.iter().any(|f| {
        matches!(f, AggFunc::Sum | AggFunc::Avg | AggFunc::Count)
    }) {
        types.insert(QueryType::Aggregation);
    }
    if stats
        .agg_funcs
        .iter()
        .any(|f| matches!(f, AggFunc::Max | AggFunc::Min))
    {
        types.insert(QueryType::MaxMin);
    }
    if stats.join_count > 0 {
        types.insert(QueryType::Join);
    }
    if stats.numeric_where_comparison {
        types.insert(QueryType::Comparison);
    }
    if stats.ranking {
        types.insert(QueryType::Ranking);
    }
    types
}

/// Applies the three-level difficulty rules.
///
/// Keyword group one counts distinct kinds among WHERE, GROUP BY, ORDER BY,
/// JOIN, OR, LIKE, HAVING, BETWEEN. Group two is any set operation or any
/// nested subquery (scalar, IN, EXISTS, ANY/ALL). The five complexity
/// factors are: more than one aggregate, more than two select columns,
/// more than one WHERE condition, more than one join, and more than one
/// GROUP BY column. Easy allows one group-one keyword and nothing else;
/// Medium allows two keywords and one factor; anything beyond is Hard.
pub fn classify_difficulty(ast: &SetExpr) -> Difficulty {
    let mut stats = Stats::default();
    collect(ast, &mut stats);

    let c1 = stats.keyword_kinds.len();
    let c2 = stats.set_ops > 0 || stats.subqueries > 0;
    let mut factors = 0;
    if stats.agg_count > 1 {
        factors += 1;
    }
    if stats.max_select_items > 2 {
        factors += 1;
    }
    if stats.max_where_conditions > 1 {
        factors += 1;
    }
    if stats.join_count > 1 {
        factors += 1;
    }
    if stats.max_group_by_columns > 1 {
        factors += 1;
    }

    if c1 > 2 || c2 || factors > 1 {
        Difficulty::Hard
    } else if c1 <= 1 && factors == 0 {
        Difficulty::Easy
    } else {
        Difficulty::Medium
    }
}

/// Union of all tables named in FROM/JOIN clauses of the query and every
/// subquery, lowercased.
pub fn referenced_tables(ast: &SetExpr) -> BTreeSet<String> {
    let mut stats = Stats::default();
    collect(ast, &mut stats);
    stats.tables
}

#[derive(Default)]
struct Stats {
    tables: BTreeSet<String>,
    agg_funcs: Vec<AggFunc>,
    agg_count: usize,
    join_count: usize,
    set_ops: usize,
    subqueries: usize,
    keyword_kinds: BTreeSet<&'static str>,
    numeric_where_comparison: bool,
    ranking: bool,
    /// Select-list width, WHERE leaf count, and GROUP BY width are taken
    /// from top-level select nodes (compound arms), not subqueries.
    max_select_items: usize,
    max_where_conditions: usize,
    max_group_by_columns: usize,
}

fn collect(expr: &SetExpr, stats: &mut Stats) {
    collect_set(expr, stats, true);
}

fn collect_set(expr: &SetExpr, stats: &mut Stats, top_level: bool) {
    match expr {
        SetExpr::Select(s) => collect_select(s, stats, top_level),
        SetExpr::Compound { left, right, .. } => {
            stats.set_ops += 1;
            collect_set(left, stats, top_level);
            collect_set(right, stats, top_level);
        }
    }
}

fn collect_select(s: &Select, stats: &mut Stats, top_level: bool) {
    stats.tables.insert(s.from.table.to_ascii_lowercase());
    for j in &s.joins {
        stats.tables.insert(j.table.table.to_ascii_lowercase());
        stats.join_count += 1;
        stats.keyword_kinds.insert("JOIN");
    }
    if s.where_clause.is_some() {
        stats.keyword_kinds.insert("WHERE");
    }
    if !s.group_by.is_empty() {
        stats.keyword_kinds.insert("GROUP BY");
    }
    if s.having.is_some() {
        stats.keyword_kinds.insert("HAVING");
    }
    if !s.order_by.is_empty() {
        stats.keyword_kinds.insert("ORDER BY");
    }
    if !s.order_by.is_empty() && s.limit.is_some() {
        stats.ranking = true;
    }
    if top_level {
        stats.max_select_items = stats.max_select_items.max(s.items.len());
        stats.max_group_by_columns = stats.max_group_by_columns.max(s.group_by.len());
        if let Some(w) = &s.where_clause {
            let leaves = count_leaves(w);
            stats.max_where_conditions = stats.max_where_conditions.max(leaves);
        }
    }

    for item in &s.items {
        if let SelectItem::Expr {
            expr: ScalarExpr::Aggregate(a),
            ..
        } = item
        {
            stats.agg_funcs.push(a.func);
            stats.agg_count += 1;
        }
    }
    for k in &s.order_by {
        if let ScalarExpr::Aggregate(a) = &k.expr {
            stats.agg_funcs.push(a.func);
            stats.agg_count += 1;
        }
    }
    if let Some(w) = &s.where_clause {
        collect_pred(w, stats, true);
    }
    if let Some(h) = &s.having {
        collect_pred(h, stats, false);
    }
}

fn collect_pred(p: &Predicate, stats: &mut Stats, in_where: bool) {
    match p {
        Predicate::And(l, r) => {
            collect_pred(l, stats, in_where);
            collect_pred(r, stats, in_where);
        }
        Predicate::Or(l, r) => {
            stats.keyword_kinds.insert("OR");
            collect_pred(l, stats, in_where);
            collect_pred(r, stats, in_where);
        }
        Predicate::Not(inner) => collect_pred(inner, stats, in_where),
        Predicate::Compare { left, right, .. } => {
            if in_where && (is_numeric_literal(left) || is_numeric_literal(right)) {
                stats.numeric_where_comparison = true;
            }
            collect_operand(left, stats);
            collect_operand(right, stats);
        }
        Predicate::CompareQuantified { left, query, .. } => {
            collect_operand(left, stats);
            stats.subqueries += 1;
            collect_set(query, stats, false);
        }
        Predicate::Between {
            operand, low, high, ..
        } => {
            stats.keyword_kinds.insert("BETWEEN");
            if in_where && (is_numeric_literal(low) || is_numeric_literal(high)) {
                stats.numeric_where_comparison = true;
            }
            collect_operand(operand, stats);
            collect_operand(low, stats);
            collect_operand(high, stats);
        }
        Predicate::Like { operand, .. } => {
            stats.keyword_kinds.insert("LIKE");
            collect_operand(operand, stats);
        }
        Predicate::InList { operand, items, .. } => {
            if in_where
                && items
                    .iter()
                    .any(|l| matches!(l, Literal::Integer(_) | Literal::Real(_)))
            {
                stats.numeric_where_comparison = true;
            }
            collect_operand(operand, stats);
        }
        Predicate::InQuery { operand, query, .. } => {
            collect_operand(operand, stats);
            stats.subqueries += 1;
            collect_set(query, stats, false);
        }
        Predicate::IsNull { operand, .. } => collect_operand(operand, stats),
        Predicate::Exists { query } => {
            stats.subqueries += 1;
            collect_set(query, stats, false);
        }
    }
}

fn collect_operand(o: &Operand, stats: &mut Stats) {
    match o {
        Operand::Aggregate(a) => {
            stats.agg_funcs.push(a.func);
            stats.agg_count += 1;
        }
        Operand::Scalar(q) => {
            stats.subqueries += 1;
            collect_set(q, stats, false);
        }
        Operand::Column(_) | Operand::Literal(_) => {}
    }
}

fn is_numeric_literal(o: &Operand) -> bool {
    matches!(
        o,
        Operand::Literal(Literal::Integer(_)) | Operand::Literal(Literal::Real(_))
    )
}

/// Leaf predicates after flattening AND/OR/NOT; BETWEEN counts as one.
fn count_leaves(p: &Predicate) -> usize {
    match p {
        Predicate::And(l, r) | Predicate::Or(l, r) => count_leaves(l) + count_leaves(r),
        Predicate::Not(inner) => count_leaves(inner),
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse_sql;

    fn types(sql: &str) -> Vec<QueryType> {
        classify_types(&parse_sql(sql).unwrap()).into_iter().collect()
    }

    fn difficulty(sql: &str) -> Difficulty {
        classify_difficulty(&parse_sql(sql).unwrap())
    }

    #[test]
    fn count_distinct_is_aggregation_only() {
        assert_eq!(
            types("SELECT count(DISTINCT instructor_name) FROM advisor"),
            vec![QueryType::Aggregation]
        );
    }

    #[test]
    fn string_equality_is_not_comparison() {
        // The equality is against a text literal, so only the aggregate
        // and join operators count.
        let sql = "SELECT AVG(T2.Price) FROM appellations AS T1 JOIN wine AS T2 \
                   ON T1.Appellation = T2.Appellation WHERE T1.County = 'Sonoma'";
        assert_eq!(types(sql), vec![QueryType::Aggregation, QueryType::Join]);
    }

    #[test]
    fn scalar_subquery_equality_is_not_comparison() {
        let sql =
            "SELECT title FROM course WHERE capacity = (SELECT MAX(capacity) FROM classroom)";
        assert_eq!(types(sql), vec![QueryType::MaxMin]);
    }

    #[test]
    fn numeric_threshold_is_comparison() {
        assert_eq!(
            types("SELECT COUNT(DISTINCT name) FROM tracks WHERE milliseconds > 720000"),
            vec![QueryType::Aggregation, QueryType::Comparison]
        );
        assert_eq!(
            types("SELECT * FROM products WHERE price BETWEEN 100 AND 200"),
            vec![QueryType::Comparison]
        );
        assert_eq!(
            types("SELECT name FROM t WHERE size IN (1, 2, 3)"),
            vec![QueryType::Comparison]
        );
    }

    #[test]
    fn order_by_limit_is_ranking() {
        assert_eq!(
            types("SELECT Title FROM posts ORDER BY ViewCount DESC LIMIT 5"),
            vec![QueryType::Ranking]
        );
        // ORDER BY without LIMIT is not ranking.
        assert_eq!(
            types("SELECT Title FROM posts ORDER BY ViewCount DESC"),
            Vec::<QueryType>::new()
        );
    }

    #[test]
    fn difficulty_easy_single_keyword() {
        assert_eq!(
            difficulty("SELECT player_name FROM Player WHERE height < 170"),
            Difficulty::Easy
        );
    }

    #[test]
    fn difficulty_medium_two_keywords() {
        let sql = "SELECT AVG(T2.Price) FROM appellations AS T1 JOIN wine AS T2 \
                   ON T1.Appellation = T2.Appellation WHERE T1.County = 'Sonoma'";
        assert_eq!(difficulty(sql), Difficulty::Medium);
    }

    #[test]
    fn difficulty_hard_three_keywords() {
        let sql = "SELECT airline_name, COUNT(*) AS active_routes FROM routes \
                   WHERE codeshare IS NULL GROUP BY airline_name \
                   ORDER BY active_routes DESC LIMIT 3";
        assert_eq!(difficulty(sql), Difficulty::Hard);
    }

    #[test]
    fn difficulty_hard_nested_subquery() {
        assert_eq!(
            difficulty("SELECT wine_name FROM wine WHERE price = (SELECT MAX(price) FROM wine)"),
            Difficulty::Hard
        );
    }

    #[test]
    fn difficulty_hard_two_factors() {
        // Two WHERE conditions plus two joins: two complexity factors.
        let sql = "SELECT a.x FROM a JOIN b ON a.id = b.id JOIN c ON b.id = c.id \
                   WHERE a.x > 1 AND c.y > 2";
        assert_eq!(difficulty(sql), Difficulty::Hard);
    }

    #[test]
    fn referenced_tables_covers_subqueries() {
        let sql = "SELECT course.title, section.building FROM course \
                   JOIN section ON course.title = section.course_title \
                   WHERE section.capacity = (SELECT MAX(capacity) FROM classroom)";
        let tables: Vec<String> = referenced_tables(&parse_sql(sql).unwrap())
            .into_iter()
            .collect();
        assert_eq!(tables, vec!["classroom", "course", "section"]);
    }

    #[test]
    fn labels_are_pure_functions_of_the_ast() {
        let a = parse_sql("SELECT x FROM t WHERE y > 3").unwrap();
        let b = parse_sql("select X from T where Y > 3").unwrap();
        // Same shape up to identifier case; classification only depends
        // on structure, so both give the same labels.
        assert_eq!(classify_difficulty(&a), classify_difficulty(&b));
        assert_eq!(classify_types(&a), classify_types(&b));
    }
}
