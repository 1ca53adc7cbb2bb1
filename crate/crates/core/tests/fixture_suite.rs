//! Fixture databases and the shipped question suites.

use haybench_core::corpus::TemplateLibrary;
use haybench_core::relational::{load_database, prepare_database, Manifest};
use haybench_core::sql::{analyze, load_suite, parse_sql, Difficulty, QueryType};
use haybench_core::testsupport::fixtures_dir;

#[test]
fn wine_fixture_has_three_tables_and_555_rows() {
    let db = load_database(fixtures_dir().join("wine/manifest.json")).unwrap();
    assert_eq!(db.tables.len(), 3);
    assert_eq!(db.total_rows(), 555);
}

#[test]
fn all_fixture_databases_load_and_preprocess() {
    for name in ["wine", "flights", "college"] {
        let manifest = Manifest::read(fixtures_dir().join(name).join("manifest.json")).unwrap();
        let (db, report) = prepare_database(&manifest).unwrap();
        assert!(db.total_rows() > 0, "{name} lost all rows");
        // Fixture data is complete: preprocessing drops nothing.
        assert_eq!(report.total_removed(), 0, "{name} dropped rows: {report:?}");
        assert!(db.dummy_documents.len() >= 10, "{name} dummy pool too small");

        // Every table has template variants whose placeholders resolve.
        let templates =
            TemplateLibrary::read(manifest.resolve(manifest.templates.as_ref().unwrap())).unwrap();
        let tables: Vec<_> = db.tables.iter().collect();
        templates.validate_against(&tables).unwrap();
        for t in &db.tables {
            assert_eq!(
                templates.variants(&t.name).unwrap().len(),
                5,
                "{name}.{} should ship five template variants",
                t.name
            );
        }
    }
}

#[test]
fn college_denormalization_adds_name_columns() {
    let manifest = Manifest::read(fixtures_dir().join("college/manifest.json")).unwrap();
    let (db, _) = prepare_database(&manifest).unwrap();
    let advisor = db.table("advisor").unwrap();
    assert!(advisor.column_index("instructor_name").is_some());
    assert!(advisor.column_index("student_name").is_some());
    // Replacement mappings drop the identifier column.
    let section = db.table("section").unwrap();
    assert!(section.column_index("course_title").is_some());
    assert!(section.column_index("course_id").is_none());
}

#[test]
fn shipped_suite_analyzes_with_nonempty_types() {
    let records = load_suite(fixtures_dir().join("suite.jsonl")).unwrap();
    assert!(records.len() >= 15, "need at least 15 suite queries");
    for record in &records {
        let spec = analyze(record).unwrap_or_else(|e| panic!("{}: {e}", record.id));
        assert!(!spec.types.is_empty(), "{} has no query type", record.id);
    }
}

#[test]
fn suite_queries_round_trip_through_the_serializer() {
    let mut all = load_suite(fixtures_dir().join("suite.jsonl")).unwrap();
    all.extend(load_suite(fixtures_dir().join("reference_suite.jsonl")).unwrap());
    for record in &all {
        let ast = parse_sql(&record.sql).unwrap();
        let reparsed = parse_sql(&ast.to_string())
            .unwrap_or_else(|e| panic!("{}: `{}`: {e}", record.id, ast));
        assert_eq!(reparsed, ast, "{} changed shape after serialize", record.id);
    }
}

/// The five worked examples ship as a reference suite; their labels are
/// pinned here.
#[test]
fn reference_suite_receives_the_pinned_labels() {
    use Difficulty::*;
    use QueryType::*;
    let records = load_suite(fixtures_dir().join("reference_suite.jsonl")).unwrap();
    let expected: &[(&str, &[QueryType], Difficulty)] = &[
        ("ref_wine", &[Aggregation, Join], Medium),
        ("ref_store", &[Aggregation, Comparison], Easy),
        ("ref_college", &[MaxMin, Join], Hard),
        ("ref_flight", &[Aggregation, Ranking], Hard),
        ("ref_soccer", &[Comparison], Easy),
    ];
    assert_eq!(records.len(), expected.len());
    for (record, (id, types, difficulty)) in records.iter().zip(expected) {
        assert_eq!(record.id, *id);
        let spec = analyze(record).unwrap();
        let got: Vec<QueryType> = spec.types.iter().copied().collect();
        assert_eq!(got.as_slice(), *types, "{id} types");
        assert_eq!(spec.difficulty, *difficulty, "{id} difficulty");
    }
}

#[test]
fn shipped_suite_covers_all_types_and_difficulties() {
    let records = load_suite(fixtures_dir().join("suite.jsonl")).unwrap();
    let mut types = std::collections::BTreeSet::new();
    let mut difficulties = std::collections::BTreeSet::new();
    for record in &records {
        let spec = analyze(record).unwrap();
        types.extend(spec.types.iter().copied());
        difficulties.insert(spec.difficulty);
    }
    assert_eq!(types.len(), 5, "suite should cover all five types: {types:?}");
    assert_eq!(difficulties.len(), 3, "suite should cover all difficulties");
}
