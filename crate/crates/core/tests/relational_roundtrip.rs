//! Snapshot round-trip over generated databases.

use haybench_core::relational::{
    load_database, write_snapshot, Column, Database, Table, Value, ValueKind,
};
use proptest::prelude::*;

fn value_for(kind: ValueKind) -> BoxedStrategy<Value> {
    match kind {
        ValueKind::Integer => prop_oneof![
            Just(Value::Null),
            any::<i32>().prop_map(|i| Value::Integer(i as i64)),
        ]
        .boxed(),
        ValueKind::Real => prop_oneof![
            Just(Value::Null),
            (-1.0e6f64..1.0e6).prop_map(Value::Real),
        ]
        .boxed(),
        // Empty text is indistinguishable from Null in CSV, so cells are
        // nonempty and trimmed of the frame-sensitive edges.
        ValueKind::Text => prop_oneof![
            Just(Value::Null),
            "[a-zA-Z0-9,'\" .-]{1,20}"
                .prop_filter("csv edge whitespace", |s| s.trim() == s && !s.is_empty())
                .prop_map(Value::Text),
        ]
        .boxed(),
    }
}

fn table_strategy(idx: usize) -> impl Strategy<Value = Table> {
    let kinds = proptest::collection::vec(
        prop_oneof![
            Just(ValueKind::Integer),
            Just(ValueKind::Real),
            Just(ValueKind::Text)
        ],
        1..5,
    );
    kinds.prop_flat_map(move |kinds| {
        let columns: Vec<Column> = kinds
            .iter()
            .enumerate()
            .map(|(i, k)| Column {
                name: format!("col{i}"),
                kind: *k,
                required: i == 0,
            })
            .collect();
        let row = kinds
            .iter()
            .map(|k| value_for(*k))
            .collect::<Vec<_>>()
            .prop_map(|cells| cells);
        let rows = proptest::collection::vec(row, 0..12);
        rows.prop_map(move |rows| {
            let mut t = Table::new(format!("table{idx}"), columns.clone());
            t.rows = rows;
            t
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn snapshot_round_trips_to_deep_equality(
        t0 in table_strategy(0),
        t1 in table_strategy(1),
        dummies in proptest::collection::vec("[a-z ]{5,40}", 0..4),
    ) {
        let db = Database {
            name: "generated".into(),
            tables: vec![t0, t1],
            foreign_keys: vec![],
            dummy_documents: dummies
                .into_iter()
                .map(|d| d.trim().to_string())
                .filter(|d| !d.is_empty())
                .collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_snapshot(&db, dir.path()).unwrap();
        let reloaded = load_database(&manifest).unwrap();
        prop_assert_eq!(reloaded, db);
    }
}
