//! Python bindings: load databases, classify and execute queries, build
//! benchmark instances, judge answers, and aggregate scores from Python.
//!
//! Structured results cross the boundary as plain dicts/lists so the
//! module composes with pandas-style tooling without extra types.

use haybench_core::corpus::{
    CorpusConfig, HeuristicTokenCounter, InfoSpec, InstanceBuilder, InstanceRecord,
    PositionStrategy, TemplateLibrary, TokenCounter,
};
use haybench_core::eval::{aggregate, score_instance, DeterministicJudge, RowJudge};
use haybench_core::exec::{execute, ResultSet};
use haybench_core::gateway::{extract_answer, render_prompt, PromptMode};
use haybench_core::relational::{prepare_database, Manifest, Value};
use haybench_core::sql::{analyze, classify_difficulty, classify_types, parse_sql, SuiteRecord};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use std::collections::BTreeMap;
use std::path::PathBuf;

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use pyo3::IntoPyObjectExt;
    match v {
        serde_json::Value::Null => py.None().into_bound_py_any(py),
        serde_json::Value::Bool(b) => b.into_bound_py_any(py),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_bound_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)
            }
        }
        serde_json::Value::String(s) => s.into_bound_py_any(py),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            Ok(list.into_any())
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, to_py(py, val)?)?;
            }
            Ok(dict.into_any())
        }
    }
}

fn py_cell(value: &Bound<'_, PyAny>) -> PyResult<Value> {
    if value.is_none() {
        return Ok(Value::Null);
    }
    if let Ok(i) = value.extract::<i64>() {
        return Ok(Value::Integer(i));
    }
    if let Ok(f) = value.extract::<f64>() {
        return Ok(Value::Real(f));
    }
    if let Ok(s) = value.extract::<String>() {
        return Ok(Value::Text(s));
    }
    Err(PyValueError::new_err(
        "cell values must be None, int, float, or str",
    ))
}

fn result_set_json(rs: &ResultSet) -> serde_json::Value {
    serde_json::json!({
        "columns": rs.columns,
        "rows": rs.rows,
        "ordered": rs.ordered,
    })
}

/// A preprocessed relational database plus its verbalization templates.
#[pyclass(frozen)]
struct Database {
    db: haybench_core::relational::Database,
    templates: TemplateLibrary,
}

#[pymethods]
impl Database {
    #[getter]
    fn name(&self) -> &str {
        &self.db.name
    }

    fn table_names(&self) -> Vec<String> {
        self.db.tables.iter().map(|t| t.name.clone()).collect()
    }

    fn total_rows(&self) -> usize {
        self.db.total_rows()
    }

    fn row_count(&self, table: &str) -> PyResult<usize> {
        self.db
            .table(table)
            .map(|t| t.rows.len())
            .ok_or_else(|| PyValueError::new_err(format!("unknown table `{table}`")))
    }

    fn dummy_document_count(&self) -> usize {
        self.db.dummy_documents.len()
    }

    /// Runs a query and returns `{"columns", "rows", "ordered"}`.
    fn execute_sql<'py>(&self, py: Python<'py>, sql: &str) -> PyResult<Bound<'py, PyAny>> {
        let ast = parse_sql(sql).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let rs = execute(&ast, &self.db).map_err(|e| PyValueError::new_err(e.to_string()))?;
        to_py(py, &result_set_json(&rs))
    }

    /// Builds one benchmark instance and returns it as a dict in the
    /// instance-file schema. Exactly one of `info_amount` /
    /// `info_density` selects the relevant-information budget.
    #[pyo3(signature = (query_id, question, sql, context_tokens, info_amount=None, info_density=None, position="uniform", seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn build_instance<'py>(
        &self,
        py: Python<'py>,
        query_id: &str,
        question: &str,
        sql: &str,
        context_tokens: usize,
        info_amount: Option<usize>,
        info_density: Option<f64>,
        position: &str,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let spec = analyze(&SuiteRecord {
            id: query_id.to_string(),
            database: self.db.name.clone(),
            question: question.to_string(),
            sql: sql.to_string(),
            types: None,
            difficulty: None,
        })
        .map_err(|e| PyValueError::new_err(e.to_string()))?;

        let info = match (info_amount, info_density) {
            (Some(tokens), None) => InfoSpec::Amount(tokens),
            (None, Some(density)) => InfoSpec::Density(density),
            _ => {
                return Err(PyValueError::new_err(
                    "pass exactly one of info_amount / info_density",
                ));
            }
        };
        let position = parse_position(position)?;
        let builder = InstanceBuilder {
            db: &self.db,
            templates: &self.templates,
            counter: &HeuristicTokenCounter,
        };
        let instance = builder
            .build(
                &spec,
                &CorpusConfig {
                    context_tokens,
                    info,
                    position,
                    seed,
                },
            )
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let record = InstanceRecord::from_instance(&instance);
        let json =
            serde_json::to_value(&record).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        to_py(py, &json)
    }
}

fn parse_position(name: &str) -> PyResult<PositionStrategy> {
    match name.to_ascii_lowercase().as_str() {
        "uniform" => Ok(PositionStrategy::Uniform),
        "beginning" => Ok(PositionStrategy::Beginning),
        "middle" => Ok(PositionStrategy::Middle),
        "end" => Ok(PositionStrategy::End),
        "bimodal" => Ok(PositionStrategy::Bimodal),
        other => Err(PyValueError::new_err(format!(
            "unknown position `{other}` (uniform, beginning, middle, end, bimodal)"
        ))),
    }
}

/// Loads a database manifest and applies the standard preprocessing
/// (denormalization, incomplete-row filtering, lookup-table removal).
#[pyfunction]
fn load_database(manifest_path: PathBuf) -> PyResult<Database> {
    let manifest =
        Manifest::read(&manifest_path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let (db, _) = prepare_database(&manifest).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let templates = match &manifest.templates {
        Some(rel) => TemplateLibrary::read(manifest.resolve(rel))
            .map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => TemplateLibrary::default(),
    };
    Ok(Database { db, templates })
}

/// Parses a query and returns its canonical SQL rendering.
#[pyfunction(name = "parse_sql")]
fn parse_sql_py(sql: &str) -> PyResult<String> {
    let ast = parse_sql(sql).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(ast.to_string())
}

/// Returns `{"types": [...], "difficulty": "..."}` for a query.
#[pyfunction]
fn classify<'py>(py: Python<'py>, sql: &str) -> PyResult<Bound<'py, PyAny>> {
    let ast = parse_sql(sql).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let types: Vec<String> = classify_types(&ast)
        .into_iter()
        .map(|t| t.to_string())
        .collect();
    let json = serde_json::json!({
        "types": types,
        "difficulty": classify_difficulty(&ast).to_string(),
    });
    to_py(py, &json)
}

/// Tables a query touches, across all of its subqueries.
#[pyfunction]
fn referenced_tables(sql: &str) -> PyResult<Vec<String>> {
    let ast = parse_sql(sql).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(haybench_core::sql::referenced_tables(&ast)
        .into_iter()
        .collect())
}

/// Heuristic token count used for context budgeting.
#[pyfunction]
fn count_tokens(text: &str) -> usize {
    HeuristicTokenCounter.count(text)
}

/// Renders the inference prompt for a context/question pair.
#[pyfunction(name = "render_prompt")]
#[pyo3(signature = (context, question, mode="cot", reasoning_model=false))]
fn render_prompt_py(
    context: &str,
    question: &str,
    mode: &str,
    reasoning_model: bool,
) -> PyResult<String> {
    let mode = PromptMode::parse(mode)
        .ok_or_else(|| PyValueError::new_err(format!("unknown mode `{mode}`")))?;
    Ok(render_prompt(context, question, mode, reasoning_model))
}

/// Extracts the answer section from a raw model response.
#[pyfunction(name = "extract_answer")]
fn extract_answer_py<'py>(py: Python<'py>, raw: &str) -> PyResult<Bound<'py, PyAny>> {
    let extracted = extract_answer(raw);
    let json = serde_json::json!({
        "text": extracted.text,
        "no_answer": extracted.no_answer,
        "marker_found": extracted.marker_found,
    });
    to_py(py, &json)
}

/// Judges a prediction against gold rows with the deterministic judge and
/// returns `{"labels": [...], "accuracy": float}`.
#[pyfunction]
#[pyo3(signature = (question, prediction, gold_rows, ordered=false))]
fn judge_answer<'py>(
    py: Python<'py>,
    question: &str,
    prediction: &str,
    gold_rows: &Bound<'py, PyList>,
    ordered: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut rows = Vec::with_capacity(gold_rows.len());
    for row in gold_rows.iter() {
        let row: Bound<'_, PyList> = row.extract()?;
        let mut cells = Vec::with_capacity(row.len());
        for cell in row.iter() {
            cells.push(py_cell(&cell)?);
        }
        rows.push(cells);
    }
    let width = rows.first().map_or(0, Vec::len);
    let gold = ResultSet {
        columns: (0..width).map(|i| format!("c{i}")).collect(),
        rows,
        ordered,
    };
    let labels = DeterministicJudge
        .judge_rows(question, prediction, &gold)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let accuracy =
        score_instance(&labels).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let json = serde_json::json!({
        "labels": labels,
        "accuracy": accuracy,
    });
    to_py(py, &json)
}

/// Aggregates per-context-length mean accuracies into
/// `{"avg", "wavg_inc", "wavg_dec", "per_length"}`.
#[pyfunction]
fn aggregate_scores<'py>(
    py: Python<'py>,
    scores: BTreeMap<usize, f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let report = aggregate(&scores).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let json = serde_json::to_value(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &json)
}

#[pymodule]
fn haybench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Database>()?;
    m.add_function(wrap_pyfunction!(load_database, m)?)?;
    m.add_function(wrap_pyfunction!(parse_sql_py, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(referenced_tables, m)?)?;
    m.add_function(wrap_pyfunction!(count_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(render_prompt_py, m)?)?;
    m.add_function(wrap_pyfunction!(extract_answer_py, m)?)?;
    m.add_function(wrap_pyfunction!(judge_answer, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_scores, m)?)?;
    Ok(())
}
