//! Command implementations. The binary is a thin argument parser over
//! these functions so tests can drive the same code paths in-process.

use crate::config::{JudgeChoice, RunManifest};
use crate::error::CliError;
use crate::files::{
    database_fingerprint, read_jsonl, sha256_file, write_jsonl, write_text_atomic, Header,
};
use haybench_core::corpus::{
    derive_seed, CorpusConfig, HeuristicTokenCounter, InstanceBuilder, InstanceRecord,
    TemplateLibrary,
};
use haybench_core::eval::{
    build_report, render_text, render_tsv, score_instance, DeterministicJudge, InstanceMeta,
    InstanceScore, RowJudge,
};
use haybench_core::gateway::{
    run_instances, EmbeddingEndpointRetriever, EndpointConfig, LexicalRetriever, ModelBackend,
    ModelJudge, PromptMode, RetrievalSettings, Retriever, RunRecord,
};
use haybench_core::relational::{prepare_database, write_snapshot, Database, Manifest};
use haybench_core::sql::{analyze, annotate, load_suite, render_suite, QuerySpec};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// Loads, preprocesses, and summarizes one database; optionally writes the
/// preprocessed snapshot (CSVs plus manifest) to `out`.
pub fn cmd_ingest(manifest_path: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let manifest = Manifest::read(manifest_path)?;
    let (db, report) = prepare_database(&manifest)?;
    db.validate()?;

    let mut summary = format!(
        "database `{}`: {} tables, {} rows after preprocessing\n",
        db.name,
        db.tables.len(),
        db.total_rows()
    );
    for (table, removed, kept) in &report.removed {
        if *removed > 0 {
            summary.push_str(&format!(
                "  {table}: removed {removed} incomplete rows, kept {kept}\n"
            ));
        }
    }
    for table in report.emptied_tables() {
        summary.push_str(&format!("  warning: table `{table}` is empty after filtering\n"));
    }
    summary.push_str(&format!("  dummy documents: {}\n", db.dummy_documents.len()));

    if let Some(out_dir) = out {
        let snapshot_manifest = write_snapshot(&db, out_dir)?;
        // Carry the template file along so the snapshot stays usable for
        // generation.
        if let Some(rel) = &manifest.templates {
            let src = manifest.resolve(rel);
            fs::copy(&src, out_dir.join("templates.json"))?;
            let text = fs::read_to_string(&snapshot_manifest)?;
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Environment(e.to_string()))?;
            value["templates"] = serde_json::Value::String("templates.json".into());
            write_text_atomic(
                &snapshot_manifest,
                &serde_json::to_string_pretty(&value)
                    .map_err(|e| CliError::Environment(e.to_string()))?,
            )?;
        }
        summary.push_str(&format!("  snapshot written to {}\n", out_dir.display()));
    }
    Ok(summary)
}

/// Parses and classifies every suite record, annotates the file in place,
/// and (given a run manifest) cross-checks table references and dummy
/// pools against the databases.
pub fn cmd_suite_validate(
    suite_path: &Path,
    run_manifest: Option<&RunManifest>,
) -> Result<String, CliError> {
    let records = load_suite(suite_path)?;
    if records.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: suite has no records",
            suite_path.display()
        )));
    }
    let (annotated, specs) = annotate(&records)?;

    let mut summary = format!("{} queries validated\n", specs.len());
    if let Some(manifest) = run_manifest {
        let databases = load_databases(manifest)?;
        for spec in &specs {
            let Some((db, _)) = databases.get(&spec.database) else {
                return Err(CliError::Validation(format!(
                    "query {}: unknown database `{}`",
                    spec.id, spec.database
                )));
            };
            let mut references_all = true;
            for table in spec.referenced_tables() {
                if db.table(&table).is_none() {
                    return Err(CliError::Validation(format!(
                        "query {}: table `{table}` not in database `{}`",
                        spec.id, spec.database
                    )));
                }
            }
            for table in &db.tables {
                if !spec
                    .referenced_tables()
                    .contains(&table.name.to_ascii_lowercase())
                {
                    references_all = false;
                }
            }
            if references_all && db.dummy_documents.len() < 10 {
                return Err(CliError::Validation(format!(
                    "query {} references every table of `{}` but its dummy pool has {} documents (need 10)",
                    spec.id,
                    spec.database,
                    db.dummy_documents.len()
                )));
            }
        }
        summary.push_str("table references and dummy pools check out\n");
    }

    write_text_atomic(suite_path, &render_suite(&annotated))?;
    summary.push_str(&format!("annotations written to {}\n", suite_path.display()));
    Ok(summary)
}

type PreparedDatabases = BTreeMap<String, (Database, TemplateLibrary)>;

fn load_databases(manifest: &RunManifest) -> Result<PreparedDatabases, CliError> {
    let mut out = BTreeMap::new();
    for (name, rel) in &manifest.databases {
        let db_manifest = Manifest::read(manifest.resolve(rel))?;
        let (db, _) = prepare_database(&db_manifest)?;
        let templates_rel = db_manifest.templates.as_ref().ok_or_else(|| {
            CliError::Validation(format!("database `{name}` declares no template file"))
        })?;
        let templates = TemplateLibrary::read(db_manifest.resolve(templates_rel))?;
        out.insert(name.clone(), (db, templates));
    }
    Ok(out)
}

/// Builds one instance per (question x grid cell x replicate) and writes
/// the chained instance file.
pub fn cmd_generate(
    manifest: &RunManifest,
    manifest_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<String, CliError> {
    let databases = load_databases(manifest)?;
    let suite = load_suite(manifest.suite_path())?;
    let specs: Vec<QuerySpec> = suite
        .iter()
        .map(analyze)
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;

    let counter = HeuristicTokenCounter;
    let cells = manifest.grid.cells();
    let mut records = Vec::with_capacity(specs.len() * cells.len());
    let mut realized_total = 0usize;
    let mut realized_relevant = 0usize;

    for spec in &specs {
        let (db, templates) = databases.get(&spec.database).ok_or_else(|| {
            CliError::Validation(format!(
                "query {}: unknown database `{}`",
                spec.id, spec.database
            ))
        })?;
        let builder = InstanceBuilder {
            db,
            templates,
            counter: &counter,
        };
        for cell in &cells {
            let base_seed = seed_override.unwrap_or(cell.seed);
            let effective_seed = derive_seed(
                base_seed,
                &format!(
                    "{}:{}:{}:r{}",
                    spec.id, cell.context_tokens, cell.position, cell.replicate
                ),
            );
            let config = CorpusConfig {
                context_tokens: cell.context_tokens,
                info: cell.info,
                position: cell.position,
                seed: effective_seed,
            };
            let instance = builder.build(spec, &config)?;
            realized_total += instance.provenance.total_tokens;
            realized_relevant += instance.provenance.relevant_tokens;
            records.push(InstanceRecord::from_instance(&instance));
        }
    }

    let mut header = Header::new("instances")
        .input("config", sha256_file(manifest_path)?)
        .input("suite", sha256_file(&manifest.suite_path())?);
    for (name, rel) in &manifest.databases {
        header = header.input(
            &format!("database:{name}"),
            database_fingerprint(&manifest.resolve(rel))?,
        );
    }
    if let Some(seed) = seed_override {
        header = header.meta("seed_override", seed.to_string());
    }
    write_jsonl(out, &header, &records)?;

    let n = records.len().max(1);
    Ok(format!(
        "{} instances written to {} (mean realized tokens: total {}, relevant {})\n",
        records.len(),
        out.display(),
        realized_total / n,
        realized_relevant / n
    ))
}

pub struct RunOptions {
    pub endpoint: String,
    pub model: String,
    pub mode: PromptMode,
    pub reasoning_model: bool,
    pub concurrency: usize,
    pub retrieve_tokens: Option<usize>,
    pub retriever: String,
    pub embedding_endpoint: Option<String>,
}

/// Prompts the backend for every instance and persists the raw
/// request/response records.
pub fn cmd_run(instances_path: &Path, options: &RunOptions, out: &Path) -> Result<String, CliError> {
    let (_, records): (Header, Vec<InstanceRecord>) = read_jsonl(instances_path, "instances")?;
    let instances = records
        .iter()
        .map(InstanceRecord::to_instance)
        .collect::<Result<Vec<_>, _>>()?;

    let backend = ModelBackend::parse(&options.endpoint, &options.model);
    let counter = HeuristicTokenCounter;

    let retriever: Option<Box<dyn Retriever>> = match (options.retrieve_tokens, options.retriever.as_str()) {
        (None, _) => None,
        (Some(_), "lexical") => Some(Box::new(LexicalRetriever)),
        (Some(_), "endpoint") => {
            let base = options.embedding_endpoint.clone().ok_or_else(|| {
                CliError::Validation(
                    "--retriever endpoint requires --embedding-endpoint".into(),
                )
            })?;
            Some(Box::new(EmbeddingEndpointRetriever {
                endpoint: EndpointConfig::new(base, options.model.clone()),
            }))
        }
        (Some(_), other) => {
            return Err(CliError::Validation(format!(
                "unknown retriever `{other}` (expected lexical or endpoint)"
            )));
        }
    };
    let settings = options.retrieve_tokens.map(|token_budget| RetrievalSettings {
        token_budget,
        retriever: retriever.as_deref().expect("retriever built above"),
    });

    let run_records = run_instances(
        &instances,
        &backend,
        options.mode,
        options.reasoning_model,
        settings.as_ref(),
        options.concurrency,
        &counter,
    )?;

    let header = Header::new("run")
        .input("instances", sha256_file(instances_path)?)
        .meta("model", backend.model_name())
        .meta("mode", options.mode.to_string());
    write_jsonl(out, &header, &run_records)?;
    Ok(format!(
        "{} responses written to {}\n",
        run_records.len(),
        out.display()
    ))
}

pub enum JudgeKind {
    Deterministic,
    Endpoint(EndpointConfig),
}

impl JudgeKind {
    pub fn from_manifest(choice: &JudgeChoice) -> JudgeKind {
        match choice {
            JudgeChoice::Deterministic => JudgeKind::Deterministic,
            JudgeChoice::Endpoint { endpoint } => JudgeKind::Endpoint(endpoint.clone()),
        }
    }
}

/// Labels every response against its instance's gold rows and writes the
/// eval file. Refuses a run file produced from different instances.
pub fn cmd_judge(
    instances_path: &Path,
    run_path: &Path,
    judge: &JudgeKind,
    out: &Path,
) -> Result<String, CliError> {
    let (run_header, run_records): (Header, Vec<RunRecord>) = read_jsonl(run_path, "run")?;
    run_header.expect_input("instances", instances_path)?;
    let (_, instance_records): (Header, Vec<InstanceRecord>) =
        read_jsonl(instances_path, "instances")?;
    let by_id: BTreeMap<&str, &InstanceRecord> = instance_records
        .iter()
        .map(|r| (r.instance_id.as_str(), r))
        .collect();

    let judge: Box<dyn RowJudge> = match judge {
        JudgeKind::Deterministic => Box::new(DeterministicJudge),
        JudgeKind::Endpoint(endpoint) => Box::new(ModelJudge::new(endpoint.clone())),
    };

    let mut scores = Vec::with_capacity(run_records.len());
    for record in &run_records {
        let instance = by_id.get(record.instance_id.as_str()).ok_or_else(|| {
            CliError::stale(format!(
                "run record {} has no matching instance",
                record.instance_id
            ))
        })?;
        let labels = judge.judge_rows(
            &instance.question,
            &record.answer,
            &instance.gold.clone().into(),
        )?;
        let accuracy = score_instance(&labels)?;
        scores.push(InstanceScore {
            instance_id: record.instance_id.clone(),
            labels,
            accuracy,
            judge_kind: judge.kind(),
        });
    }

    let header = Header::new("eval")
        .input("instances", sha256_file(instances_path)?)
        .input("run", sha256_file(run_path)?)
        .meta("judge", judge.kind());
    write_jsonl(out, &header, &scores)?;
    Ok(format!(
        "{} instances judged ({}) and written to {}\n",
        scores.len(),
        judge.kind(),
        out.display()
    ))
}

/// Renders the per-length accuracy table with Avg / wAvg(inc) / wAvg(dec)
/// and the type/difficulty/position breakdowns.
pub fn cmd_report(
    instances_path: &Path,
    eval_path: &Path,
    out: Option<&Path>,
    tsv: Option<&Path>,
) -> Result<String, CliError> {
    let (eval_header, scores): (Header, Vec<InstanceScore>) = read_jsonl(eval_path, "eval")?;
    eval_header.expect_input("instances", instances_path)?;
    let (_, instance_records): (Header, Vec<InstanceRecord>) =
        read_jsonl(instances_path, "instances")?;

    let meta: Vec<InstanceMeta> = instance_records
        .iter()
        .map(|r| InstanceMeta {
            instance_id: r.instance_id.clone(),
            context_tokens: r.context_tokens,
            types: r.types.clone(),
            difficulty: r.difficulty.clone(),
            position: r.position.clone(),
        })
        .collect();
    let judge_kind = eval_header
        .meta
        .get("judge")
        .cloned()
        .unwrap_or_else(|| "unknown".into());
    let report = build_report(&scores, &meta, &judge_kind)?;

    let text = render_text(&report);
    if let Some(path) = out {
        write_text_atomic(path, &text)?;
    }
    if let Some(path) = tsv {
        write_text_atomic(path, &render_tsv(&report))?;
    }
    Ok(text)
}

/// Resolves `--config` into a run manifest next to its path.
pub fn load_run_manifest(path: &Path) -> Result<(RunManifest, PathBuf), CliError> {
    Ok((RunManifest::read(path)?, path.to_path_buf()))
}
