//! Report assembly: joins per-instance scores with instance metadata and
//! renders the per-length table with Avg / wAvg(inc) / wAvg(dec) columns
//! plus query-type, difficulty, and position breakdowns.

use super::metrics::{aggregate, AggregateReport, MetricsError};
use super::judge::RowLabel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One judged instance, as stored in eval files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub instance_id: String,
    pub labels: Vec<RowLabel>,
    pub accuracy: f64,
    pub judge_kind: String,
}

/// The slice of instance metadata the report needs.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub instance_id: String,
    pub context_tokens: usize,
    pub types: Vec<String>,
    pub difficulty: String,
    pub position: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub judge_kind: String,
    pub lengths: Vec<usize>,
    pub overall: AggregateReport,
    pub by_type: Vec<(String, AggregateReport)>,
    pub by_difficulty: Vec<(String, AggregateReport)>,
    pub by_position: Vec<(String, AggregateReport)>,
}

/// Means scores per context length, overall and per breakdown group,
/// then aggregates each row.
pub fn build_report(
    scores: &[InstanceScore],
    meta: &[InstanceMeta],
    judge_kind: &str,
) -> Result<EvalReport, MetricsError> {
    let meta_by_id: BTreeMap<&str, &InstanceMeta> = meta
        .iter()
        .map(|m| (m.instance_id.as_str(), m))
        .collect();

    let mut overall = Cells::default();
    let mut by_type: BTreeMap<String, Cells> = BTreeMap::new();
    let mut by_difficulty: BTreeMap<String, Cells> = BTreeMap::new();
    let mut by_position: BTreeMap<String, Cells> = BTreeMap::new();

    for s in scores {
        let Some(m) = meta_by_id.get(s.instance_id.as_str()) else {
            continue;
        };
        overall.add(m.context_tokens, s.accuracy);
        for t in &m.types {
            by_type
                .entry(t.clone())
                .or_default()
                .add(m.context_tokens, s.accuracy);
        }
        by_difficulty
            .entry(m.difficulty.clone())
            .or_default()
            .add(m.context_tokens, s.accuracy);
        by_position
            .entry(m.position.clone())
            .or_default()
            .add(m.context_tokens, s.accuracy);
    }

    let overall = aggregate(&overall.means())?;
    let lengths = overall.per_length.iter().map(|(l, _)| *l).collect();
    let finish = |cells: BTreeMap<String, Cells>| -> Result<Vec<(String, AggregateReport)>, MetricsError> {
        cells
            .into_iter()
            .map(|(k, c)| Ok((k, aggregate(&c.means())?)))
            .collect()
    };
    Ok(EvalReport {
        judge_kind: judge_kind.to_string(),
        lengths,
        overall,
        by_type: finish(by_type)?,
        by_difficulty: finish(by_difficulty)?,
        by_position: finish(by_position)?,
    })
}

#[derive(Default)]
struct Cells {
    sums: BTreeMap<usize, (f64, usize)>,
}

impl Cells {
    fn add(&mut self, length: usize, accuracy: f64) {
        let entry = self.sums.entry(length).or_insert((0.0, 0));
        entry.0 += accuracy;
        entry.1 += 1;
    }

    fn means(&self) -> BTreeMap<usize, f64> {
        self.sums
            .iter()
            .map(|(&l, &(sum, n))| (l, sum / n as f64))
            .collect()
    }
}

fn fmt_cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.1}"),
        None => "-".into(),
    }
}

fn row_cells(report: &EvalReport, agg: &AggregateReport) -> Vec<String> {
    let by_length: BTreeMap<usize, f64> = agg.per_length.iter().copied().collect();
    let mut cells: Vec<String> = report
        .lengths
        .iter()
        .map(|l| fmt_cell(by_length.get(l).copied()))
        .collect();
    cells.push(fmt_cell(Some(agg.avg)));
    cells.push(fmt_cell(Some(agg.wavg_inc)));
    cells.push(fmt_cell(Some(agg.wavg_dec)));
    cells
}

fn report_rows(report: &EvalReport) -> Vec<(String, Vec<String>)> {
    let mut rows = vec![("overall".to_string(), row_cells(report, &report.overall))];
    for (name, agg) in &report.by_type {
        rows.push((format!("type: {name}"), row_cells(report, agg)));
    }
    for (name, agg) in &report.by_difficulty {
        rows.push((format!("difficulty: {name}"), row_cells(report, agg)));
    }
    for (name, agg) in &report.by_position {
        rows.push((format!("position: {name}"), row_cells(report, agg)));
    }
    rows
}

fn header_cells(report: &EvalReport) -> Vec<String> {
    let mut cells: Vec<String> = report.lengths.iter().map(usize::to_string).collect();
    cells.push("Avg".into());
    cells.push("wAvg(inc)".into());
    cells.push("wAvg(dec)".into());
    cells
}

/// Aligned plain-text table, one decimal per cell.
pub fn render_text(report: &EvalReport) -> String {
    let header = header_cells(report);
    let rows = report_rows(report);

    let mut name_width = "group".len();
    for (name, _) in &rows {
        name_width = name_width.max(name.len());
    }
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for (_, cells) in &rows {
        for (w, c) in widths.iter_mut().zip(cells) {
            *w = (*w).max(c.len());
        }
    }

    let mut out = String::new();
    out.push_str(&format!(
        "judge: {}{}\n",
        report.judge_kind,
        if report.judge_kind == "deterministic" {
            " (containment approximation of the model-judge criteria)"
        } else {
            ""
        }
    ));
    out.push_str(&format!("{:<name_width$}", "group"));
    for (w, h) in widths.iter().zip(&header) {
        out.push_str(&format!("  {h:>w$}"));
    }
    out.push('\n');
    for (name, cells) in &rows {
        out.push_str(&format!("{name:<name_width$}"));
        for (w, c) in widths.iter().zip(cells) {
            out.push_str(&format!("  {c:>w$}"));
        }
        out.push('\n');
    }
    out
}

/// Tab-separated variant of the same table.
pub fn render_tsv(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("group");
    for h in header_cells(report) {
        out.push('\t');
        out.push_str(&h);
    }
    out.push('\n');
    for (name, cells) in report_rows(report) {
        out.push_str(&name);
        for c in cells {
            out.push('\t');
            out.push_str(&c);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(id: &str, len: usize, ty: &str, diff: &str, pos: &str) -> InstanceMeta {
        InstanceMeta {
            instance_id: id.into(),
            context_tokens: len,
            types: vec![ty.into()],
            difficulty: diff.into(),
            position: pos.into(),
        }
    }

    fn score(id: &str, accuracy: f64) -> InstanceScore {
        InstanceScore {
            instance_id: id.into(),
            labels: vec![],
            accuracy,
            judge_kind: "deterministic".into(),
        }
    }

    #[test]
    fn builds_breakdowns_and_renders_one_decimal() {
        let metas = vec![
            meta("a", 4096, "Max/Min", "Easy", "uniform"),
            meta("b", 4096, "Join", "Hard", "uniform"),
            meta("c", 8192, "Max/Min", "Easy", "end"),
        ];
        let scores = vec![score("a", 100.0), score("b", 50.0), score("c", 0.0)];
        let report = build_report(&scores, &metas, "deterministic").unwrap();

        assert_eq!(report.lengths, vec![4096, 8192]);
        assert_eq!(report.overall.per_length, vec![(4096, 75.0), (8192, 0.0)]);

        let text = render_text(&report);
        assert!(text.contains("overall"));
        assert!(text.contains("75.0"));
        assert!(text.contains("type: Max/Min"));
        assert!(text.contains("difficulty: Hard"));
        assert!(text.contains("position: end"));
        // Max/Min has no 8192... it does (instance c). Join lacks 8192.
        let join_line = text.lines().find(|l| l.starts_with("type: Join")).unwrap();
        assert!(join_line.contains('-'), "missing cell renders as dash: {join_line}");

        let tsv = render_tsv(&report);
        assert!(tsv.starts_with("group\t4096\t8192\tAvg\twAvg(inc)\twAvg(dec)"));
    }

    #[test]
    fn scores_without_meta_are_skipped() {
        let metas = vec![meta("a", 4096, "Join", "Easy", "uniform")];
        let scores = vec![score("a", 80.0), score("ghost", 0.0)];
        let report = build_report(&scores, &metas, "deterministic").unwrap();
        assert_eq!(report.overall.per_length, vec![(4096, 80.0)]);
    }
}
