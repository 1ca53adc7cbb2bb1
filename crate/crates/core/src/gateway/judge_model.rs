//! Model-backed row judge: renders the evaluation prompt, queries the
//! endpoint, and parses the labeled JSON list.

use super::client::{query_model, EndpointConfig, GatewayError};
use super::prompt::JUDGE_TEMPLATE;
use crate::eval::{JudgeError, RowJudge, RowLabel};
use crate::exec::ResultSet;
use serde::Deserialize;
use serde_json::json;

const JUDGE_EXAMPLE: &str = r#"**Question:**
```
Which wine has the highest rating, and what is that rating?
```

**Assistant's Response:**
```
Hillcrest Reserve with a rating of 97.
```

**Ground Truth:**
```
[{"id": 0, "row": ["Hillcrest Reserve", 97]}]
```

**Output:**
```
[{"id": 0, "label": "Exact Match"}]
```"#;

pub struct ModelJudge {
    pub endpoint: EndpointConfig,
}

impl ModelJudge {
    pub fn new(endpoint: EndpointConfig) -> ModelJudge {
        ModelJudge { endpoint }
    }

    /// Gold rows rendered as the id-tagged JSON list the prompt describes;
    /// an empty gold renders as `[]`.
    pub fn render_gold(gold: &ResultSet) -> String {
        let rows: Vec<serde_json::Value> = gold
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| json!({"id": i, "row": row}))
            .collect();
        serde_json::to_string(&rows).expect("gold serializes")
    }

    fn output_format(gold: &ResultSet) -> String {
        // One object per gold row; the empty-gold special case still
        // yields a single verdict object.
        let n = gold.rows.len().max(1);
        let lines: Vec<String> = (0..n)
            .map(|i| format!("  {{\"id\": {i}, \"label\": \"Exact Match | Partial Match | No Match\"}}"))
            .collect();
        format!("[\n{}\n]", lines.join(",\n"))
    }

    pub fn render_prompt(question: &str, prediction: &str, gold: &ResultSet) -> String {
        JUDGE_TEMPLATE
            .replace("{examples}", JUDGE_EXAMPLE)
            .replace("{question}", question)
            .replace("{pred}", prediction)
            .replace("{gold}", &Self::render_gold(gold))
            .replace("{output_format}", &Self::output_format(gold))
    }
}

#[derive(Deserialize)]
struct JudgeLine {
    id: usize,
    label: String,
}

fn parse_label(raw: &str) -> Option<RowLabel> {
    let lowered = raw.to_ascii_lowercase();
    if lowered.contains("exact") {
        Some(RowLabel::ExactMatch)
    } else if lowered.contains("partial") {
        Some(RowLabel::PartialMatch)
    } else if lowered.contains("no") {
        Some(RowLabel::NoMatch)
    } else {
        None
    }
}

/// Pulls the first well-formed JSON array out of the response text.
fn parse_labels(raw: &str, expected: usize) -> Result<Vec<RowLabel>, JudgeError> {
    let start = raw
        .find('[')
        .ok_or_else(|| JudgeError::OutputMalformed("no JSON array in response".into()))?;
    let mut depth = 0usize;
    let mut end = None;
    for (i, ch) in raw[start..].char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    end = Some(start + i + 1);
                    break;
                }
            }
            _ => {}
        }
    }
    let end = end.ok_or_else(|| JudgeError::OutputMalformed("unbalanced JSON array".into()))?;
    let lines: Vec<JudgeLine> = serde_json::from_str(&raw[start..end])
        .map_err(|e| JudgeError::OutputMalformed(e.to_string()))?;
    if lines.len() != expected {
        return Err(JudgeError::OutputMalformed(format!(
            "expected {expected} labels, got {}",
            lines.len()
        )));
    }
    let mut labels = vec![RowLabel::NoMatch; expected];
    let mut seen = vec![false; expected];
    for line in lines {
        if line.id >= expected || seen[line.id] {
            return Err(JudgeError::OutputMalformed(format!(
                "bad or duplicate id {}",
                line.id
            )));
        }
        labels[line.id] = parse_label(&line.label).ok_or_else(|| {
            JudgeError::OutputMalformed(format!("unrecognized label `{}`", line.label))
        })?;
        seen[line.id] = true;
    }
    Ok(labels)
}

impl RowJudge for ModelJudge {
    fn judge_rows(
        &self,
        question: &str,
        prediction: &str,
        gold: &ResultSet,
    ) -> Result<Vec<RowLabel>, JudgeError> {
        let prompt = Self::render_prompt(question, prediction, gold);
        let response = query_model(&prompt, &self.endpoint).map_err(|e| match e {
            GatewayError::MalformedResponse(m) => JudgeError::OutputMalformed(m),
            other => JudgeError::Unavailable(other.to_string()),
        })?;
        parse_labels(&response.raw, gold.rows.len().max(1))
    }

    fn kind(&self) -> String {
        format!("model:{}", self.endpoint.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::Value;

    fn gold(rows: Vec<Vec<Value>>) -> ResultSet {
        ResultSet {
            columns: vec!["a".into()],
            rows,
            ordered: false,
        }
    }

    #[test]
    fn prompt_embeds_gold_with_ids() {
        let g = gold(vec![vec![Value::Text("x".into())], vec![Value::Integer(3)]]);
        let p = ModelJudge::render_prompt("q?", "pred", &g);
        assert!(p.contains(r#"[{"id":0,"row":["x"]},{"id":1,"row":[3]}]"#));
        assert!(p.contains("\"id\": 1, \"label\""));
        assert!(!p.contains("{examples}"));
    }

    #[test]
    fn empty_gold_renders_empty_list_with_single_verdict() {
        let g = gold(vec![]);
        let p = ModelJudge::render_prompt("q?", "pred", &g);
        assert!(p.contains("```\n[]\n```"));
        assert!(p.contains("\"id\": 0"));
    }

    #[test]
    fn parses_labels_in_any_order() {
        let labels = parse_labels
            (r#"Here is my verdict: [{"id": 1, "label": "No Match"}, {"id": 0, "label": "Partial Match"}] done"#, 2)
            .unwrap();
        assert_eq!(labels, vec![RowLabel::PartialMatch, RowLabel::NoMatch]);
    }

    #[test]
    fn malformed_outputs_are_rejected() {
        assert!(parse_labels("no json here", 1).is_err());
        assert!(parse_labels(r#"[{"id": 0, "label": "Exact Match"}]"#, 2).is_err());
        assert!(parse_labels(r#"[{"id": 0, "label": "gibberish"}]"#, 1).is_err());
        assert!(
            parse_labels(r#"[{"id": 0, "label": "Exact"}, {"id": 0, "label": "Exact"}]"#, 2)
                .is_err()
        );
    }
}
