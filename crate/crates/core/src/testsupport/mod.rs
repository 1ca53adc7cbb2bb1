//! Test-only helpers: the brute-force oracle, deterministic subtable
//! sampling, result comparison, and a minimal HTTP fixture server.
//! Compiled only under the `testsupport` feature; not part of the API.

pub mod oracle;

use crate::exec::ResultSet;
use crate::relational::{cmp_rows, Database, Table};
use oracle::OracleResult;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::cmp::Ordering;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;

/// Workspace `fixtures/` directory (shared example data).
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Deterministically keeps a random subset of each table's rows (at most
/// `max_rows` each, at least one when the table is non-empty), preserving
/// row order.
pub fn random_subtable(db: &Database, max_rows: usize, seed: u64) -> Database {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = db.clone();
    out.tables = db
        .tables
        .iter()
        .map(|t| {
            let mut copy = Table::new(t.name.clone(), t.columns.clone());
            if !t.rows.is_empty() {
                let keep = rng.random_range(1..=max_rows.min(t.rows.len()));
                let mut indices: Vec<usize> = (0..t.rows.len()).collect();
                for _ in 0..(t.rows.len() - keep) {
                    let drop = rng.random_range(0..indices.len());
                    indices.remove(drop);
                }
                for i in indices {
                    copy.rows.push(t.rows[i].clone());
                }
            }
            copy
        })
        .collect();
    out
}

/// Compares executor output with the oracle: exact when ordered, as
/// multisets when not.
pub fn results_match(actual: &ResultSet, expected: &OracleResult) -> bool {
    if actual.ordered != expected.ordered || actual.rows.len() != expected.rows.len() {
        return false;
    }
    if actual.ordered {
        actual
            .rows
            .iter()
            .zip(&expected.rows)
            .all(|(a, b)| cmp_rows(a, b) == Ordering::Equal)
    } else {
        let mut a = actual.rows.clone();
        let mut b = expected.rows.clone();
        a.sort_by(|x, y| cmp_rows(x, y));
        b.sort_by(|x, y| cmp_rows(x, y));
        a.iter()
            .zip(&b)
            .all(|(x, y)| cmp_rows(x, y) == Ordering::Equal)
    }
}

/// Checks the placement invariant for a merged document stream:
/// contiguous run at the declared location for Beginning/Middle/End,
/// runs touching both ends for Bimodal, and evenly rounded gaps for
/// Uniform. All-relevant streams pass trivially.
pub fn check_positioning(
    position: crate::corpus::PositionStrategy,
    documents: &[crate::corpus::Document],
) -> Result<(), String> {
    use crate::corpus::PositionStrategy::*;
    let n = documents.len();
    let indices: Vec<usize> = documents
        .iter()
        .enumerate()
        .filter(|(_, d)| d.relevant)
        .map(|(i, _)| i)
        .collect();
    if indices.is_empty() {
        return Err("no relevant documents in stream".into());
    }
    if indices.len() == n {
        return Ok(());
    }

    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &i in &indices {
        match runs.last_mut() {
            Some((_, end)) if *end + 1 == i => *end = i,
            _ => runs.push((i, i)),
        }
    }

    match position {
        Beginning => {
            if runs.len() != 1 || runs[0].0 != 0 {
                return Err(format!("beginning: runs {runs:?}"));
            }
        }
        End => {
            if runs.len() != 1 || runs[0].1 != n - 1 {
                return Err(format!("end: runs {runs:?} of {n}"));
            }
        }
        Middle => {
            if runs.len() != 1 {
                return Err(format!("middle: runs {runs:?}"));
            }
            let (start, end) = runs[0];
            let run_center = (start + end) as f64 / 2.0;
            let stream_center = (n - 1) as f64 / 2.0;
            if (run_center - stream_center).abs() > 1.0 + 1e-9 {
                return Err(format!(
                    "middle: run center {run_center} vs stream center {stream_center}"
                ));
            }
        }
        Bimodal => {
            if indices.len() == 1 {
                let i = indices[0];
                if i != 0 && i != n - 1 {
                    return Err(format!("bimodal single doc at {i} of {n}"));
                }
            } else if runs.len() != 2 || runs[0].0 != 0 || runs[1].1 != n - 1 {
                return Err(format!("bimodal: runs {runs:?} of {n}"));
            }
        }
        Uniform => {
            if indices.len() >= 2 {
                let gaps: Vec<usize> = indices.windows(2).map(|w| w[1] - w[0]).collect();
                let max = *gaps.iter().max().unwrap();
                let min = *gaps.iter().min().unwrap();
                if max - min > 1 {
                    return Err(format!("uniform: gap spread {min}..{max} in {indices:?}"));
                }
            }
        }
    }
    Ok(())
}

/// One canned HTTP response: status code plus body.
pub struct CannedResponse {
    pub status: u16,
    pub body: String,
}

/// Spawns a one-shot HTTP server that answers the given responses in
/// order (connection-per-request) and then stops. Returns the base URL.
pub fn serve_canned(responses: Vec<CannedResponse>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
    let addr = listener.local_addr().expect("local addr");
    std::thread::spawn(move || {
        for canned in responses {
            let Ok((stream, _)) = listener.accept() else {
                return;
            };
            let mut reader = BufReader::new(stream);
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).is_err() || line.trim_end().is_empty() {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(rest) = lower.strip_prefix("content-length:") {
                    content_length = rest.trim().parse().unwrap_or(0);
                }
            }
            if content_length > 0 {
                let mut body = vec![0u8; content_length];
                let _ = reader.read_exact(&mut body);
            }
            let mut stream = reader.into_inner();
            let reason = match canned.status {
                200 => "OK",
                429 => "Too Many Requests",
                500 => "Internal Server Error",
                _ => "Status",
            };
            let response = format!(
                "HTTP/1.1 {} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                canned.status,
                reason,
                canned.body.len(),
                canned.body
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    format!("http://{addr}")
}

/// Chat-completion JSON body with the given content string.
pub fn chat_completion_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 5}
    })
    .to_string()
}
