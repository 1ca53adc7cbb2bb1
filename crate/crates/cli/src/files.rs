//! Artifact files: line-delimited JSON with a header line that embeds the
//! SHA-256 of every input, so downstream commands can refuse mismatched
//! chains. Writes are atomic (temp file + rename) so failures leave no
//! partial output behind.

use crate::error::CliError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub version: u32,
    /// Input-name -> SHA-256 hex of the input file.
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Header {
    pub fn new(kind: &str) -> Header {
        Header {
            kind: kind.to_string(),
            version: 1,
            inputs: BTreeMap::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn input(mut self, name: &str, sha: String) -> Header {
        self.inputs.insert(name.to_string(), sha);
        self
    }

    pub fn meta(mut self, name: &str, value: impl Into<String>) -> Header {
        self.meta.insert(name.to_string(), value.into());
        self
    }

    /// Fails with a stale-hash error when the recorded input digest does
    /// not match the file on disk.
    pub fn expect_input(&self, name: &str, path: &Path) -> Result<(), CliError> {
        let recorded = self.inputs.get(name).ok_or_else(|| {
            CliError::stale(format!("header records no `{name}` input"))
        })?;
        let actual = sha256_file(path)?;
        if *recorded != actual {
            return Err(CliError::stale(format!(
                "`{name}` was {recorded} at write time but {} hashes to {actual}",
                path.display()
            )));
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Digest over a database's manifest plus every file it references, so
/// edits to any CSV, template, or dummy file change the fingerprint.
pub fn database_fingerprint(manifest_path: &Path) -> Result<String, CliError> {
    let manifest = haybench_core::relational::Manifest::read(manifest_path)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut hasher = Sha256::new();
    let mut feed = |path: &Path| -> Result<(), CliError> {
        hasher.update(path.file_name().map_or(b"?".as_slice(), |n| n.as_encoded_bytes()));
        let bytes = fs::read(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
        Ok(())
    };
    feed(manifest_path)?;
    for table in &manifest.tables {
        feed(&manifest.resolve(&table.file))?;
    }
    if let Some(t) = &manifest.templates {
        feed(&manifest.resolve(t))?;
    }
    if let Some(d) = &manifest.dummy_documents {
        feed(&manifest.resolve(d))?;
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Writes header plus records as JSONL, atomically.
pub fn write_jsonl<T: Serialize>(
    path: &Path,
    header: &Header,
    records: &[T],
) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let out = tmp.as_file_mut();
        serde_json::to_writer(&mut *out, header)
            .map_err(|e| CliError::Environment(e.to_string()))?;
        out.write_all(b"\n")?;
        for record in records {
            serde_json::to_writer(&mut *out, record)
                .map_err(|e| CliError::Environment(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::Environment(e.to_string()))?;
    Ok(())
}

/// Reads a JSONL artifact, checking the header kind.
pub fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    expected_kind: &str,
) -> Result<(Header, Vec<T>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{}: empty file", path.display())))?;
    let header: Header = serde_json::from_str(header_line)
        .map_err(|e| CliError::Validation(format!("{}: bad header: {e}", path.display())))?;
    if header.kind != expected_kind {
        return Err(CliError::Validation(format!(
            "{}: expected a {expected_kind} file, found {}",
            path.display(),
            header.kind
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        records.push(serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{}: record {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok((header, records))
}

/// Plain atomic text write (suite annotation, reports).
pub fn write_text_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.as_file_mut().write_all(text.as_bytes())?;
    tmp.persist(path)
        .map_err(|e| CliError::Environment(e.to_string()))?;
    Ok(())
}
