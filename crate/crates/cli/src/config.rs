//! Run manifest: one JSON document wiring databases, the question suite,
//! the generation grid, and endpoint/judge choices together.

use crate::error::CliError;
use haybench_core::corpus::{CorpusConfig, InfoSpec, PositionStrategy};
use haybench_core::gateway::EndpointConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Database name -> database manifest path (relative to this file).
    pub databases: BTreeMap<String, String>,
    /// Question suite path (relative to this file).
    pub suite: String,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
    /// `"deterministic"` or `{"endpoint": {...}}`.
    #[serde(default)]
    pub judge: JudgeChoice,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeChoice {
    #[default]
    Deterministic,
    Endpoint {
        endpoint: EndpointConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub context_lengths: Vec<usize>,
    pub info: InfoSpec,
    pub positions: Vec<PositionStrategy>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
}

fn default_replicates() -> u32 {
    1
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.context_lengths.is_empty() || self.positions.is_empty() || self.seeds.is_empty() {
            return Err(CliError::Validation(
                "grid lists (context_lengths, positions, seeds) must be nonempty".into(),
            ));
        }
        if !self.context_lengths.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Validation(
                "grid context_lengths must be strictly increasing".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(CliError::Validation("grid replicates must be >= 1".into()));
        }
        // Every cell must resolve to a valid corpus config.
        for &context_tokens in &self.context_lengths {
            for &position in &self.positions {
                let probe = CorpusConfig {
                    context_tokens,
                    info: self.info,
                    position,
                    seed: 0,
                };
                probe
                    .validate()
                    .map_err(|e| CliError::Validation(format!("grid cell invalid: {e}")))?;
            }
        }
        Ok(())
    }

    /// Cells in deterministic order: length-major, then position, seed,
    /// replicate.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &context_tokens in &self.context_lengths {
            for &position in &self.positions {
                for &seed in &self.seeds {
                    for replicate in 0..self.replicates {
                        out.push(GridCell {
                            context_tokens,
                            info: self.info,
                            position,
                            seed,
                            replicate,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridCell {
    pub context_tokens: usize,
    pub info: InfoSpec,
    pub position: PositionStrategy,
    pub seed: u64,
    pub replicate: u32,
}

impl RunManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<RunManifest, CliError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let mut manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        manifest.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        if manifest.databases.is_empty() {
            return Err(CliError::Validation(
                "run manifest lists no databases".into(),
            ));
        }
        manifest.grid.validate()?;
        if let Some(endpoint) = &manifest.endpoint {
            endpoint
                .validate()
                .map_err(|e| CliError::Validation(e.to_string()))?;
        }
        Ok(manifest)
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn suite_path(&self) -> PathBuf {
        self.resolve(&self.suite)
    }
}
