//! Stage artifacts: atomic writes and schema-checked reads.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ksum_core::corpus::{read_jsonl, write_jsonl};
use ksum_core::nn::TrainingCurve;
use ksum_core::rewriter::{AblationFlags, ToySeq2Seq};
use ksum_core::retriever::DebugMention;
use ksum_core::SelectorModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RewriterBackend;

pub const PAIRS: &str = "pairs.jsonl";
pub const LABELS: &str = "labels.jsonl";
pub const SELECTOR: &str = "selector.json";
pub const REWRITER: &str = "rewriter.json";
pub const SELECTED: &str = "selected.jsonl";
pub const LINKS_DEBUG: &str = "links.debug.jsonl";
pub const SUMMARIES: &str = "summaries.jsonl";
pub const SCORES: &str = "scores.json";
pub const STATS: &str = "stats.json";

/// Writes to a temporary file in the target directory, then renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut bytes = Vec::new();
    write_jsonl(&mut bytes, items)?;
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, v)| v).collect())
}

/// Path of an upstream artifact, with a hint when it is missing.
pub fn upstream(out: &Path, name: &str, stage: &str) -> Result<PathBuf> {
    let path = out.join(name);
    if !path.exists() {
        anyhow::bail!("{} is missing; run `ksum {stage}` first", path.display());
    }
    Ok(path)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectorArtifact {
    pub model: SelectorModel,
    pub curve: TrainingCurve,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RewriterArtifact {
    pub backend: RewriterBackend,
    pub flags: AblationFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ToySeq2Seq>,
    #[serde(default)]
    pub curve: TrainingCurve,
}

/// One row of `links.debug.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub game_id: String,
    pub commentary_index: usize,
    pub sentence: String,
    pub mentions: Vec<DebugMention>,
}
