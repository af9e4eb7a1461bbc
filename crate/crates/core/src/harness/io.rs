//! Line-delimited JSON ingestion for corpora and candidate/sample files.
//! Malformed lines are reported with their file and line number.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One source sentence, optionally with reference translations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub source_id: String,
    pub source_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<Vec<String>>,
}

/// The role a candidate-file record plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Candidate,
    Sample,
}

/// One externally supplied candidate or sample.
///
/// `kind` is optional: when present the record is used only in that role;
/// when absent it plays the role of the file it was read from, so a single
/// file can be passed as both the candidate and the sample input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateFileRecord {
    pub source_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<RecordKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_prob: Option<f64>,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Data(format!("cannot read {}: {e}", path.display()))
    })?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line).map_err(|e| Error::DataLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Load a corpus file and check source-id uniqueness.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let records: Vec<CorpusRecord> = read_jsonl(path)?;
    if records.is_empty() {
        return Err(Error::Data(format!("corpus {} is empty", path.display())));
    }
    let mut seen = HashSet::new();
    for (idx, record) in records.iter().enumerate() {
        if !seen.insert(record.source_id.as_str()) {
            return Err(Error::DataLine {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("duplicate source_id {:?}", record.source_id),
            });
        }
    }
    Ok(records)
}

/// Load a candidate/sample file, keep records usable in `role`, and group
/// their texts by source id. Every record must reference a corpus source.
pub fn load_candidate_file(
    path: &Path,
    role: RecordKind,
    corpus_ids: &HashSet<&str>,
) -> Result<HashMap<String, Vec<CandidateFileRecord>>> {
    let records: Vec<CandidateFileRecord> = read_jsonl(path)?;
    let mut by_source: HashMap<String, Vec<CandidateFileRecord>> = HashMap::new();
    for (idx, record) in records.into_iter().enumerate() {
        if !corpus_ids.contains(record.source_id.as_str()) {
            return Err(Error::DataLine {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!(
                    "source_id {:?} does not appear in the corpus",
                    record.source_id
                ),
            });
        }
        if record.kind.is_some_and(|k| k != role) {
            continue;
        }
        by_source.entry(record.source_id.clone()).or_default().push(record);
    }
    Ok(by_source)
}
