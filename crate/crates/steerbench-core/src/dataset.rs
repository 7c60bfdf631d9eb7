//! Multiple-choice question datasets: loading, validation, exam filtering,
//! and pool/test splitting.
//!
//! Datasets are stored as line-delimited JSON, one item per line. Items are
//! immutable after load and safe to share across threads.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the option count; options are lettered A..Z in prompts.
pub const MAX_OPTIONS: usize = 26;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("item {item_id} (line {line}): {reason}")]
    Invariant {
        item_id: String,
        line: usize,
        reason: String,
    },
    #[error("unknown item id in pool spec: {0}")]
    UnknownId(String),
    #[error("pool fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One multiple-choice question.
///
/// `gold_index` is 0-based; option letters exist only at the prompt-rendering
/// boundary. Option equality is positional, never textual, so duplicate
/// option texts are accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqItem {
    pub id: String,
    pub stem: String,
    pub options: Vec<String>,
    pub gold_index: usize,
    #[serde(default = "default_language")]
    pub language: String,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

fn default_language() -> String {
    "en".to_owned()
}

impl McqItem {
    /// Checks the per-item invariants: option count in `2..=26` and a gold
    /// index inside the option list.
    pub fn validate(&self) -> Result<(), String> {
        if self.options.len() < 2 {
            return Err(format!("needs at least 2 options, has {}", self.options.len()));
        }
        if self.options.len() > MAX_OPTIONS {
            return Err(format!(
                "needs at most {MAX_OPTIONS} options, has {}",
                self.options.len()
            ));
        }
        if self.gold_index >= self.options.len() {
            return Err(format!(
                "gold_index {} out of range for {} options",
                self.gold_index,
                self.options.len()
            ));
        }
        Ok(())
    }
}

/// A raw exam item before construction filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawExamItem {
    #[serde(flatten)]
    pub item: McqItem,
    pub has_image: bool,
    pub correct_answer_count: usize,
}

impl RawExamItem {
    pub fn validate(&self) -> Result<(), String> {
        self.item.validate()?;
        if self.correct_answer_count > self.item.options.len() {
            return Err(format!(
                "correct_answer_count {} exceeds option count {}",
                self.correct_answer_count,
                self.item.options.len()
            ));
        }
        Ok(())
    }
}

/// An immutable collection of [`McqItem`]s with pairwise-distinct ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub version: String,
    pub items: Vec<McqItem>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        version: impl Into<String>,
        items: Vec<McqItem>,
    ) -> Result<Self, DatasetError> {
        let ds = Dataset {
            name: name.into(),
            version: version.into(),
            items,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&McqItem> {
        self.items.iter().find(|i| i.id == id)
    }

    /// Checks every item invariant plus id uniqueness.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = BTreeSet::new();
        for (idx, item) in self.items.iter().enumerate() {
            item.validate().map_err(|reason| DatasetError::Invariant {
                item_id: item.id.clone(),
                line: idx + 1,
                reason,
            })?;
            if !seen.insert(item.id.clone()) {
                return Err(DatasetError::Invariant {
                    item_id: item.id.clone(),
                    line: idx + 1,
                    reason: "duplicate item id".to_owned(),
                });
            }
        }
        Ok(())
    }
}

fn name_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned())
}

/// Loads a line-delimited JSON dataset, enforcing all invariants.
///
/// The dataset name is taken from the file stem; the line schema carries no
/// dataset-level metadata. Blank lines are skipped. Line numbers are
/// reported in every parse and invariant error.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let items = load_lines::<McqItem>(path)?;
    let mut seen = BTreeSet::new();
    for (line, item) in &items {
        item.validate().map_err(|reason| DatasetError::Invariant {
            item_id: item.id.clone(),
            line: *line,
            reason,
        })?;
        if !seen.insert(item.id.clone()) {
            return Err(DatasetError::Invariant {
                item_id: item.id.clone(),
                line: *line,
                reason: "duplicate item id".to_owned(),
            });
        }
    }
    Ok(Dataset {
        name: name_from_path(path),
        version: String::new(),
        items: items.into_iter().map(|(_, i)| i).collect(),
    })
}

/// Loads raw exam items (the pre-filter schema with `has_image` and
/// `correct_answer_count`) from line-delimited JSON.
pub fn load_raw_dataset(path: &Path) -> Result<Vec<RawExamItem>, DatasetError> {
    let items = load_lines::<RawExamItem>(path)?;
    for (line, raw) in &items {
        raw.validate().map_err(|reason| DatasetError::Invariant {
            item_id: raw.item.id.clone(),
            line: *line,
            reason,
        })?;
    }
    Ok(items.into_iter().map(|(_, i)| i).collect())
}

fn load_lines<T: serde::de::DeserializeOwned>(
    path: &Path,
) -> Result<Vec<(usize, T)>, DatasetError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str::<T>(&line).map_err(|e| DatasetError::Parse {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

/// Writes a dataset as line-delimited JSON, one item per line.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for item in &dataset.items {
        let line = serde_json::to_string(item).expect("item serialization is infallible");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// The retention predicate for exam construction: image-free, exactly one
/// correct answer, exactly five options.
pub fn jmle_keep(raw: &RawExamItem) -> bool {
    !raw.has_image && raw.correct_answer_count == 1 && raw.item.options.len() == 5
}

/// Filters raw exam items down to five-choice, single-answer, image-free
/// questions, preserving input order. Retained items are never mutated.
/// An empty result is valid.
pub fn jmle_filter(name: impl Into<String>, raw: &[RawExamItem]) -> Dataset {
    Dataset {
        name: name.into(),
        version: String::new(),
        items: raw
            .iter()
            .filter(|r| jmle_keep(r))
            .map(|r| r.item.clone())
            .collect(),
    }
}

/// How to choose the few-shot candidate pool when splitting a dataset.
#[derive(Debug, Clone)]
pub enum PoolSpec {
    /// Explicit item ids; the test set is the complement.
    Ids(BTreeSet<String>),
    /// A seeded random fraction in (0, 1).
    Fraction { fraction: f64, seed: u64 },
}

/// Partitions a dataset into (pool, test). Every item lands in exactly one
/// side, original order is preserved within each side, and the split is
/// deterministic for a fixed seed.
pub fn split_pool(dataset: &Dataset, spec: &PoolSpec) -> Result<(Dataset, Dataset), DatasetError> {
    let pool_ids: BTreeSet<String> = match spec {
        PoolSpec::Ids(ids) => {
            let known = dataset.ids();
            for id in ids {
                if !known.contains(id) {
                    return Err(DatasetError::UnknownId(id.clone()));
                }
            }
            ids.clone()
        }
        PoolSpec::Fraction { fraction, seed } => {
            if !(*fraction > 0.0 && *fraction < 1.0) {
                return Err(DatasetError::BadFraction(*fraction));
            }
            let n = dataset.items.len();
            let take = ((n as f64) * fraction).round() as usize;
            let mut indices: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            // Fisher-Yates; only the first `take` slots matter but a full
            // shuffle keeps the stream independent of `take`.
            for i in (1..indices.len()).rev() {
                let j = rng.gen_range(0..=i);
                indices.swap(i, j);
            }
            indices
                .into_iter()
                .take(take)
                .map(|i| dataset.items[i].id.clone())
                .collect()
        }
    };

    let (pool_items, test_items): (Vec<McqItem>, Vec<McqItem>) = dataset
        .items
        .iter()
        .cloned()
        .partition(|item| pool_ids.contains(&item.id));

    Ok((
        Dataset {
            name: dataset.name.clone(),
            version: dataset.version.clone(),
            items: pool_items,
        },
        Dataset {
            name: dataset.name.clone(),
            version: dataset.version.clone(),
            items: test_items,
        },
    ))
}
