//! Embedding vectors and an exact nearest-neighbour index.
//!
//! Similarity search is a linear scan over cosine similarity — candidate
//! pools here are small (hundreds of examples), so exactness beats
//! approximate structures. Ordering is fully deterministic: score
//! descending, then item id ascending.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector for item {0}: cosine similarity undefined")]
    ZeroVector(String),
    #[error("non-finite component in vector for item {0}")]
    NonFinite(String),
    #[error("duplicate item id: {0}")]
    DuplicateId(String),
    #[error("cannot build an index from zero entries")]
    Empty,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A dense embedding with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0.0)
    }

    fn check_finite(&self, id: &str) -> Result<(), EmbeddingError> {
        if self.0.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite(id.to_owned()));
        }
        Ok(())
    }

    fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Cosine similarity between two vectors of equal, nonzero length.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroVector("<anonymous>".to_owned()));
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

/// An exact-search index over `(item_id, vector)` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnIndex {
    pub dim: usize,
    entries: Vec<(String, EmbeddingVector)>,
}

impl KnnIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.entries.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.iter().any(|(e, _)| e == id)
    }

    pub fn vector(&self, id: &str) -> Option<&EmbeddingVector> {
        self.entries.iter().find(|(e, _)| e == id).map(|(_, v)| v)
    }

    /// Returns up to `k` nearest entries by cosine similarity, excluding any
    /// ids in `exclude`. Results are sorted by score descending with ties
    /// broken by item id ascending; `k` larger than the candidate set
    /// saturates.
    pub fn query(
        &self,
        query: &EmbeddingVector,
        k: usize,
        exclude: &BTreeSet<String>,
    ) -> Result<Vec<(String, f64)>, EmbeddingError> {
        if query.dim() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        query.check_finite("<query>")?;
        if query.is_zero() {
            return Err(EmbeddingError::ZeroVector("<query>".to_owned()));
        }
        let mut scored: Vec<(String, f64)> = self
            .entries
            .iter()
            .filter(|(id, _)| !exclude.contains(id))
            .map(|(id, v)| cosine(query, v).map(|s| (id.clone(), s)))
            .collect::<Result<_, _>>()?;
        scored.sort_by(|(ida, sa), (idb, sb)| {
            sb.partial_cmp(sa)
                .expect("scores are finite")
                .then_with(|| ida.cmp(idb))
        });
        scored.truncate(k);
        Ok(scored)
    }
}

/// Builds an index from `(item_id, vector)` pairs. All vectors must share
/// one dimension, be nonzero and finite, and ids must be distinct.
pub fn build_index(entries: Vec<(String, EmbeddingVector)>) -> Result<KnnIndex, EmbeddingError> {
    let dim = match entries.first() {
        Some((_, v)) => v.dim(),
        None => return Err(EmbeddingError::Empty),
    };
    let mut seen = BTreeSet::new();
    for (id, v) in &entries {
        if v.dim() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
        v.check_finite(id)?;
        if v.is_zero() {
            return Err(EmbeddingError::ZeroVector(id.clone()));
        }
        if !seen.insert(id.clone()) {
            return Err(EmbeddingError::DuplicateId(id.clone()));
        }
    }
    Ok(KnnIndex { dim, entries })
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarLine {
    item_id: String,
    vector: Vec<f64>,
}

/// Loads an embedding sidecar: line-delimited JSON of
/// `{"item_id": ..., "vector": [...]}`. The dimension is inferred from the
/// first line and enforced on the rest.
pub fn load_sidecar(path: &Path) -> Result<Vec<(String, EmbeddingVector)>, EmbeddingError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut out: Vec<(String, EmbeddingVector)> = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SidecarLine =
            serde_json::from_str(&line).map_err(|e| EmbeddingError::Parse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        let vec = EmbeddingVector(parsed.vector);
        vec.check_finite(&parsed.item_id)?;
        match dim {
            None => dim = Some(vec.dim()),
            Some(d) if d != vec.dim() => {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: d,
                    got: vec.dim(),
                })
            }
            _ => {}
        }
        out.push((parsed.item_id, vec));
    }
    Ok(out)
}

/// Writes `(item_id, vector)` pairs in the sidecar line format.
pub fn save_sidecar(
    entries: &[(String, EmbeddingVector)],
    path: &Path,
) -> Result<(), EmbeddingError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for (item_id, vector) in entries {
        let line = serde_json::to_string(&SidecarLine {
            item_id: item_id.clone(),
            vector: vector.0.clone(),
        })
        .expect("sidecar serialization is infallible");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Saves a built index as a single JSON document.
pub fn save_index(index: &KnnIndex, path: &Path) -> Result<(), EmbeddingError> {
    let file = File::create(path)?;
    serde_json::to_writer(BufWriter::new(file), index).map_err(|e| EmbeddingError::Parse {
        line: 0,
        reason: e.to_string(),
    })?;
    Ok(())
}

/// Loads an index written by [`save_index`], revalidating its invariants.
pub fn load_index(path: &Path) -> Result<KnnIndex, EmbeddingError> {
    let file = File::open(path)?;
    let index: KnnIndex =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| EmbeddingError::Parse {
            line: 0,
            reason: e.to_string(),
        })?;
    build_index(index.entries)
}
