//! Prompt construction and few-shot steering: answer-choice shuffling with
//! invertible bookkeeping, template rendering, kNN example selection, and
//! self-generated chain-of-thought curation.

pub mod curate;
pub mod fewshot;
pub mod template;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::McqItem;
use crate::embedding::EmbeddingError;

pub use curate::{curate_cot, CurationOutcome, CurationRecord, CurationStatus};
pub use fewshot::{load_store, save_store, select_few_shot, CuratedExample};
pub use template::{letter, render, PromptTemplate, RenderedPrompt};

#[derive(Debug, Error)]
pub enum SteeringError {
    #[error("answer index {index} out of range for permutation of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("template arity mismatch: {0}")]
    TemplateArityMismatch(String),
    #[error("id {0} not resolvable in the curated pool")]
    UnresolvableId(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("curated store violates its invariant for item {item_id}: {reason}")]
    StoreInvariant { item_id: String, reason: String },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A bijection on option positions. `mapping[new_position]` is the original
/// index of the option now shown at `new_position`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self, SteeringError> {
        let mut sorted = mapping.clone();
        sorted.sort_unstable();
        if sorted != (0..mapping.len()).collect::<Vec<_>>() {
            return Err(SteeringError::InvalidPermutation(format!(
                "{mapping:?} is not a bijection on 0..{}",
                mapping.len()
            )));
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = String;
    fn try_from(mapping: Vec<usize>) -> Result<Self, String> {
        Permutation::new(mapping).map_err(|e| e.to_string())
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.mapping
    }
}

/// An item whose options have been reordered, together with the permutation
/// needed to map answers back to original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffledItem {
    pub item: McqItem,
    pub permutation: Permutation,
}

impl ShuffledItem {
    /// Wraps an item unshuffled (identity permutation).
    pub fn identity(item: McqItem) -> Self {
        let n = item.options.len();
        ShuffledItem {
            item,
            permutation: Permutation::identity(n),
        }
    }
}

fn shuffle_stream(seed: u64, salt: &str, item_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(salt.as_bytes());
    hasher.update(item_id.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Reorders an item's options deterministically for (seed, salt, item id).
/// The shuffled gold index tracks the gold option's new position.
pub fn shuffle_choices(item: &McqItem, seed: u64, salt: &str) -> (McqItem, Permutation) {
    let n = item.options.len();
    let mut mapping: Vec<usize> = (0..n).collect();
    let mut rng = shuffle_stream(seed, salt, &item.id);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        mapping.swap(i, j);
    }
    let options: Vec<String> = mapping.iter().map(|&orig| item.options[orig].clone()).collect();
    let gold_index = mapping
        .iter()
        .position(|&orig| orig == item.gold_index)
        .expect("gold index present in any bijection");
    let shuffled = McqItem {
        id: item.id.clone(),
        stem: item.stem.clone(),
        options,
        gold_index,
        language: item.language.clone(),
        meta: item.meta.clone(),
    };
    (shuffled, Permutation { mapping })
}

/// Maps an answer index in shuffled coordinates back to the original option
/// index.
pub fn unshuffle_answer(
    answer_index_in_shuffled: usize,
    perm: &Permutation,
) -> Result<usize, SteeringError> {
    perm.mapping
        .get(answer_index_in_shuffled)
        .copied()
        .ok_or(SteeringError::IndexOutOfRange {
            index: answer_index_in_shuffled,
            size: perm.size(),
        })
}
