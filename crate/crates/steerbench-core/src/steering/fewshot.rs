//! Curated few-shot exemplars: the on-disk store and kNN-driven selection.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SteeringError;
use crate::dataset::{Dataset, McqItem};
use crate::embedding::{EmbeddingVector, KnnIndex};

/// A pool item that survived chain-of-thought curation. The curation filter
/// guarantees `model_answer_index == item.gold_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuratedExample {
    pub item: McqItem,
    pub cot_text: String,
    pub model_answer_index: usize,
}

/// Store line format: the explanation plus answer, keyed by item id. Item
/// bodies live in the pool dataset, not the store.
#[derive(Debug, Serialize, Deserialize)]
struct StoreLine {
    item_id: String,
    cot_text: String,
    model_answer_index: usize,
}

/// Writes curated examples as line-delimited JSON next to the pool dataset.
pub fn save_store(examples: &[CuratedExample], path: &Path) -> Result<(), SteeringError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for ex in examples {
        let line = serde_json::to_string(&StoreLine {
            item_id: ex.item.id.clone(),
            cot_text: ex.cot_text.clone(),
            model_answer_index: ex.model_answer_index,
        })
        .expect("store serialization is infallible");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a curated store, resolving each line against the pool dataset and
/// re-checking the curation invariant (stored answer equals gold).
pub fn load_store(path: &Path, pool: &Dataset) -> Result<Vec<CuratedExample>, SteeringError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: StoreLine =
            serde_json::from_str(&line).map_err(|e| SteeringError::Parse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        let item = pool
            .get(&parsed.item_id)
            .ok_or_else(|| SteeringError::UnresolvableId(parsed.item_id.clone()))?;
        if parsed.model_answer_index != item.gold_index {
            return Err(SteeringError::StoreInvariant {
                item_id: parsed.item_id,
                reason: format!(
                    "stored answer {} does not match gold index {}",
                    parsed.model_answer_index, item.gold_index
                ),
            });
        }
        out.push(CuratedExample {
            item: item.clone(),
            cot_text: parsed.cot_text,
            model_answer_index: parsed.model_answer_index,
        });
    }
    Ok(out)
}

/// Selects the `k` curated examples most similar to the query embedding, in
/// similarity order. `exclude` must contain the query item's own id when it
/// comes from the pool. `k = 0` degenerates to zero-shot.
pub fn select_few_shot(
    index: &KnnIndex,
    query_embedding: &EmbeddingVector,
    k: usize,
    exclude: &BTreeSet<String>,
    pool: &HashMap<String, CuratedExample>,
) -> Result<Vec<CuratedExample>, SteeringError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let ranked = index.query(query_embedding, k, exclude)?;
    ranked
        .into_iter()
        .map(|(id, _)| {
            pool.get(&id)
                .cloned()
                .ok_or(SteeringError::UnresolvableId(id))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::build_index;

    fn item(id: &str, gold: usize) -> McqItem {
        McqItem {
            id: id.to_owned(),
            stem: format!("stem {id}"),
            options: (0..4).map(|i| format!("option {i}")).collect(),
            gold_index: gold,
            language: "en".to_owned(),
            meta: serde_json::Map::new(),
        }
    }

    fn pool_dataset() -> Dataset {
        Dataset::new(
            "pool",
            "",
            vec![item("p1", 0), item("p2", 1), item("p3", 2)],
        )
        .unwrap()
    }

    fn example(id: &str, gold: usize) -> CuratedExample {
        CuratedExample {
            item: item(id, gold),
            cot_text: format!("explanation for {id}"),
            model_answer_index: gold,
        }
    }

    #[test]
    fn store_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curated.jsonl");
        let examples = vec![example("p1", 0), example("p3", 2)];
        save_store(&examples, &path).unwrap();
        let loaded = load_store(&path, &pool_dataset()).unwrap();
        assert_eq!(loaded, examples);
    }

    #[test]
    fn store_with_wrong_answer_index_is_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curated.jsonl");
        std::fs::write(
            &path,
            r#"{"item_id":"p1","cot_text":"x","model_answer_index":3}"#,
        )
        .unwrap();
        assert!(matches!(
            load_store(&path, &pool_dataset()),
            Err(SteeringError::StoreInvariant { .. })
        ));
    }

    #[test]
    fn store_with_unknown_item_is_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curated.jsonl");
        std::fs::write(
            &path,
            r#"{"item_id":"ghost","cot_text":"x","model_answer_index":0}"#,
        )
        .unwrap();
        assert!(matches!(
            load_store(&path, &pool_dataset()),
            Err(SteeringError::UnresolvableId(_))
        ));
    }

    fn selection_fixture() -> (KnnIndex, HashMap<String, CuratedExample>) {
        let index = build_index(vec![
            ("p1".to_owned(), EmbeddingVector(vec![1.0, 0.0])),
            ("p2".to_owned(), EmbeddingVector(vec![0.0, 1.0])),
            ("p3".to_owned(), EmbeddingVector(vec![1.0, 1.0])),
        ])
        .unwrap();
        let pool: HashMap<String, CuratedExample> = [
            ("p1".to_owned(), example("p1", 0)),
            ("p2".to_owned(), example("p2", 1)),
            ("p3".to_owned(), example("p3", 2)),
        ]
        .into_iter()
        .collect();
        (index, pool)
    }

    #[test]
    fn selection_follows_similarity_order() {
        let (index, pool) = selection_fixture();
        let query = EmbeddingVector(vec![1.0, 0.1]);
        let got = select_few_shot(&index, &query, 2, &BTreeSet::new(), &pool).unwrap();
        let ids: Vec<&str> = got.iter().map(|e| e.item.id.as_str()).collect();
        assert_eq!(ids, ["p1", "p3"]);
    }

    #[test]
    fn k_zero_degenerates_to_zero_shot() {
        let (index, pool) = selection_fixture();
        let query = EmbeddingVector(vec![1.0, 0.0]);
        let got = select_few_shot(&index, &query, 0, &BTreeSet::new(), &pool).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn self_exclusion_removes_the_query_item() {
        let (index, pool) = selection_fixture();
        let query = EmbeddingVector(vec![1.0, 0.0]);
        let exclude: BTreeSet<String> = ["p1".to_owned()].into_iter().collect();
        let got = select_few_shot(&index, &query, 3, &exclude, &pool).unwrap();
        assert!(got.iter().all(|e| e.item.id != "p1"));
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn index_id_missing_from_pool_is_unresolvable() {
        let (index, mut pool) = selection_fixture();
        pool.remove("p3");
        let query = EmbeddingVector(vec![1.0, 1.0]);
        assert!(matches!(
            select_few_shot(&index, &query, 3, &BTreeSet::new(), &pool),
            Err(SteeringError::UnresolvableId(_))
        ));
    }
}
