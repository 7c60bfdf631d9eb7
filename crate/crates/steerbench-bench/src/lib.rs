//! Deterministic fixture builders shared by the criterion benches.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use steerbench_core::costing::{price, CostRecord, PriceSheet};
use steerbench_core::dataset::McqItem;
use steerbench_core::embedding::EmbeddingVector;
use steerbench_core::evaluation::ParetoPoint;
use steerbench_core::gateway::TokenUsage;
use steerbench_core::steering::CuratedExample;

pub fn item(id: &str, n_options: usize, gold: usize) -> McqItem {
    McqItem {
        id: id.to_owned(),
        stem: format!("benchmark stem for {id} with a clause that pads it to a plausible length"),
        options: (0..n_options).map(|o| format!("{id} candidate option {o}")).collect(),
        gold_index: gold,
        language: "en".to_owned(),
        meta: serde_json::Map::new(),
    }
}

pub fn vectors(n: usize, dim: usize, seed: u64) -> Vec<(String, EmbeddingVector)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (format!("v{i:04}"), EmbeddingVector(v))
        })
        .collect()
}

pub fn points(n: usize, seed: u64) -> Vec<ParetoPoint> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            ParetoPoint::new(
                format!("p{i:04}"),
                rng.gen_range(0.01..1000.0),
                rng.gen_range(0.0..=1.0),
            )
        })
        .collect()
}

pub fn cost_records(n: usize, seed: u64) -> Vec<CostRecord> {
    let sheet = PriceSheet::builtin();
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let usage = TokenUsage {
                input_tokens: rng.gen_range(0..100_000),
                reasoning_tokens: rng.gen_range(0..100_000),
                output_tokens: rng.gen_range(0..100_000),
            };
            CostRecord {
                model_id: "o1-preview".to_owned(),
                usage,
                usd: price(usage, "o1-preview", &sheet).unwrap(),
            }
        })
        .collect()
}

pub fn exemplars(k: usize) -> Vec<CuratedExample> {
    (0..k)
        .map(|i| {
            let item = item(&format!("exemplar-{i}"), 4, i % 4);
            CuratedExample {
                model_answer_index: item.gold_index,
                cot_text: format!(
                    "Working through exemplar {i} step by step leads to the listed answer."
                ),
                item,
            }
        })
        .collect()
}
