//! Benchmark execution: runs a strategy over a dataset with the
//! repeated-run protocol, scores decisions in original option coordinates,
//! and aggregates accuracy and cost.

pub mod extract;
pub mod pareto;
pub mod report;
pub mod stats;

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costing::{price, CostError, Money, PriceSheet};
use crate::dataset::{load_dataset, Dataset, DatasetError, McqItem};
use crate::embedding::{build_index, load_sidecar, EmbeddingError, EmbeddingVector, KnnIndex};
use crate::ensemble::{
    aggregate, plan_members, should_stop_early, EnsembleConfig, EnsembleError, MemberOutcome,
};
use crate::gateway::{ChatRequest, Gateway, GatewayError, ModelProfile, SimTarget, TokenUsage};
use crate::steering::{
    load_store, render, select_few_shot, CuratedExample, PromptTemplate, SteeringError,
};
use crate::util::indexed_fan_out;

pub use extract::extract_answer;
pub use pareto::{on_frontier_flags, pareto_frontier, ParetoPoint};
pub use report::{
    load_report, write_comparison_csv, write_report, BenchmarkReport, RunRecord, StrategySummary,
};
pub use stats::{mean, population_std};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("point {label} has non-positive cost {cost}")]
    NonPositiveCost { label: String, cost: f64 },
    #[error("point {label} has accuracy {accuracy} outside [0, 1]")]
    InvalidAccuracy { label: String, accuracy: f64 },
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("no embedding for item {0}")]
    MissingEmbedding(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Steering(#[from] SteeringError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// File references resolving a few-shot strategy's resources: the candidate
/// pool, its curated chain-of-thought store, and an embedding sidecar
/// covering both pool and evaluation items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotRefs {
    pub pool_dataset: PathBuf,
    pub curated_store: PathBuf,
    pub embeddings: PathBuf,
}

/// A complete, declarative description of one strategy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub label: String,
    pub template: PromptTemplate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub few_shot: Option<FewShotRefs>,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub model_id: String,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

fn default_repeats() -> usize {
    3
}

impl StrategySpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.template
            .validate()
            .map_err(EvalError::InvalidStrategy)?;
        self.ensemble.validate()?;
        if self.repeats == 0 {
            return Err(EvalError::InvalidStrategy(
                "repeats must be >= 1".to_owned(),
            ));
        }
        let is_few_shot = matches!(self.template, PromptTemplate::FewShot { .. });
        if is_few_shot != self.few_shot.is_some() {
            return Err(EvalError::InvalidStrategy(
                "few_shot resources must be present exactly when the template is few_shot"
                    .to_owned(),
            ));
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Self, EvalError> {
        let raw = std::fs::read_to_string(path)?;
        let spec: StrategySpec =
            serde_json::from_str(&raw).map_err(|e| EvalError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// In-memory few-shot resources: the similarity index over curated pool
/// items, the curated examples by id, and query embeddings for every item
/// that may be evaluated.
pub struct FewShotResources {
    pub index: KnnIndex,
    pub pool: HashMap<String, CuratedExample>,
    pub query_embeddings: HashMap<String, EmbeddingVector>,
}

impl FewShotResources {
    /// Loads and cross-validates the three files behind [`FewShotRefs`].
    /// The index is built over the sidecar vectors restricted to curated
    /// pool ids; all sidecar vectors serve as query embeddings.
    pub fn load(refs: &FewShotRefs) -> Result<Self, EvalError> {
        let pool_dataset = load_dataset(&refs.pool_dataset)?;
        let examples = load_store(&refs.curated_store, &pool_dataset)?;
        let pool: HashMap<String, CuratedExample> = examples
            .into_iter()
            .map(|e| (e.item.id.clone(), e))
            .collect();

        let sidecar = load_sidecar(&refs.embeddings)?;
        let index_entries: Vec<(String, EmbeddingVector)> = sidecar
            .iter()
            .filter(|(id, _)| pool.contains_key(id))
            .cloned()
            .collect();
        for id in pool.keys() {
            if !index_entries.iter().any(|(e, _)| e == id) {
                return Err(EvalError::MissingEmbedding(id.clone()));
            }
        }
        let index = build_index(index_entries)?;
        let query_embeddings: HashMap<String, EmbeddingVector> = sidecar.into_iter().collect();
        Ok(FewShotResources {
            index,
            pool,
            query_embeddings,
        })
    }
}

fn few_shot_examples(
    item: &McqItem,
    k: usize,
    resources: &FewShotResources,
) -> Result<Vec<CuratedExample>, EvalError> {
    let query = resources
        .query_embeddings
        .get(&item.id)
        .ok_or_else(|| EvalError::MissingEmbedding(item.id.clone()))?;
    let exclude: BTreeSet<String> = [item.id.clone()].into_iter().collect();
    Ok(select_few_shot(
        &resources.index,
        query,
        k,
        &exclude,
        &resources.pool,
    )?)
}

/// Distinguishes per-member runtime failures (recorded as abstaining
/// members) from configuration errors that must abort the run.
fn is_member_level(err: &GatewayError) -> bool {
    matches!(
        err,
        GatewayError::Transport { .. } | GatewayError::Provider { .. }
    )
}

/// Executes one item for one repeat: plans ensemble members, renders and
/// completes each one, extracts and de-shuffles answers, prices usage, and
/// aggregates the votes. Returns the record plus the exact run cost.
pub fn run_item(
    item: &McqItem,
    strategy: &StrategySpec,
    ensemble_config: &EnsembleConfig,
    repeat_index: usize,
    gateway: &Gateway,
    profile: &ModelProfile,
    sheet: &PriceSheet,
    resources: Option<&FewShotResources>,
) -> Result<(RunRecord, Money), EvalError> {
    let examples = match strategy.template {
        PromptTemplate::FewShot { k } => {
            let resources = resources.ok_or_else(|| {
                EvalError::InvalidStrategy("few-shot strategy run without resources".to_owned())
            })?;
            few_shot_examples(item, k, resources)?
        }
        _ => Vec::new(),
    };

    let members = plan_members(item, ensemble_config);
    let mut outcomes: Vec<MemberOutcome> = Vec::with_capacity(members.len());
    let mut money = Money::ZERO;
    let mut tally = std::collections::BTreeMap::new();

    for (i, member) in members.iter().enumerate() {
        let prompt = render(strategy.template, member, &examples)?;
        let salt = format!("item:{}|repeat:{repeat_index}|member:{i}", item.id);
        let request = ChatRequest {
            model_id: strategy.model_id.clone(),
            messages: prompt.messages,
            temperature: strategy.temperature,
            max_output_tokens: None,
            tag: salt.clone(),
        };
        let sim = SimTarget {
            gold_index: member.item.gold_index,
            n_options: member.item.options.len(),
            salt,
        };

        let outcome = match gateway.complete(&request, profile, Some(&sim)) {
            Ok(response) => {
                let usd = price(response.usage, &strategy.model_id, sheet)?;
                money += usd;
                let extracted = extract_answer(&response.text, member.item.options.len());
                MemberOutcome::new(
                    i,
                    item.id.clone(),
                    member.permutation.clone(),
                    extracted,
                    response.usage,
                    usd.to_usd(),
                )?
            }
            Err(e) if is_member_level(&e) => {
                log::warn!("member {i} failed for item {}: {e}", item.id);
                MemberOutcome::failed(i, item.id.clone(), member.permutation.clone())
            }
            Err(e) => return Err(e.into()),
        };

        if let Some(vote) = outcome.deshuffled {
            *tally.entry(vote).or_insert(0u32) += 1;
        }
        outcomes.push(outcome);

        if let Some(margin) = ensemble_config.early_stop_margin {
            let remaining = members.len() - (i + 1);
            if remaining > 0 && should_stop_early(&tally, remaining, margin) {
                log::debug!(
                    "early stop for item {} after {} of {} members",
                    item.id,
                    i + 1,
                    members.len()
                );
                break;
            }
        }
    }

    let decision = aggregate(&outcomes)?;
    let correct = decision.chosen == item.gold_index;
    let usage_total = decision
        .members
        .iter()
        .fold(TokenUsage::default(), |acc, m| acc + m.usage);
    let record = RunRecord {
        item_id: item.id.clone(),
        repeat_index,
        decision,
        correct,
        cost_usd: money.to_usd(),
        usage_total,
    };
    Ok((record, money))
}

/// Runs the full repeated-run protocol: `repeats` passes over the dataset
/// with per-repeat seeds `seed + repeat_index`, then mean and population
/// standard deviation over per-repeat accuracies.
pub fn run_benchmark(
    dataset: &Dataset,
    strategy: &StrategySpec,
    gateway: &Gateway,
    profile: &ModelProfile,
    sheet: &PriceSheet,
    resources: Option<&FewShotResources>,
    preprocessing_cost: Money,
) -> Result<BenchmarkReport, EvalError> {
    strategy.validate()?;
    if dataset.is_empty() {
        return Err(EvalError::InvalidStrategy(
            "cannot benchmark an empty dataset".to_owned(),
        ));
    }
    if profile.model_id != strategy.model_id {
        return Err(EvalError::InvalidStrategy(format!(
            "profile is for {} but strategy names {}",
            profile.model_id, strategy.model_id
        )));
    }
    if !sheet.contains(&strategy.model_id) {
        return Err(CostError::UnknownModel(strategy.model_id.clone()).into());
    }
    if let PromptTemplate::FewShot { .. } = strategy.template {
        let resources = resources.ok_or_else(|| {
            EvalError::InvalidStrategy("few-shot strategy run without resources".to_owned())
        })?;
        // Fail fast on coverage gaps instead of mid-run.
        for item in &dataset.items {
            if !resources.query_embeddings.contains_key(&item.id) {
                return Err(EvalError::MissingEmbedding(item.id.clone()));
            }
        }
    }

    let mut records: Vec<RunRecord> = Vec::with_capacity(dataset.len() * strategy.repeats);
    let mut per_repeat_accuracy = Vec::with_capacity(strategy.repeats);
    let mut total = Money::ZERO;

    for repeat_index in 0..strategy.repeats {
        let config = strategy
            .ensemble
            .with_seed(strategy.ensemble.seed + repeat_index as u64);
        let results = indexed_fan_out(&dataset.items, gateway.concurrency(), |_, item| {
            run_item(
                item,
                strategy,
                &config,
                repeat_index,
                gateway,
                profile,
                sheet,
                resources,
            )
        });
        let mut correct = 0usize;
        for result in results {
            let (record, money) = result?;
            if record.correct {
                correct += 1;
            }
            total += money;
            records.push(record);
        }
        per_repeat_accuracy.push(correct as f64 / dataset.len() as f64);
    }

    records.sort_by(|a, b| {
        a.item_id
            .cmp(&b.item_id)
            .then(a.repeat_index.cmp(&b.repeat_index))
    });

    Ok(BenchmarkReport {
        strategy: strategy.label.clone(),
        dataset: dataset.name.clone(),
        per_repeat_accuracy: per_repeat_accuracy.clone(),
        mean_accuracy: mean(&per_repeat_accuracy),
        std_accuracy: population_std(&per_repeat_accuracy),
        total_cost_usd: total.to_usd(),
        preprocessing_cost_usd: preprocessing_cost.to_usd(),
        records,
        config: serde_json::to_value(strategy).map_err(|e| EvalError::Parse(e.to_string()))?,
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    })
}
