//! Self-generated chain-of-thought curation.
//!
//! Each pool item is sent to the model, which writes an explanation and a
//! final answer line. Only items whose extracted answer matches the gold
//! index are retained as few-shot exemplars; a wrong or unparseable answer
//! drops the item (the explanation can't be trusted), and per-item gateway
//! failures are recorded rather than aborting the batch.

use serde::{Deserialize, Serialize};

use super::fewshot::CuratedExample;
use super::template::{render, PromptTemplate};
use super::ShuffledItem;
use crate::dataset::Dataset;
use crate::evaluation::extract_answer;
use crate::gateway::{ChatRequest, Gateway, ModelProfile, SimTarget, TokenUsage};
use crate::util::indexed_fan_out;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurationStatus {
    Retained,
    WrongAnswer,
    Unparseable,
    Failed,
}

/// Per-item curation audit line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationRecord {
    pub item_id: String,
    pub status: CurationStatus,
    pub usage: TokenUsage,
}

/// Retained exemplars plus the full per-item audit trail. Records appear in
/// pool order; examples preserve that order filtered to retained items.
#[derive(Debug)]
pub struct CurationOutcome {
    pub examples: Vec<CuratedExample>,
    pub records: Vec<CurationRecord>,
}

impl CurationOutcome {
    pub fn total_usage(&self) -> TokenUsage {
        self.records
            .iter()
            .fold(TokenUsage::default(), |acc, r| acc + r.usage)
    }
}

/// Splits a model reply into explanation text and answer: the explanation
/// is everything before the final answer anchor.
fn cot_before_answer(text: &str) -> String {
    match text.rfind("**Answer**:") {
        Some(pos) => text[..pos].trim().to_owned(),
        None => text.trim().to_owned(),
    }
}

/// Generates and filters chain-of-thought exemplars for every pool item.
/// Items are prompted unshuffled in the question/choices/answer format so
/// the stored explanation's letter references stay valid.
pub fn curate_cot(pool: &Dataset, gateway: &Gateway, profile: &ModelProfile) -> CurationOutcome {
    let results = indexed_fan_out(&pool.items, gateway.concurrency(), |_, item| {
        let target = ShuffledItem::identity(item.clone());
        let prompt = render(PromptTemplate::ZeroShot, &target, &[])
            .expect("zero-shot render takes no exemplars");
        let request = ChatRequest {
            model_id: profile.model_id.clone(),
            messages: prompt.messages,
            temperature: None,
            max_output_tokens: None,
            tag: format!("curate:{}", item.id),
        };
        let sim = SimTarget {
            gold_index: item.gold_index,
            n_options: item.options.len(),
            salt: format!("curate:{}", item.id),
        };
        match gateway.complete(&request, profile, Some(&sim)) {
            Ok(response) => {
                let extracted = extract_answer(&response.text, item.options.len());
                let (status, example) = match extracted {
                    Some(idx) if idx == item.gold_index => (
                        CurationStatus::Retained,
                        Some(CuratedExample {
                            item: item.clone(),
                            cot_text: cot_before_answer(&response.text),
                            model_answer_index: idx,
                        }),
                    ),
                    Some(_) => (CurationStatus::WrongAnswer, None),
                    None => (CurationStatus::Unparseable, None),
                };
                (
                    example,
                    CurationRecord {
                        item_id: item.id.clone(),
                        status,
                        usage: response.usage,
                    },
                )
            }
            Err(e) => {
                log::warn!("curation call failed for item {}: {e}", item.id);
                (
                    None,
                    CurationRecord {
                        item_id: item.id.clone(),
                        status: CurationStatus::Failed,
                        usage: TokenUsage::default(),
                    },
                )
            }
        }
    });

    let mut examples = Vec::new();
    let mut records = Vec::with_capacity(results.len());
    for (example, record) in results {
        if let Some(e) = example {
            examples.push(e);
        }
        records.push(record);
    }
    CurationOutcome { examples, records }
}
