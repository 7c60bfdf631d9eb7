//! Prompt template rendering.
//!
//! Template texts live in `fixtures/prompts/` and are embedded at compile
//! time; rendering substitutes the `{question}`, `{answer choices}`, and
//! `{examples}` slots. Rendered output is covered byte-for-byte by golden
//! fixtures, so any wording change is a deliberate, visible diff.

use serde::{Deserialize, Serialize};

use super::fewshot::CuratedExample;
use super::{ShuffledItem, SteeringError};
use crate::gateway::Message;

const ZERO_SHOT: &str = include_str!("../../fixtures/prompts/zero_shot.txt");
const FEW_SHOT: &str = include_str!("../../fixtures/prompts/few_shot.txt");
const QUICK_RESPONSE: &str = include_str!("../../fixtures/prompts/quick_response.txt");
const EXTENDED_REASONING: &str = include_str!("../../fixtures/prompts/extended_reasoning.txt");
const TAILORED_MEDICAL: &str = include_str!("../../fixtures/prompts/tailored_medical.txt");
const TAILORED_MMLU: &str = include_str!("../../fixtures/prompts/tailored_mmlu.txt");

/// The supported prompt shapes. `FewShot { k }` carries the number of
/// exemplars to select; the others take none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTemplate {
    ZeroShot,
    FewShot { k: usize },
    TailoredMedical,
    TailoredMmlu,
    QuickResponse,
    ExtendedReasoning,
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            PromptTemplate::FewShot { k } if *k == 0 => {
                Err("few-shot template needs k >= 1".to_owned())
            }
            _ => Ok(()),
        }
    }

    /// Stable lowercase name used in reports and file naming.
    pub fn kind_name(&self) -> &'static str {
        match self {
            PromptTemplate::ZeroShot => "zero_shot",
            PromptTemplate::FewShot { .. } => "few_shot",
            PromptTemplate::TailoredMedical => "tailored_medical",
            PromptTemplate::TailoredMmlu => "tailored_mmlu",
            PromptTemplate::QuickResponse => "quick_response",
            PromptTemplate::ExtendedReasoning => "extended_reasoning",
        }
    }
}

/// A fully rendered prompt plus the permutation that was applied to the
/// target item's options, needed later to de-shuffle the model's answer.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub messages: Vec<Message>,
    pub permutation: super::Permutation,
    pub template: PromptTemplate,
}

/// Option letter for a 0-based index (A–Z).
pub fn letter(index: usize) -> char {
    assert!(index < 26, "option index {index} beyond letter range");
    (b'A' + index as u8) as char
}

fn lettered_choices(options: &[String]) -> String {
    options
        .iter()
        .enumerate()
        .map(|(i, text)| format!("{}. {}", letter(i), text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One few-shot exemplar in the question/choices/explanation/answer shape.
/// Exemplar options stay in their original order; only the target item is
/// shuffled, since the explanation text may reference option letters.
fn exemplar_block(example: &CuratedExample) -> String {
    let mut lines = vec![
        format!("**Question**: {}", example.item.stem),
        lettered_choices(&example.item.options),
    ];
    if !example.cot_text.is_empty() {
        lines.push(example.cot_text.clone());
    }
    lines.push(format!(
        "**Answer**: ({})",
        letter(example.model_answer_index)
    ));
    lines.join("\n")
}

/// Renders a template over a (possibly shuffled) target item. Exemplars are
/// required exactly when the template is few-shot.
pub fn render(
    template: PromptTemplate,
    target: &ShuffledItem,
    examples: &[CuratedExample],
) -> Result<RenderedPrompt, SteeringError> {
    let few_shot = matches!(template, PromptTemplate::FewShot { .. });
    if few_shot && examples.is_empty() {
        return Err(SteeringError::TemplateArityMismatch(
            "few-shot template rendered without exemplars".to_owned(),
        ));
    }
    if !few_shot && !examples.is_empty() {
        return Err(SteeringError::TemplateArityMismatch(format!(
            "{} template rendered with {} exemplars",
            template.kind_name(),
            examples.len()
        )));
    }

    let choices = lettered_choices(&target.item.options);
    let text = match template {
        PromptTemplate::ZeroShot => ZERO_SHOT,
        PromptTemplate::FewShot { .. } => FEW_SHOT,
        PromptTemplate::TailoredMedical => TAILORED_MEDICAL,
        PromptTemplate::TailoredMmlu => TAILORED_MMLU,
        PromptTemplate::QuickResponse => QUICK_RESPONSE,
        PromptTemplate::ExtendedReasoning => EXTENDED_REASONING,
    };
    let mut text = text
        .replace("{question}", &target.item.stem)
        .replace("{answer choices}", &choices);
    if few_shot {
        let blocks: Vec<String> = examples.iter().map(exemplar_block).collect();
        text = text.replace("{examples}", &blocks.join("\n\n"));
    }

    Ok(RenderedPrompt {
        messages: vec![Message::user(text)],
        permutation: target.permutation.clone(),
        template,
    })
}
