//! A deterministic simulated chat model for offline testing.
//!
//! The response is a pure function of (config seed, caller salt, request
//! content): with probability `accuracy` it names the gold option letter,
//! otherwise a uniformly random wrong letter. Wrong-letter choice and the
//! reasoning token count come from the same deterministic stream, so equal
//! inputs always yield byte-identical responses.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cache::cache_key;
use super::{ChatRequest, ChatResponse, TokenUsage};

/// Response text shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStyle {
    /// The bare option letter, e.g. `B`.
    LetterOnly,
    /// A reasoning sketch ending in the answer-line format used by the
    /// prompt templates, e.g. `**Answer**: (B)`.
    TemplateAnswerLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedModelConfig {
    /// Probability of emitting the gold letter, in [0, 1].
    pub accuracy: f64,
    pub seed: u64,
    /// Inclusive (min, max) bounds for the drawn reasoning token count.
    pub reasoning_token_range: (u64, u64),
    pub style: SimStyle,
}

impl SimulatedModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(format!("accuracy {} outside [0, 1]", self.accuracy));
        }
        if self.reasoning_token_range.0 > self.reasoning_token_range.1 {
            return Err(format!(
                "reasoning token range ({}, {}) has min > max",
                self.reasoning_token_range.0, self.reasoning_token_range.1
            ));
        }
        Ok(())
    }
}

/// What the simulated model is being asked about: where the gold option
/// currently sits (in the coordinates of the rendered prompt), how many
/// options there are, and a stream-separating salt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTarget {
    pub gold_index: usize,
    pub n_options: usize,
    pub salt: String,
}

fn stream_for(request: &ChatRequest, seed: u64, salt: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(salt.as_bytes());
    hasher.update(cache_key(request).as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Rough provider-style token estimate: about four characters per token.
fn approx_tokens(text: &str) -> u64 {
    ((text.chars().count() as u64) + 3) / 4
}

/// Produces the simulated completion. Panics if `gold >= n_options` or
/// `n_options < 2` — those are caller bugs, not runtime conditions.
pub fn simulate(
    request: &ChatRequest,
    config: &SimulatedModelConfig,
    gold: usize,
    n_options: usize,
    salt: &str,
) -> ChatResponse {
    assert!(n_options >= 2, "simulate needs at least two options");
    assert!(gold < n_options, "gold index {gold} out of range {n_options}");
    config.validate().expect("invalid simulated model config");

    let mut rng = stream_for(request, config.seed, salt);
    let correct = rng.gen::<f64>() < config.accuracy;
    let chosen = if correct {
        gold
    } else {
        let offset = rng.gen_range(0..n_options - 1);
        if offset >= gold {
            offset + 1
        } else {
            offset
        }
    };
    let (lo, hi) = config.reasoning_token_range;
    let reasoning_tokens = rng.gen_range(lo..=hi);

    let letter = (b'A' + chosen as u8) as char;
    let text = match config.style {
        SimStyle::LetterOnly => letter.to_string(),
        SimStyle::TemplateAnswerLine => format!(
            "Weighing the options step by step leads to one consistent choice.\n**Answer**: ({letter})"
        ),
    };

    let input_chars: usize = request.messages.iter().map(|m| m.content.chars().count()).sum();
    ChatResponse {
        usage: TokenUsage {
            input_tokens: ((input_chars as u64) + 3) / 4,
            reasoning_tokens,
            output_tokens: approx_tokens(&text).max(1),
        },
        model_id: request.model_id.clone(),
        latency_ms: 0,
        from_cache: false,
        text,
    }
}
