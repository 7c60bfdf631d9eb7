//! Run-time steering strategies for multiple-choice LLM benchmarks.
//!
//! The crate covers the full loop of a steering experiment:
//!
//! - [`dataset`]: line-delimited JSON benchmark loading, validation, exam
//!   filtering, and pool/test splitting.
//! - [`embedding`]: exact cosine-similarity kNN over item embeddings, used
//!   for dynamic few-shot example selection.
//! - [`gateway`]: a uniform chat-completion interface over a live
//!   OpenAI-compatible API, a deterministic simulated model for offline
//!   testing, and a content-addressed replay cache.
//! - [`steering`]: prompt templates, deterministic answer-choice shuffling
//!   with invertible bookkeeping, few-shot selection, and self-generated
//!   chain-of-thought curation.
//! - [`ensemble`]: choice-shuffled ensemble planning and majority-vote
//!   aggregation in original option coordinates.
//! - [`costing`]: exact integer cost accounting over the three-way
//!   input/reasoning/output token split.
//! - [`evaluation`]: benchmark execution with the repeated-run protocol,
//!   answer extraction, report emission, and Pareto frontier analysis.
//!
//! Everything is deterministic given a seed, so whole experiment runs can be
//! replayed bit-for-bit without touching a provider API.

pub mod costing;
pub mod dataset;
pub mod embedding;
pub mod ensemble;
pub mod evaluation;
pub mod gateway;
pub mod steering;

mod util;

pub use costing::{CostRecord, Money, PriceSheet};
pub use dataset::{Dataset, McqItem, RawExamItem};
pub use embedding::{EmbeddingVector, KnnIndex};
pub use ensemble::{EnsembleConfig, EnsembleDecision, MemberOutcome};
pub use evaluation::{BenchmarkReport, ParetoPoint, RunRecord, StrategySpec};
pub use gateway::{ChatRequest, ChatResponse, Gateway, Message, ModelProfile, Role, TokenUsage};
pub use steering::{CuratedExample, Permutation, PromptTemplate, RenderedPrompt, ShuffledItem};
