//! Choice-shuffled ensembling: plan members, tally de-shuffled votes, and
//! optionally stop early once the outcome is mathematically fixed.
//!
//! Votes are always aggregated in original option coordinates. Abstentions
//! (members whose output yielded no parseable answer) are excluded from the
//! tally; if every member abstains the decision falls back to option 0 and
//! is flagged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::McqItem;
use crate::gateway::TokenUsage;
use crate::steering::{shuffle_choices, unshuffle_answer, Permutation, ShuffledItem};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("cannot aggregate an empty outcome list")]
    EmptyOutcomeList,
    #[error("outcomes mix items {0} and {1}")]
    MixedItem(String, String),
    #[error("invalid ensemble config: {0}")]
    InvalidConfig(String),
    #[error("outcome {member_index} breaks the de-shuffle invariant: {reason}")]
    BadOutcome { member_index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_members: usize,
    pub shuffle: bool,
    pub seed: u64,
    /// Consensus margin for early stopping; absent disables it (default).
    pub early_stop_margin: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_members: 5,
            shuffle: true,
            seed: 0,
            early_stop_margin: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.n_members == 0 {
            return Err(EnsembleError::InvalidConfig(
                "n_members must be >= 1".to_owned(),
            ));
        }
        if let Some(margin) = self.early_stop_margin {
            if margin == 0 || margin > self.n_members {
                return Err(EnsembleError::InvalidConfig(format!(
                    "early_stop_margin {margin} must be in 1..=n_members ({})",
                    self.n_members
                )));
            }
        }
        Ok(())
    }

    /// The same config re-seeded (used by the repeated-run protocol).
    pub fn with_seed(&self, seed: u64) -> Self {
        EnsembleConfig { seed, ..*self }
    }
}

/// One executed ensemble member. `extracted` is in the member's shuffled
/// coordinates, `deshuffled` in original coordinates; both are `None` on
/// abstention. `failed` marks a gateway failure (usage is zero then).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberOutcome {
    pub member_index: usize,
    pub item_id: String,
    pub permutation: Permutation,
    pub extracted: Option<usize>,
    pub deshuffled: Option<usize>,
    pub usage: TokenUsage,
    pub cost_usd: f64,
    pub failed: bool,
}

impl MemberOutcome {
    /// Builds an outcome, deriving `deshuffled` from the permutation so the
    /// coordinate invariant holds by construction. An out-of-range
    /// extraction is treated as an abstention by the caller, so `extracted`
    /// here must already be in range.
    pub fn new(
        member_index: usize,
        item_id: impl Into<String>,
        permutation: Permutation,
        extracted: Option<usize>,
        usage: TokenUsage,
        cost_usd: f64,
    ) -> Result<Self, EnsembleError> {
        let deshuffled = match extracted {
            Some(idx) => Some(unshuffle_answer(idx, &permutation).map_err(|e| {
                EnsembleError::BadOutcome {
                    member_index,
                    reason: e.to_string(),
                }
            })?),
            None => None,
        };
        Ok(MemberOutcome {
            member_index,
            item_id: item_id.into(),
            permutation,
            extracted,
            deshuffled,
            usage,
            cost_usd,
            failed: false,
        })
    }

    /// An abstaining outcome for a member whose gateway call failed.
    pub fn failed(member_index: usize, item_id: impl Into<String>, permutation: Permutation) -> Self {
        MemberOutcome {
            member_index,
            item_id: item_id.into(),
            permutation,
            extracted: None,
            deshuffled: None,
            usage: TokenUsage::default(),
            cost_usd: 0.0,
            failed: true,
        }
    }
}

/// The aggregated verdict for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDecision {
    pub chosen: usize,
    pub vote_counts: BTreeMap<usize, u32>,
    pub abstentions: usize,
    /// True when every member abstained and `chosen` fell back to option 0.
    pub abstain_fallback: bool,
    pub members: Vec<MemberOutcome>,
}

/// Plans the ensemble members for one item: shuffled copies with salts
/// `member:0..n`, or identity copies when shuffling is off. Deterministic
/// for a fixed seed.
pub fn plan_members(item: &McqItem, config: &EnsembleConfig) -> Vec<ShuffledItem> {
    (0..config.n_members)
        .map(|i| {
            if config.shuffle {
                let (shuffled, permutation) =
                    shuffle_choices(item, config.seed, &format!("member:{i}"));
                ShuffledItem {
                    item: shuffled,
                    permutation,
                }
            } else {
                ShuffledItem::identity(item.clone())
            }
        })
        .collect()
}

/// Argmax under the tie rule: highest count wins, ties go to the lowest
/// original option index. Iterating a BTreeMap ascending and replacing only
/// on strictly greater count implements exactly that.
fn leader(tally: &BTreeMap<usize, u32>) -> Option<(usize, u32)> {
    let mut best: Option<(usize, u32)> = None;
    for (&index, &count) in tally {
        match best {
            Some((_, best_count)) if count <= best_count => {}
            _ => best = Some((index, count)),
        }
    }
    best
}

/// Tallies de-shuffled votes into a decision.
pub fn aggregate(outcomes: &[MemberOutcome]) -> Result<EnsembleDecision, EnsembleError> {
    if outcomes.is_empty() {
        return Err(EnsembleError::EmptyOutcomeList);
    }
    let item_id = &outcomes[0].item_id;
    for o in outcomes {
        if &o.item_id != item_id {
            return Err(EnsembleError::MixedItem(item_id.clone(), o.item_id.clone()));
        }
        if let (Some(e), Some(d)) = (o.extracted, o.deshuffled) {
            let expect = unshuffle_answer(e, &o.permutation).map_err(|err| {
                EnsembleError::BadOutcome {
                    member_index: o.member_index,
                    reason: err.to_string(),
                }
            })?;
            if expect != d {
                return Err(EnsembleError::BadOutcome {
                    member_index: o.member_index,
                    reason: format!("deshuffled {d} but permutation maps {e} to {expect}"),
                });
            }
        }
    }

    // Completion order must not matter; normalize by member index.
    let mut members = outcomes.to_vec();
    members.sort_by_key(|o| o.member_index);

    let mut vote_counts: BTreeMap<usize, u32> = BTreeMap::new();
    let mut abstentions = 0usize;
    for o in &members {
        match o.deshuffled {
            Some(idx) => *vote_counts.entry(idx).or_insert(0) += 1,
            None => abstentions += 1,
        }
    }

    let (chosen, abstain_fallback) = match leader(&vote_counts) {
        Some((index, _)) => (index, false),
        None => (0, true),
    };

    Ok(EnsembleDecision {
        chosen,
        vote_counts,
        abstentions,
        abstain_fallback,
        members,
    })
}

/// Decides whether the remaining members can still change the outcome.
/// True when nothing is left to sample, or when the leader's margin over
/// the runner-up strictly exceeds `remaining + margin - 1` — i.e. the final
/// argmax (under the lowest-index tie rule) is already fixed even if every
/// remaining vote goes to the runner-up.
pub fn should_stop_early(
    tally_so_far: &BTreeMap<usize, u32>,
    remaining: usize,
    margin: usize,
) -> bool {
    if remaining == 0 {
        return true;
    }
    let Some((leader_index, leader_count)) = leader(tally_so_far) else {
        return false;
    };
    let runner_up = tally_so_far
        .iter()
        .filter(|(&i, _)| i != leader_index)
        .map(|(_, &c)| c)
        .max()
        .unwrap_or(0);
    let lead = (leader_count - runner_up) as usize;
    lead > remaining + margin - 1
}
