//! Token pricing with a three-way input/reasoning/output split, plus exact
//! cost aggregation.
//!
//! Money is an integer count of 10⁻¹² USD so that per-1M-token rates with
//! fractional dollars (e.g. 2.5) price exactly: `tokens × rate_micro` lands
//! in picodollars with no rounding, and sums are bit-exact regardless of
//! record order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::TokenUsage;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("model {0} not present in price sheet")]
    UnknownModel(String),
    #[error("bad rate for model {model_id}: {reason}")]
    BadRate { model_id: String, reason: String },
    #[error("price sheet parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An exact, non-negative amount of money in units of 10⁻¹² USD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct Money(u128);

/// Integer units per USD (10¹²).
const UNITS_PER_USD: u128 = 1_000_000_000_000;

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_units(units: u128) -> Self {
        Money(units)
    }

    pub fn units(self) -> u128 {
        self.0
    }

    /// Converts to floating USD for display and report serialization. Loses
    /// exactness only beyond f64's 53-bit mantissa (≈ $9000 at full
    /// picodollar precision), far above any realistic run total's precision
    /// needs.
    pub fn to_usd(self) -> f64 {
        self.0 as f64 / UNITS_PER_USD as f64
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0.checked_add(rhs.0).expect("money overflow"))
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        *self = *self + rhs;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

/// Per-model rates stored as integer micro-USD per 1M tokens, converted once
/// at sheet construction so that pricing is pure integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelRates {
    pub input_micro: u64,
    pub reasoning_micro: u64,
    pub output_micro: u64,
}

impl ModelRates {
    /// Builds rates from USD-per-1M-token floats, rounding to micro-USD.
    pub fn from_usd_per_million(
        model_id: &str,
        input: f64,
        reasoning: f64,
        output: f64,
    ) -> Result<Self, CostError> {
        Ok(ModelRates {
            input_micro: micro_rate(model_id, "input", input)?,
            reasoning_micro: micro_rate(model_id, "reasoning", reasoning)?,
            output_micro: micro_rate(model_id, "output", output)?,
        })
    }
}

fn micro_rate(model_id: &str, field: &str, rate: f64) -> Result<u64, CostError> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(CostError::BadRate {
            model_id: model_id.to_owned(),
            reason: format!("{field} rate {rate} must be finite and >= 0"),
        });
    }
    let micro = (rate * 1e6).round();
    if micro > u64::MAX as f64 {
        return Err(CostError::BadRate {
            model_id: model_id.to_owned(),
            reason: format!("{field} rate {rate} too large"),
        });
    }
    Ok(micro as u64)
}

/// USD-per-1M-token rates for a set of models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceSheet {
    rates: BTreeMap<String, ModelRates>,
    pub as_of: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRates {
    input: f64,
    #[serde(default)]
    reasoning: f64,
    output: f64,
}

impl PriceSheet {
    /// The built-in default sheet (rates as of Oct 2024). Reasoning tokens
    /// on o1-preview are priced identically to output tokens; the
    /// non-reasoning models store a 0 reasoning rate, which is never
    /// exercised since their usage carries no reasoning tokens.
    pub fn builtin() -> Self {
        let mut rates = BTreeMap::new();
        let mut add = |id: &str, input: f64, reasoning: f64, output: f64| {
            rates.insert(
                id.to_owned(),
                ModelRates::from_usd_per_million(id, input, reasoning, output)
                    .expect("builtin rates are valid"),
            );
        };
        add("o1-preview", 15.0, 60.0, 60.0);
        add("gpt-4o", 2.5, 0.0, 10.0);
        add("gpt-4-turbo", 10.0, 0.0, 30.0);
        PriceSheet {
            rates,
            as_of: "2024-10".to_owned(),
        }
    }

    pub fn empty(as_of: impl Into<String>) -> Self {
        PriceSheet {
            rates: BTreeMap::new(),
            as_of: as_of.into(),
        }
    }

    /// Parses a sheet file: a JSON map
    /// `{model_id: {"input": f, "reasoning": f, "output": f}}` with rates in
    /// USD per 1M tokens (`reasoning` defaults to 0 when omitted).
    pub fn from_path(path: &Path) -> Result<Self, CostError> {
        let file = File::open(path)?;
        let raw: BTreeMap<String, RawRates> = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CostError::Parse(e.to_string()))?;
        let mut sheet = PriceSheet::empty("user-supplied");
        for (model_id, r) in raw {
            let rates =
                ModelRates::from_usd_per_million(&model_id, r.input, r.reasoning, r.output)?;
            sheet.rates.insert(model_id, rates);
        }
        Ok(sheet)
    }

    /// Overlays another sheet onto this one: its models replace any
    /// same-named entries here, and its as-of date wins.
    pub fn overlay(&mut self, other: &PriceSheet) {
        for (id, rates) in &other.rates {
            self.rates.insert(id.clone(), *rates);
        }
        self.as_of = other.as_of.clone();
    }

    pub fn insert(&mut self, model_id: impl Into<String>, rates: ModelRates) {
        self.rates.insert(model_id.into(), rates);
    }

    pub fn get(&self, model_id: &str) -> Option<&ModelRates> {
        self.rates.get(model_id)
    }

    pub fn contains(&self, model_id: &str) -> bool {
        self.rates.contains_key(model_id)
    }

    pub fn model_ids(&self) -> impl Iterator<Item = &String> {
        self.rates.keys()
    }
}

/// Prices a usage record against a sheet. With rates in micro-USD per 1M
/// tokens, `tokens × rate_micro` is exactly the cost in 10⁻¹² USD, so the
/// result is exact for every sheet expressible to six decimal places.
pub fn price(usage: TokenUsage, model_id: &str, sheet: &PriceSheet) -> Result<Money, CostError> {
    let rates = sheet
        .get(model_id)
        .ok_or_else(|| CostError::UnknownModel(model_id.to_owned()))?;
    let units = usage.input_tokens as u128 * rates.input_micro as u128
        + usage.reasoning_tokens as u128 * rates.reasoning_micro as u128
        + usage.output_tokens as u128 * rates.output_micro as u128;
    Ok(Money::from_units(units))
}

/// One priced gateway call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostRecord {
    pub model_id: String,
    pub usage: TokenUsage,
    pub usd: Money,
}

/// Total cost across records; integer addition, so associative and
/// order-independent.
pub fn aggregate_cost(records: &[CostRecord]) -> Money {
    records.iter().map(|r| r.usd).sum()
}
