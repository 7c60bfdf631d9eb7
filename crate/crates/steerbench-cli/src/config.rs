//! Application configuration: gateway endpoint, model profiles, pricing,
//! cache location, and execution defaults. Loaded from a JSON file via
//! `--config`; every field has a sensible default so the flag is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steerbench_core::costing::PriceSheet;
use steerbench_core::gateway::ModelProfile;

use crate::error::{invalid_data, io_error, CliError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// Base URL of the chat-completions endpoint.
    pub base_url: String,
    /// Capability profiles, one per model the config knows about.
    pub profiles: Vec<ModelProfile>,
    /// Optional price sheet overlaying the built-in rates.
    pub price_sheet: Option<PathBuf>,
    /// Optional replay cache directory (live runs only).
    pub cache_dir: Option<PathBuf>,
    /// Maximum in-flight gateway requests.
    pub concurrency: usize,
    /// Default seed for simulated runs; `--seed` overrides it.
    pub seed: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            base_url: "https://api.openai.com".to_owned(),
            profiles: default_profiles(),
            price_sheet: None,
            cache_dir: None,
            concurrency: 8,
            seed: 0,
        }
    }
}

fn default_profiles() -> Vec<ModelProfile> {
    vec![
        ModelProfile {
            model_id: "o1-preview".to_owned(),
            supports_temperature: false,
            supports_system_role: false,
            has_reasoning_tokens: true,
        },
        ModelProfile {
            model_id: "gpt-4o".to_owned(),
            supports_temperature: true,
            supports_system_role: true,
            has_reasoning_tokens: false,
        },
        ModelProfile {
            model_id: "gpt-4-turbo".to_owned(),
            supports_temperature: true,
            supports_system_role: true,
            has_reasoning_tokens: false,
        },
    ]
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let config = match path {
            None => AppConfig::default(),
            Some(path) => {
                let raw = std::fs::read_to_string(path)
                    .map_err(|e| io_error(format!("reading config {}: {e}", path.display())))?;
                serde_json::from_str(&raw)
                    .map_err(|e| invalid_data(format!("config {}: {e}", path.display())))?
            }
        };
        if config.concurrency == 0 {
            return Err(invalid_data("config: concurrency must be >= 1"));
        }
        Ok(config)
    }

    pub fn profile(&self, model_id: &str) -> Option<&ModelProfile> {
        self.profiles.iter().find(|p| p.model_id == model_id)
    }

    /// Built-in rates overlaid with the configured sheet, if any.
    pub fn price_sheet(&self) -> Result<PriceSheet, CliError> {
        let mut sheet = PriceSheet::builtin();
        if let Some(path) = &self.price_sheet {
            let user = PriceSheet::from_path(path).map_err(CliError::from_cost)?;
            sheet.overlay(&user);
        }
        Ok(sheet)
    }
}
