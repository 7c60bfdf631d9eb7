//! Command implementations. Each returns `Ok(())` for exit 0 or a
//! [`CliError`] carrying the exit code; results go to stdout, diagnostics
//! to stderr via the caller.

use std::path::Path;

use steerbench_core::costing::{aggregate_cost, price, CostRecord, Money};
use steerbench_core::dataset::{jmle_filter, load_dataset, load_raw_dataset, save_dataset, Dataset};
use steerbench_core::embedding::{build_index, load_sidecar, save_index};
use steerbench_core::evaluation::{
    load_report, run_benchmark, write_comparison_csv, write_report, FewShotResources,
    StrategySpec, StrategySummary,
};
use steerbench_core::gateway::{
    Gateway, ReplayCache, RetryPolicy, SimStyle, SimulatedModelConfig,
};
use steerbench_core::steering::{curate_cot, save_store};

use crate::config::AppConfig;
use crate::error::{gateway_config, invalid_data, CliError};

/// Token range the simulated model draws its reasoning budget from.
const SIM_REASONING_RANGE: (u64, u64) = (64, 512);

fn usd_to_money(usd: f64) -> Result<Money, CliError> {
    if !usd.is_finite() || usd < 0.0 {
        return Err(invalid_data(format!("cost {usd} must be finite and >= 0")));
    }
    Ok(Money::from_units((usd * 1e12).round() as u128))
}

/// Builds the gateway for a command: `--simulate p` swaps in the offline
/// model; otherwise a live client is configured from the config file and
/// `STEERBENCH_API_KEY`. The replay cache only applies to live runs — a
/// cache would collapse simulated members that happen to render identical
/// prompts into one response.
fn build_gateway(
    config: &AppConfig,
    simulate: Option<f64>,
    seed: u64,
    repair_cache: bool,
) -> Result<Gateway, CliError> {
    let gateway = match simulate {
        Some(accuracy) => {
            let sim = SimulatedModelConfig {
                accuracy,
                seed,
                reasoning_token_range: SIM_REASONING_RANGE,
                style: SimStyle::TemplateAnswerLine,
            };
            sim.validate().map_err(gateway_config)?;
            if config.cache_dir.is_some() {
                log::info!("simulated run: ignoring configured cache_dir");
            }
            Gateway::simulated(sim)
        }
        None => {
            let live = Gateway::live(config.base_url.clone(), RetryPolicy::default())
                .map_err(CliError::from_gateway)?;
            match &config.cache_dir {
                Some(dir) => {
                    let cache =
                        ReplayCache::open(dir, repair_cache).map_err(CliError::from_gateway)?;
                    live.with_cache(cache)
                }
                None => live,
            }
        }
    };
    Ok(gateway.with_concurrency(config.concurrency))
}

fn load_nonempty_dataset(path: &Path) -> Result<Dataset, CliError> {
    let dataset = load_dataset(path).map_err(CliError::from_dataset)?;
    if dataset.is_empty() {
        return Err(invalid_data(format!("{}: empty dataset", path.display())));
    }
    Ok(dataset)
}

pub fn dataset_validate(path: &Path) -> Result<(), CliError> {
    let dataset = load_nonempty_dataset(path)?;
    println!("ok: {} items in dataset {}", dataset.len(), dataset.name);
    Ok(())
}

pub fn dataset_filter_jmle(input: &Path, out: &Path) -> Result<(), CliError> {
    let raw = load_raw_dataset(input).map_err(CliError::from_dataset)?;
    let name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "filtered".to_owned());
    let filtered = jmle_filter(name, &raw);
    save_dataset(&filtered, out).map_err(CliError::from_dataset)?;
    println!("retained {}/{} items", filtered.len(), raw.len());
    Ok(())
}

pub fn curate(
    config: &AppConfig,
    pool_path: &Path,
    out: &Path,
    model: &str,
    simulate: Option<f64>,
    seed: u64,
    repair_cache: bool,
) -> Result<(), CliError> {
    let pool = load_nonempty_dataset(pool_path)?;
    let profile = config
        .profile(model)
        .ok_or_else(|| gateway_config(format!("no profile configured for model {model}")))?;
    let sheet = config.price_sheet()?;
    if !sheet.contains(model) {
        return Err(gateway_config(format!("model {model} not in price sheet")));
    }
    let gateway = build_gateway(config, simulate, seed, repair_cache)?;

    let outcome = curate_cot(&pool, &gateway, profile);
    let records: Vec<CostRecord> = outcome
        .records
        .iter()
        .map(|r| {
            Ok(CostRecord {
                model_id: model.to_owned(),
                usage: r.usage,
                usd: price(r.usage, model, &sheet).map_err(CliError::from_cost)?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let cost = aggregate_cost(&records);

    save_store(&outcome.examples, out).map_err(CliError::from_steering)?;
    println!(
        "retained {}/{} items ({:.1}%)",
        outcome.examples.len(),
        pool.len(),
        100.0 * outcome.examples.len() as f64 / pool.len() as f64
    );
    println!("preprocessing cost: ${}", cost.to_usd());
    Ok(())
}

pub fn index_build(sidecar: &Path, out: &Path) -> Result<(), CliError> {
    let entries = load_sidecar(sidecar).map_err(CliError::from_embedding)?;
    let index = build_index(entries).map_err(CliError::from_embedding)?;
    save_index(&index, out).map_err(CliError::from_embedding)?;
    println!("indexed {} vectors (dim {})", index.len(), index.dim);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    config: &AppConfig,
    dataset_path: &Path,
    strategy_path: &Path,
    out: &Path,
    csv: Option<&Path>,
    simulate: Option<f64>,
    seed: u64,
    repair_cache: bool,
    preprocessing_cost: f64,
) -> Result<(), CliError> {
    let strategy = StrategySpec::from_path(strategy_path).map_err(CliError::from_eval)?;
    let dataset = load_nonempty_dataset(dataset_path)?;
    let profile = config.profile(&strategy.model_id).ok_or_else(|| {
        gateway_config(format!("no profile configured for model {}", strategy.model_id))
    })?;
    let sheet = config.price_sheet()?;
    let resources = strategy
        .few_shot
        .as_ref()
        .map(FewShotResources::load)
        .transpose()
        .map_err(CliError::from_eval)?;
    let gateway = build_gateway(config, simulate, seed, repair_cache)?;

    let report = run_benchmark(
        &dataset,
        &strategy,
        &gateway,
        profile,
        &sheet,
        resources.as_ref(),
        usd_to_money(preprocessing_cost)?,
    )
    .map_err(CliError::from_eval)?;

    write_report(&report, out).map_err(CliError::from_eval)?;
    if let Some(csv_path) = csv {
        write_comparison_csv(&[StrategySummary::from_report(&report)], csv_path)
            .map_err(CliError::from_eval)?;
    }

    println!(
        "accuracy: {:.1}% ± {:.1}% over {} repeats",
        100.0 * report.mean_accuracy,
        100.0 * report.std_accuracy,
        report.per_repeat_accuracy.len()
    );
    println!("total cost: ${}", report.total_cost_usd);
    println!("report: {}", out.display());
    Ok(())
}

pub fn pareto(
    report_paths: &[std::path::PathBuf],
    out: &Path,
    include_preprocessing: bool,
) -> Result<(), CliError> {
    let mut summaries = Vec::with_capacity(report_paths.len());
    for path in report_paths {
        let report = load_report(path)
            .map_err(|e| invalid_data(format!("malformed report {}: {e}", path.display())))?;
        let mut summary = StrategySummary::from_report(&report);
        if include_preprocessing {
            summary.total_cost_usd += report.preprocessing_cost_usd;
        }
        summaries.push(summary);
    }

    write_comparison_csv(&summaries, out).map_err(CliError::from_eval)?;

    let points: Vec<_> = summaries.iter().map(|s| s.pareto_point()).collect();
    let flags =
        steerbench_core::evaluation::on_frontier_flags(&points).map_err(CliError::from_eval)?;
    for (summary, on_frontier) in summaries.iter().zip(&flags) {
        println!(
            "{}: accuracy {:.3} at ${} — {}",
            summary.label,
            summary.mean_accuracy,
            summary.total_cost_usd,
            if *on_frontier { "on frontier" } else { "dominated" }
        );
    }
    println!("comparison: {}", out.display());
    Ok(())
}
