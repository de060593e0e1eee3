//! Monte Carlo protocol: phantom, speckle, filters, metrics.
//!
//! One task per (looks, replicate) pair. Every filter sees the same
//! corrupted image within a task, so methods are compared on identical
//! speckle, and the replicate seed is `base_seed + replicate` so a run
//! is reproducible from its manifest alone.

use anyhow::{Context, Result};
use despeck_core::filter::{filter_image, FilterConfig, FilterMethod};
use despeck_core::metrics::{evaluate, MetricsRecord};
use despeck_core::phantom::{corrupt, generate_phantom};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::summary::sort_records;

#[derive(Debug)]
pub struct ProtocolOutcome {
    /// One record per (looks, filter, replicate), sorted.
    pub records: Vec<MetricsRecord>,
    /// Human-readable descriptions of per-task failures. Failed tasks
    /// still emit records (NaN metrics, `failed:` flag).
    pub failures: Vec<String>,
}

fn failure_record(replicate: u32, looks: f64, filter: &str, message: &str) -> MetricsRecord {
    MetricsRecord {
        replicate,
        looks,
        filter: filter.to_string(),
        nel: f64::NAN,
        line_pres: f64::NAN,
        edge_grad: f64::NAN,
        edge_var: f64::NAN,
        q_index: f64::NAN,
        beta_rho: f64::NAN,
        flags: vec![format!("failed: {message}")],
    }
}

fn filter_config(method: FilterMethod, looks: f64, significance: f64) -> FilterConfig<f64> {
    match method {
        FilterMethod::Kl => FilterConfig::kl(significance),
        FilterMethod::Lee => FilterConfig::lee(looks),
        FilterMethod::Mean => FilterConfig::mean(),
    }
}

pub fn run_protocol(config: &RunConfig) -> Result<ProtocolOutcome> {
    config.validate()?;
    let (truth, labels) = generate_phantom(&config.phantom).context("generating phantom")?;
    let enl_patch = config.phantom.layout().context("phantom layout")?.enl_patch;

    let tasks: Vec<(f64, u32)> = config
        .looks_list
        .iter()
        .flat_map(|&looks| (0..config.replicates).map(move |rep| (looks, rep)))
        .collect();

    let per_task: Vec<(Vec<MetricsRecord>, Vec<String>)> = tasks
        .par_iter()
        .map(|&(looks, replicate)| {
            let mut records = Vec::with_capacity(config.filters.len());
            let mut failures = Vec::new();
            let seed = config.base_seed + u64::from(replicate);
            let corrupted = match corrupt(&truth, looks, seed) {
                Ok(image) => image,
                Err(e) => {
                    let message = format!("speckle corruption: {e}");
                    for method in &config.filters {
                        let name = method.to_string();
                        records.push(failure_record(replicate, looks, &name, &message));
                        failures.push(format!(
                            "replicate {replicate} looks {looks} filter {name}: {message}"
                        ));
                    }
                    return (records, failures);
                }
            };
            for method in &config.filters {
                let name = method.to_string();
                let filter = filter_config(*method, looks, config.significance);
                match filter_image(&corrupted, &filter) {
                    Ok(filtered) => records.push(evaluate(
                        &filtered, &truth, &labels, enl_patch, replicate, looks, &name,
                    )),
                    Err(e) => {
                        records.push(failure_record(replicate, looks, &name, &e.to_string()));
                        failures.push(format!(
                            "replicate {replicate} looks {looks} filter {name}: {e}"
                        ));
                    }
                }
            }
            (records, failures)
        })
        .collect();

    let mut records = Vec::with_capacity(tasks.len() * config.filters.len());
    let mut failures = Vec::new();
    for (task_records, task_failures) in per_task {
        records.extend(task_records);
        failures.extend(task_failures);
    }
    sort_records(&mut records);
    Ok(ProtocolOutcome { records, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summary::records_to_csv;

    fn small_config() -> RunConfig {
        let mut config = RunConfig::default();
        config.replicates = 2;
        config.looks_list = vec![1.0, 4.0];
        config.filters = vec![FilterMethod::Kl, FilterMethod::Lee];
        config.phantom.side = 64;
        config
    }

    #[test]
    fn record_cardinality_is_looks_by_filter_by_replicate() {
        let outcome = run_protocol(&small_config()).unwrap();
        assert_eq!(outcome.records.len(), 2 * 2 * 2);
        assert!(outcome.failures.is_empty());
        // Sorted by (looks, filter, replicate).
        let keys: Vec<(f64, &str, u32)> = outcome
            .records
            .iter()
            .map(|r| (r.looks, r.filter.as_str(), r.replicate))
            .collect();
        assert_eq!(
            keys,
            vec![
                (1.0, "kl", 0),
                (1.0, "kl", 1),
                (1.0, "lee", 0),
                (1.0, "lee", 1),
                (4.0, "kl", 0),
                (4.0, "kl", 1),
                (4.0, "lee", 0),
                (4.0, "lee", 1),
            ]
        );
    }

    #[test]
    fn reruns_are_identical() {
        let config = small_config();
        let a = run_protocol(&config).unwrap();
        let b = run_protocol(&config).unwrap();
        assert_eq!(
            records_to_csv(&a.records).unwrap(),
            records_to_csv(&b.records).unwrap()
        );
    }

    #[test]
    fn records_look_like_filter_output() {
        let mut config = small_config();
        config.replicates = 1;
        config.looks_list = vec![4.0];
        let outcome = run_protocol(&config).unwrap();
        for r in &outcome.records {
            assert!(r.nel.is_finite() && r.nel > 1.0, "{r:?}");
            assert!(r.q_index > 0.0 && r.q_index <= 1.0, "{r:?}");
            assert!(r.flags.is_empty(), "{r:?}");
        }
    }
}
