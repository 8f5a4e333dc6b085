//! Model × dataset matrix on a bounded worker pool.

use std::time::Instant;

use rayon::prelude::*;
use semaffinity::affinity::AffinityConfig;
use semaffinity::providers::{EmbeddingCache, FetchOptions};
use semaffinity::{Error, Result};

use crate::config::RunConfig;
use crate::experiment::{run_experiment, ExperimentOutcome, ExperimentSpec};
use crate::report::{RunReport, RuntimeInfo};

/// Expands the configuration into experiments, models outer.
pub fn experiment_specs(config: &RunConfig) -> Result<Vec<ExperimentSpec>> {
    config.validate()?;
    let run = &config.run;
    let fetch = FetchOptions {
        batch_size: run.batch_size,
        parallelism: run.fetch_parallelism,
        cache: Some(EmbeddingCache::resolve(run.cache_dir.as_deref())),
        ..FetchOptions::default()
    };
    let datasets = config.dataset_specs()?;
    let chart_formats = if run.charts {
        run.chart_formats.clone()
    } else {
        Vec::new()
    };
    let mut specs = Vec::new();
    for model in &config.models {
        for dataset in &datasets {
            specs.push(ExperimentSpec {
                model: model.clone(),
                dataset: dataset.clone(),
                affinity: AffinityConfig {
                    bootstrap_iterations: run.bootstrap_iterations,
                    seed: run.seed,
                },
                phate: config.phate.clone(),
                chart_formats: chart_formats.clone(),
                output_dir: run.output_dir.clone(),
                fetch: fetch.clone(),
            });
        }
    }
    Ok(specs)
}

/// Runs experiments on `parallelism` workers. Outcomes come back in input
/// order regardless of completion order.
pub fn run_all(specs: &[ExperimentSpec], parallelism: usize) -> Result<Vec<ExperimentOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| specs.par_iter().map(run_experiment).collect()))
}

/// Runs every configured experiment and aggregates the report. Failed
/// experiments are recorded; the others are unaffected.
pub fn run_matrix(config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let specs = experiment_specs(config)?;
    let parallelism = config.parallelism();
    let outcomes = run_all(&specs, parallelism)?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    for o in outcomes {
        results.extend(o.record);
        failures.extend(o.failure);
        timings.push(o.timing);
    }
    RunReport::build(
        &config.run.name,
        results,
        failures,
        config.run.charts,
        Some(RuntimeInfo {
            parallelism,
            total_seconds: start.elapsed().as_secs_f64(),
            experiments: timings,
        }),
    )
}
