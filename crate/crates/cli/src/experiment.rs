//! One model × dataset experiment: load, embed, spreads, SA, bootstrap,
//! PHATE layout with legend, chart export.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use semaffinity::affinity::{run_affinity, AffinityConfig};
use semaffinity::lexicon::{load_dataset_files, unique_words};
use semaffinity::manifold::{phate_fit, PhateConfig};
use semaffinity::providers::{fetch_embeddings, FetchOptions, FetchStats, ModelSpec};
use semaffinity::viz::{format_sa_legend, render, ChartSpec, OutputFormat};
use semaffinity::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::DatasetSpec;
use crate::report::ResultRecord;
use crate::{file_stem, relative_name, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Embed,
    Affinity,
    Manifold,
    Chart,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Embed => "embed",
            Stage::Affinity => "affinity",
            Stage::Manifold => "manifold",
            Stage::Chart => "chart",
        })
    }
}

/// An experiment that stopped at `stage`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub model: String,
    pub dataset: String,
    pub stage: Stage,
    pub message: String,
}

impl fmt::Display for StageFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on {}: {} stage failed: {}",
            self.model, self.dataset, self.stage, self.message
        )
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub model: ModelSpec,
    pub dataset: DatasetSpec,
    pub affinity: AffinityConfig,
    pub phate: PhateConfig,
    /// Chart formats to write; empty disables the layout and charts.
    pub chart_formats: Vec<OutputFormat>,
    pub output_dir: PathBuf,
    pub fetch: FetchOptions,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.affinity.bootstrap_iterations < 2 {
            return Err(Error::Config(format!(
                "bootstrap iterations must be at least 2, got {}",
                self.affinity.bootstrap_iterations
            )));
        }
        if self.dataset.files.len() < 2 {
            return Err(Error::Config(format!(
                "dataset '{}' needs files for at least two languages",
                self.dataset.id
            )));
        }
        self.phate.validate()
    }

    /// File stem shared by this experiment's artifacts.
    pub fn stem(&self) -> String {
        format!(
            "{}-{}",
            file_stem(&self.model.model_id),
            file_stem(&self.dataset.id)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: Stage,
    pub seconds: f64,
}

/// Run-dependent measurements, kept apart from the deterministic results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTiming {
    pub model: String,
    pub dataset: String,
    pub stages: Vec<StageTime>,
    pub total_seconds: f64,
    pub fetch: FetchStats,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub record: Option<ResultRecord>,
    pub failure: Option<StageFailure>,
    pub timing: ExperimentTiming,
}

struct Tracker<'a> {
    spec: &'a ExperimentSpec,
    timing: ExperimentTiming,
}

impl Tracker<'_> {
    fn stage<T>(
        &mut self,
        stage: Stage,
        f: impl FnOnce() -> Result<T>,
    ) -> std::result::Result<T, StageFailure> {
        let start = Instant::now();
        let out = f();
        self.timing.stages.push(StageTime {
            stage,
            seconds: start.elapsed().as_secs_f64(),
        });
        out.map_err(|e| StageFailure {
            model: self.spec.model.model_id.clone(),
            dataset: self.spec.dataset.id.clone(),
            stage,
            message: e.to_string(),
        })
    }
}

/// Runs every stage in order. A stage error ends the experiment; nothing
/// is written for it except artifacts of stages that already finished.
pub fn run_experiment(spec: &ExperimentSpec) -> ExperimentOutcome {
    let start = Instant::now();
    let mut t = Tracker {
        spec,
        timing: ExperimentTiming {
            model: spec.model.model_id.clone(),
            dataset: spec.dataset.id.clone(),
            stages: Vec::new(),
            total_seconds: 0.0,
            fetch: FetchStats::default(),
        },
    };
    let outcome = stages(spec, &mut t);
    t.timing.total_seconds = start.elapsed().as_secs_f64();
    let (record, failure) = match outcome {
        Ok(r) => (Some(r), None),
        Err(f) => (None, Some(f)),
    };
    ExperimentOutcome {
        record,
        failure,
        timing: t.timing,
    }
}

fn stages(
    spec: &ExperimentSpec,
    t: &mut Tracker<'_>,
) -> std::result::Result<ResultRecord, StageFailure> {
    t.stage(Stage::Load, || spec.validate())?;
    let lexicon = t.stage(Stage::Load, || {
        load_dataset_files(&spec.dataset.files, &spec.dataset.id)
    })?;

    let mut fetch = FetchStats::default();
    let sets = t.stage(Stage::Embed, || {
        lexicon
            .languages
            .iter()
            .map(|lang| {
                let words = unique_words(&lexicon, lang)?;
                let (set, stats) =
                    fetch_embeddings(&spec.model, &words, lang, &spec.dataset.id, &spec.fetch)?;
                fetch.merge(&stats);
                Ok(set)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    t.timing.fetch = fetch;

    let result = t.stage(Stage::Affinity, || {
        run_affinity(&lexicon, &sets, &spec.affinity)
    })?;

    if spec.chart_formats.is_empty() {
        return Ok(ResultRecord {
            result,
            chosen_t: None,
            layout: None,
            charts: Vec::new(),
        });
    }

    let layout = t.stage(Stage::Manifold, || phate_fit(&sets, &spec.phate))?;
    let chosen_t = layout.chosen_t;
    let chart = ChartSpec::new(
        layout,
        format_sa_legend(&result),
        format!("{} on {}", spec.model.model_id, spec.dataset.id),
    );
    let (layout_path, charts) = t.stage(Stage::Chart, || write_charts(spec, &chart))?;
    Ok(ResultRecord {
        result,
        chosen_t: Some(chosen_t),
        layout: Some(layout_path),
        charts,
    })
}

/// Writes the stored layout and one chart per format. Returns paths
/// relative to the output directory.
fn write_charts(spec: &ExperimentSpec, chart: &ChartSpec) -> Result<(String, Vec<String>)> {
    let stem = spec.stem();
    let out = &spec.output_dir;
    let layout = Path::new("layouts").join(format!("{stem}.json"));
    write_atomic(&out.join(&layout), &serde_json::to_vec_pretty(chart)?)?;
    let mut charts = Vec::new();
    for &format in &spec.chart_formats {
        let rel = Path::new("charts").join(format!("{stem}-phate.{}", format.extension()));
        write_atomic(&out.join(&rel), &render(chart, format)?)?;
        charts.push(relative_name(&rel));
    }
    Ok((relative_name(&layout), charts))
}
