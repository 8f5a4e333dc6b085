//! Run report, CSV/JSON export and summary charts.

use std::path::{Path, PathBuf};

use semaffinity::affinity::{classify_tier, AffinityResult, Tier};
use semaffinity::diagnostics::{stage2_diagnose, DiagnosticReport};
use semaffinity::viz::{render_heatmap_svg, render_tier_chart_svg, Heatmap, TierBar};
use semaffinity::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::experiment::{ExperimentTiming, StageFailure};
use crate::{file_stem, write_atomic};

pub const CSV_COLUMNS: [&str; 14] = [
    "model",
    "dataset",
    "language_pair",
    "sa_cosine",
    "sem_cosine",
    "sa_euclidean",
    "sem_euclidean",
    "intra_cosine",
    "inter_cosine",
    "intra_euclidean",
    "inter_euclidean",
    "tier",
    "collapse_flag",
    "chosen_t",
];

/// One finished experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub result: AffinityResult,
    /// Diffusion time of the layout; absent when charts are disabled.
    pub chosen_t: Option<usize>,
    /// Stored chart spec, relative to the output directory.
    pub layout: Option<String>,
    /// Rendered charts, relative to the output directory.
    pub charts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub datasets: Vec<String>,
    /// Plain mean of per-dataset `sa_cosine`.
    pub avg_sa_cosine: f64,
    /// Mean weighted by concept count; absent when no counts are known.
    pub weighted_avg_sa_cosine: Option<f64>,
    pub tier: Tier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeInfo {
    pub parallelism: usize,
    pub total_seconds: f64,
    pub experiments: Vec<ExperimentTiming>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_name: String,
    /// In configuration order: models outer, datasets inner.
    pub results: Vec<ResultRecord>,
    pub failures: Vec<StageFailure>,
    /// Sorted by `avg_sa_cosine`, highest first.
    pub models: Vec<ModelSummary>,
    pub diagnostics: Vec<DiagnosticReport>,
    /// Heatmap and tier chart, relative to the output directory.
    pub summary_charts: Vec<String>,
    /// Timings and fetch counters. Everything else is deterministic.
    pub runtime: Option<RuntimeInfo>,
}

pub fn summarize(results: &[ResultRecord]) -> Vec<ModelSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in results {
        if !order.contains(&r.result.model_id.as_str()) {
            order.push(&r.result.model_id);
        }
    }
    let mut out: Vec<ModelSummary> = order
        .into_iter()
        .map(|model| {
            let rows: Vec<&AffinityResult> = results
                .iter()
                .map(|r| &r.result)
                .filter(|r| r.model_id == model)
                .collect();
            let avg = rows.iter().map(|r| r.sa_cosine).sum::<f64>() / rows.len() as f64;
            let weight: usize = rows.iter().map(|r| r.concept_count).sum();
            let weighted = (weight > 0).then(|| {
                rows.iter()
                    .map(|r| r.sa_cosine * r.concept_count as f64)
                    .sum::<f64>()
                    / weight as f64
            });
            ModelSummary {
                model_id: model.to_owned(),
                datasets: rows.iter().map(|r| r.dataset_id.clone()).collect(),
                avg_sa_cosine: avg,
                weighted_avg_sa_cosine: weighted,
                tier: classify_tier(avg),
            }
        })
        .collect();
    out.sort_by(|a, b| b.avg_sa_cosine.total_cmp(&a.avg_sa_cosine));
    out
}

/// Per-model diagnosis over that model's datasets in run order.
pub fn diagnose(results: &[ResultRecord]) -> Result<Vec<DiagnosticReport>> {
    let mut models: Vec<&str> = Vec::new();
    for r in results {
        if !models.contains(&r.result.model_id.as_str()) {
            models.push(&r.result.model_id);
        }
    }
    models
        .into_iter()
        .map(|model| {
            let rows: Vec<&ResultRecord> = results
                .iter()
                .filter(|r| r.result.model_id == model)
                .collect();
            let owned: Vec<AffinityResult> = rows.iter().map(|r| r.result.clone()).collect();
            let mut report = stage2_diagnose(&owned)?;
            let charts: Vec<&String> = rows.iter().filter_map(|r| r.charts.first()).collect();
            report.attach_visual_check(&charts);
            Ok(report)
        })
        .collect()
}

impl RunReport {
    pub fn build(
        run_name: &str,
        results: Vec<ResultRecord>,
        failures: Vec<StageFailure>,
        summary_charts: bool,
        runtime: Option<RuntimeInfo>,
    ) -> Result<Self> {
        let models = summarize(&results);
        let diagnostics = diagnose(&results)?;
        let summary_charts = if summary_charts && !results.is_empty() {
            let stem = file_stem(run_name);
            vec![format!("{stem}-heatmap.svg"), format!("{stem}-tiers.svg")]
        } else {
            Vec::new()
        };
        Ok(RunReport {
            run_name: run_name.to_owned(),
            results,
            failures,
            models,
            diagnostics,
            summary_charts,
            runtime,
        })
    }

    pub fn avg_sa(&self, model: &str) -> Option<f64> {
        self.models
            .iter()
            .find(|m| m.model_id == model)
            .map(|m| m.avg_sa_cosine)
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", file_stem(&self.run_name)))
    }

    pub fn json_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.json", file_stem(&self.run_name)))
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Render(format!("csv: {e}"));
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
        for rec in &self.results {
            let r = &rec.result;
            w.write_record([
                r.model_id.clone(),
                r.dataset_id.clone(),
                r.language_pair_label(),
                r.sa_cosine.to_string(),
                r.sem_cosine.to_string(),
                r.sa_euclidean.to_string(),
                r.sem_euclidean.to_string(),
                r.cosine.intra.to_string(),
                r.cosine.inter.to_string(),
                r.euclidean.intra.to_string(),
                r.euclidean.inter.to_string(),
                r.tier.as_str().to_owned(),
                r.any_collapse().to_string(),
                rec.chosen_t.map(|t| t.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::Render(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }

    fn heatmap(&self) -> Heatmap {
        let mut datasets: Vec<String> = Vec::new();
        for r in &self.results {
            if !datasets.contains(&r.result.dataset_id) {
                datasets.push(r.result.dataset_id.clone());
            }
        }
        let models: Vec<String> = self.models.iter().map(|m| m.model_id.clone()).collect();
        let values = models
            .iter()
            .map(|m| {
                datasets
                    .iter()
                    .map(|d| {
                        self.results
                            .iter()
                            .find(|r| &r.result.model_id == m && &r.result.dataset_id == d)
                            .map(|r| r.result.sa_cosine)
                    })
                    .collect()
            })
            .collect();
        Heatmap {
            models,
            datasets,
            values,
        }
    }

    fn tier_bars(&self) -> Vec<TierBar> {
        self.models
            .iter()
            .map(|m| TierBar {
                model: m.model_id.clone(),
                avg_sa: m.avg_sa_cosine,
                tier: m.tier,
            })
            .collect()
    }
}

/// Files written by [`export_results`].
#[derive(Clone, Debug, PartialEq)]
pub struct Exported {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub summary_charts: Vec<PathBuf>,
}

/// Writes `<run>.csv`, `<run>.json` and, if the report lists them, the
/// heatmap and tier charts. Every file is replaced atomically.
pub fn export_results(report: &RunReport, dir: &Path) -> Result<Exported> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::Config(format!(
            "output directory {} is not writable: {e}",
            dir.display()
        ))
    })?;
    let csv = report.csv_path(dir);
    let json = report.json_path(dir);
    write_atomic(&csv, &report.to_csv()?)?;
    write_atomic(&json, &report.to_json()?)?;
    let mut summary_charts = Vec::new();
    if let [heat, tiers] = report.summary_charts.as_slice() {
        let heat = dir.join(heat);
        write_atomic(&heat, render_heatmap_svg(&report.heatmap())?.as_bytes())?;
        let tiers = dir.join(tiers);
        write_atomic(
            &tiers,
            render_tier_chart_svg(&report.tier_bars())?.as_bytes(),
        )?;
        summary_charts = vec![heat, tiers];
    }
    Ok(Exported {
        csv,
        json,
        summary_charts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use semaffinity::lexicon::Language;

    fn record(model: &str, dataset: &str, cos: (f64, f64)) -> ResultRecord {
        ResultRecord {
            result: AffinityResult::from_spreads(
                model,
                dataset,
                vec![Language::new("chn"), Language::new("enu")],
                cos,
                (10.0, 9.0),
            )
            .unwrap(),
            chosen_t: None,
            layout: None,
            charts: Vec::new(),
        }
    }

    #[test]
    fn models_sorted_by_average() {
        let rows = vec![
            record("low", "a", (0.4, 0.6)),
            record("high", "a", (0.7, 0.3)),
            record("high", "b", (0.6, 0.4)),
        ];
        let s = summarize(&rows);
        assert_eq!(s[0].model_id, "high");
        assert!((s[0].avg_sa_cosine - 0.65).abs() < 1e-12);
        assert_eq!(s[0].tier, Tier::Tier1);
        assert_eq!(s[1].tier, Tier::Tier3);
        assert_eq!(s[0].weighted_avg_sa_cosine, None);
    }

    #[test]
    fn csv_has_fixed_header() {
        let report = RunReport::build(
            "r",
            vec![record("m", "d", (0.692, 0.308))],
            vec![],
            false,
            None,
        )
        .unwrap();
        let text = String::from_utf8(report.to_csv().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert!(lines[1].contains(",tier1,false,"));
        assert!(lines[1].ends_with(','));
    }
}
