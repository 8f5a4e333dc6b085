//! Two-stage model diagnosis.
//!
//! Stage 1 reads the cosine SA against the tier thresholds. Models that do
//! not clear tier 1 go to stage 2, which inspects absolute Euclidean spread
//! magnitudes, the variation of the Euclidean inter spread across datasets,
//! and the cosine inter/intra ratio.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::affinity::{AffinityResult, TIER1_THRESHOLD, TIER2_THRESHOLD};
use crate::error::{Error, Result};

/// Euclidean spreads below this are treated as a near-collapsed space.
pub const COLLAPSE_MAGNITUDE: f64 = 1.0;
/// Euclidean spreads above this indicate poor normalization.
pub const HIGH_MAGNITUDE: f64 = 50.0;
/// Cross-dataset max/min ratio of Euclidean inter above which quality is
/// inconsistent.
pub const INCONSISTENT_VARIANCE: f64 = 3.0;
/// Cross-dataset max/min ratio below which embeddings are stable.
pub const STABLE_VARIANCE: f64 = 2.0;
/// Cosine inter/intra below this means translations co-locate.
pub const CO_LOCATION_RATIO: f64 = 0.5;
/// Cosine inter/intra above this means languages actively separate.
pub const SEPARATION_RATIO: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1Decision {
    Deploy,
    TaskDependent,
    Investigate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeFinding {
    Healthy,
    PoorNormalization,
    NearCollapse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceFinding {
    Stable,
    Inconsistent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationFinding {
    CoLocation,
    Partial,
    ActiveSeparation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub model_id: String,
    /// Datasets the report covers, in input order. The first is primary.
    pub datasets: Vec<String>,
    pub mean_sa_cosine: f64,
    pub stage1_decision: Stage1Decision,
    pub magnitude_finding: Option<MagnitudeFinding>,
    pub variance_finding: Option<VarianceFinding>,
    pub separation_finding: Option<SeparationFinding>,
    /// Cosine inter/intra of the primary dataset.
    pub inter_intra_ratio_cosine: f64,
    /// Euclidean (inter, intra) of the primary dataset.
    pub euclidean_primary: (f64, f64),
    /// max/min of the Euclidean inter spread across datasets.
    pub euclidean_inter_variation: f64,
    /// Stage-2 findings, one line per triggered rule.
    pub narrative: Vec<String>,
    pub recommendation: String,
}

impl DiagnosticReport {
    pub fn has_stage2(&self) -> bool {
        self.stage1_decision != Stage1Decision::Deploy
    }

    /// Points the stage-2 narrative at rendered charts for visual checking.
    pub fn attach_visual_check<P: AsRef<Path>>(&mut self, charts: &[P]) {
        if !self.has_stage2() {
            return;
        }
        for chart in charts {
            self.narrative.push(format!(
                "visual check: inspect {} for language clustering (separate regions) versus interleaving",
                chart.as_ref().display()
            ));
        }
    }
}

pub fn stage1_decision(sa_cosine: f64) -> Stage1Decision {
    if sa_cosine >= TIER1_THRESHOLD {
        Stage1Decision::Deploy
    } else if sa_cosine >= TIER2_THRESHOLD {
        Stage1Decision::TaskDependent
    } else {
        Stage1Decision::Investigate
    }
}

pub fn stage1_assess(result: &AffinityResult) -> Stage1Decision {
    stage1_decision(result.sa_cosine)
}

fn magnitude_of(value: f64) -> MagnitudeFinding {
    if value < COLLAPSE_MAGNITUDE {
        MagnitudeFinding::NearCollapse
    } else if value > HIGH_MAGNITUDE {
        MagnitudeFinding::PoorNormalization
    } else {
        MagnitudeFinding::Healthy
    }
}

/// Combined magnitude finding for an (inter, intra) pair; the more severe
/// of the two wins.
pub fn magnitude_finding(inter: f64, intra: f64) -> MagnitudeFinding {
    magnitude_of(inter).max(magnitude_of(intra))
}

pub fn separation_finding(ratio: f64) -> SeparationFinding {
    if ratio > SEPARATION_RATIO {
        SeparationFinding::ActiveSeparation
    } else if ratio < CO_LOCATION_RATIO {
        SeparationFinding::CoLocation
    } else {
        SeparationFinding::Partial
    }
}

/// max/min of the values; infinite when the minimum is zero and the
/// maximum is not.
pub fn variation_ratio(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn variance_finding(ratio: f64) -> VarianceFinding {
    if ratio > INCONSISTENT_VARIANCE {
        VarianceFinding::Inconsistent
    } else {
        VarianceFinding::Stable
    }
}

fn recommendation(decision: Stage1Decision) -> &'static str {
    match decision {
        Stage1Decision::Deploy => "deploy: strong cross-lingual alignment",
        Stage1Decision::TaskDependent => {
            "task-dependent: verify alignment on the deployment vocabulary before cross-lingual use"
        }
        Stage1Decision::Investigate => {
            "avoid for cross-lingual applications; prefer models trained with explicit translation-pair supervision"
        }
    }
}

/// Diagnoses one model from its results across datasets. The first result
/// is the primary dataset for magnitude and separation checks.
pub fn stage2_diagnose(results: &[AffinityResult]) -> Result<DiagnosticReport> {
    let primary = results
        .first()
        .ok_or_else(|| Error::Config("diagnosis needs at least one result".into()))?;
    if let Some(other) = results.iter().find(|r| r.model_id != primary.model_id) {
        return Err(Error::Config(format!(
            "diagnosis mixes models '{}' and '{}'",
            primary.model_id, other.model_id
        )));
    }

    let mean_sa_cosine = results.iter().map(|r| r.sa_cosine).sum::<f64>() / results.len() as f64;
    let decision = stage1_decision(mean_sa_cosine);
    let ratio = primary.cosine.inter / primary.cosine.intra;
    let eu = (primary.euclidean.inter, primary.euclidean.intra);
    let inters: Vec<f64> = results.iter().map(|r| r.euclidean.inter).collect();
    let variation = variation_ratio(&inters);

    let mut report = DiagnosticReport {
        model_id: primary.model_id.clone(),
        datasets: results.iter().map(|r| r.dataset_id.clone()).collect(),
        mean_sa_cosine,
        stage1_decision: decision,
        magnitude_finding: None,
        variance_finding: None,
        separation_finding: None,
        inter_intra_ratio_cosine: ratio,
        euclidean_primary: eu,
        euclidean_inter_variation: variation,
        narrative: Vec::new(),
        recommendation: recommendation(decision).to_owned(),
    };
    if decision == Stage1Decision::Deploy {
        return Ok(report);
    }

    let magnitude = magnitude_finding(eu.0, eu.1);
    report.narrative.push(match magnitude {
        MagnitudeFinding::NearCollapse => format!(
            "magnitude: euclidean inter {:.3}, intra {:.3} on {} (< {COLLAPSE_MAGNITUDE}): near-collapsed embedding space",
            eu.0, eu.1, primary.dataset_id
        ),
        MagnitudeFinding::PoorNormalization => format!(
            "magnitude: euclidean inter {:.3}, intra {:.3} on {} (> {HIGH_MAGNITUDE}): poor embedding normalization",
            eu.0, eu.1, primary.dataset_id
        ),
        MagnitudeFinding::Healthy => format!(
            "magnitude: euclidean inter {:.3}, intra {:.3} on {}: healthy",
            eu.0, eu.1, primary.dataset_id
        ),
    });

    let variance = variance_finding(variation);
    let listed = results
        .iter()
        .map(|r| format!("{} {:.3}", r.dataset_id, r.euclidean.inter))
        .collect::<Vec<_>>()
        .join(", ");
    report.narrative.push(if results.len() < 2 {
        format!("variance: single dataset ({listed}); cross-dataset check not applicable")
    } else {
        match variance {
            VarianceFinding::Inconsistent => format!(
                "variance: euclidean inter {listed} varies {variation:.2}x (> {INCONSISTENT_VARIANCE}x): inconsistent embedding quality"
            ),
            VarianceFinding::Stable if variation >= STABLE_VARIANCE => format!(
                "variance: euclidean inter {listed} varies {variation:.2}x (between {STABLE_VARIANCE}x and {INCONSISTENT_VARIANCE}x): treated as stable, borderline"
            ),
            VarianceFinding::Stable => format!(
                "variance: euclidean inter {listed} varies {variation:.2}x (< {STABLE_VARIANCE}x): stable"
            ),
        }
    });

    let separation = separation_finding(ratio);
    report.narrative.push(match separation {
        SeparationFinding::ActiveSeparation => format!(
            "separation: cosine inter/intra {ratio:.2} (> {SEPARATION_RATIO}): translations sit farther apart than random same-language pairs, active language separation"
        ),
        SeparationFinding::CoLocation => format!(
            "separation: cosine inter/intra {ratio:.2} (< {CO_LOCATION_RATIO}): translations co-locate"
        ),
        SeparationFinding::Partial => format!("separation: cosine inter/intra {ratio:.2}: partial alignment"),
    });

    report.magnitude_finding = Some(magnitude);
    report.variance_finding = Some(variance);
    report.separation_finding = Some(separation);
    Ok(report)
}
