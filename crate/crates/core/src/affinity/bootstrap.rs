//! Concept-level bootstrap of SA.
//!
//! Each iteration draws M concepts with replacement. Intra spreads are
//! recomputed over the distinct words the drawn concepts induce; inter
//! spreads over the drawn concepts' expanded units, with repeats counted
//! once per draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tables::ExperimentTables;
use super::{align_embeddings, semantic_affinity, MetricKind};
use crate::error::{Error, Result};
use crate::lexicon::{expand_tuples, TranslationLexicon};
use crate::providers::LanguageEmbeddingSet;

/// Redraw limit per iteration when a resample has fewer than two distinct
/// words in some language.
pub const MAX_REDRAWS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub iterations: usize,
    pub seed: u64,
    pub mean_cosine: f64,
    pub sem_cosine: f64,
    pub mean_euclidean: f64,
    pub sem_euclidean: f64,
    /// Resamples discarded for having < 2 distinct words in a language.
    pub redraws: usize,
}

struct Sample {
    sa_cosine: f64,
    sa_euclidean: f64,
    redraws: usize,
}

/// Word indices per language for every concept.
fn concept_words(tables: &ExperimentTables) -> Vec<Vec<Vec<usize>>> {
    let l = tables.languages.len();
    tables
        .concept_tuples
        .iter()
        .map(|range| {
            (0..l)
                .map(|lang| {
                    let mut idx: Vec<usize> = tables.tuples.members[range.clone()]
                        .iter()
                        .map(|m| m[lang])
                        .collect();
                    idx.sort_unstable();
                    idx.dedup();
                    idx
                })
                .collect()
        })
        .collect()
}

fn one_iteration(
    tables: &ExperimentTables,
    words: &[Vec<Vec<usize>>],
    seed: u64,
    iteration: u64,
) -> Result<Sample> {
    let m = tables.concept_tuples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    let mut masks: Vec<Vec<bool>> = tables
        .languages
        .iter()
        .map(|t| vec![false; t.len()])
        .collect();
    let mut draw = vec![0usize; m];

    for redraws in 0..=MAX_REDRAWS {
        for slot in draw.iter_mut() {
            *slot = rng.random_range(0..m);
        }
        for mask in masks.iter_mut() {
            mask.fill(false);
        }
        for &c in &draw {
            for (lang, idx) in words[c].iter().enumerate() {
                for &i in idx {
                    masks[lang][i] = true;
                }
            }
        }
        let subsets: Vec<Vec<usize>> = masks
            .iter()
            .map(|mask| {
                mask.iter()
                    .enumerate()
                    .filter(|(_, &on)| on)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        if subsets.iter().any(|s| s.len() < 2) {
            continue;
        }

        let mut sa = [0.0; 2];
        for (slot, metric) in sa.iter_mut().zip(MetricKind::ALL) {
            let mut intra = 0.0;
            for (table, subset) in tables.languages.iter().zip(&subsets) {
                intra += table.intra(metric, Some(subset))?.0;
            }
            intra /= tables.languages.len() as f64;
            let values = tables.tuples.values(metric);
            let (mut sum, mut count) = (0.0, 0usize);
            for &c in &draw {
                let range = tables.concept_tuples[c].clone();
                count += range.len();
                sum += values[range].iter().sum::<f64>();
            }
            *slot = semantic_affinity(intra, sum / count as f64)?;
        }
        return Ok(Sample {
            sa_cosine: sa[0],
            sa_euclidean: sa[1],
            redraws,
        });
    }
    Err(Error::Numerical(format!(
        "bootstrap iteration {iteration}: {MAX_REDRAWS} redraws all had fewer than 2 distinct words in some language"
    )))
}

fn mean_and_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut probe = values.clone();
    if let Some(first) = probe.next() {
        // summing n copies of x need not give back x exactly
        if probe.all(|x| x.to_bits() == first.to_bits()) {
            return (first, 0.0);
        }
    }
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub(crate) fn bootstrap_tables(
    tables: &ExperimentTables,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if iterations < 2 {
        return Err(Error::Config(format!(
            "bootstrap needs at least 2 iterations, got {iterations}"
        )));
    }
    if tables.concept_tuples.is_empty() {
        return Err(Error::InvalidEmbeddings("empty lexicon".into()));
    }
    let words = concept_words(tables);
    let samples = (0..iterations as u64)
        .into_par_iter()
        .map(|i| one_iteration(tables, &words, seed, i))
        .collect::<Result<Vec<Sample>>>()?;
    let (mean_cosine, sem_cosine) = mean_and_sd(samples.iter().map(|s| s.sa_cosine));
    let (mean_euclidean, sem_euclidean) = mean_and_sd(samples.iter().map(|s| s.sa_euclidean));
    Ok(BootstrapSummary {
        iterations,
        seed,
        mean_cosine,
        sem_cosine,
        mean_euclidean,
        sem_euclidean,
        redraws: samples.iter().map(|s| s.redraws).sum(),
    })
}

/// Bootstrap both metrics for one experiment.
pub fn bootstrap(
    lexicon: &TranslationLexicon,
    sets: &[LanguageEmbeddingSet],
    iterations: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    let aligned = align_embeddings(lexicon, sets)?;
    let tuples = expand_tuples(lexicon);
    let tables = ExperimentTables::build(lexicon, &aligned, &tuples)?;
    for t in &tables.languages {
        t.check_cosine()?;
    }
    bootstrap_tables(&tables, iterations, seed)
}

/// `(mean SA, SEM)` for one metric.
pub fn bootstrap_sem(
    lexicon: &TranslationLexicon,
    sets: &[LanguageEmbeddingSet],
    metric: MetricKind,
    iterations: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let s = bootstrap(lexicon, sets, iterations, seed)?;
    Ok(match metric {
        MetricKind::Cosine => (s.mean_cosine, s.sem_cosine),
        MetricKind::Euclidean => (s.mean_euclidean, s.sem_euclidean),
    })
}
