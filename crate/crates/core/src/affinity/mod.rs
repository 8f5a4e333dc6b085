//! Semantic Affinity.
//!
//! For an experiment with `L` languages:
//!
//! * the intra-lingual spread averages pairwise distances between distinct
//!   words of one language, then averages over languages;
//! * the inter-lingual spread averages, over every expanded translation
//!   unit, the distances between its surface forms across the `K = L(L-1)/2`
//!   language pairs;
//! * `SA = intra / (intra + inter)`.
//!
//! Cosine distances aggregate by arithmetic mean. Euclidean distances
//! aggregate by root-mean-square at the inner level (within a language, or
//! across the K language pairs of one unit) and by arithmetic mean at the
//! outer level.

mod bootstrap;
pub(crate) mod tables;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{expand_tuples, unique_words, ExpandedTuple, Language, TranslationLexicon};
use crate::providers::{detect_collapse, CollapseCheck, LanguageEmbeddingSet};

pub use bootstrap::{bootstrap, bootstrap_sem, BootstrapSummary, MAX_REDRAWS};
use tables::{ExperimentTables, LanguageTable, TupleTable};

/// Lower bound of tier 1.
pub const TIER1_THRESHOLD: f64 = 0.60;
/// Lower bound of tier 2.
pub const TIER2_THRESHOLD: f64 = 0.50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Cosine,
    Euclidean,
}

impl MetricKind {
    pub const ALL: [MetricKind; 2] = [MetricKind::Cosine, MetricKind::Euclidean];
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Cosine => "cosine",
            MetricKind::Euclidean => "euclidean",
        })
    }
}

#[inline]
/// Takes squared norms: `sqrt(x·x) == x` exactly, so a vector's distance to
/// itself is exactly zero.
pub(crate) fn cosine_from_parts(dot: f64, sq_norm_a: f64, sq_norm_b: f64) -> f64 {
    (1.0 - dot / (sq_norm_a * sq_norm_b).sqrt()).clamp(0.0, 2.0)
}

/// `1 − cos(u, v)`, in `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (tables::dot(u, u), tables::dot(v, v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector { word: None });
    }
    Ok(cosine_from_parts(tables::dot(u, v), nu, nv))
}

pub fn euclidean_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    Ok(tables::squared_distance(u, v).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntraSpread {
    pub aggregate: f64,
    pub per_language: IndexMap<Language, f64>,
    /// Unordered distinct-word pairs per language (N_ℓ).
    pub pair_counts: IndexMap<Language, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterSpread {
    pub aggregate: f64,
    /// Inner aggregate for every expanded unit, in expansion order.
    pub per_unit: Vec<f64>,
    /// Number of expanded units (M').
    pub expanded_count: usize,
    /// Number of language pairs (K).
    pub language_pairs: usize,
}

/// Intra and inter spreads under one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadPair {
    pub metric: MetricKind,
    pub intra: f64,
    pub inter: f64,
    pub per_language_intra: IndexMap<Language, f64>,
    pub num_intra_pairs: IndexMap<Language, usize>,
    pub num_expanded: usize,
    pub num_language_pairs: usize,
}

impl SpreadPair {
    pub fn semantic_affinity(&self) -> Result<f64> {
        semantic_affinity(self.intra, self.inter)
    }
}

fn intra_from_tables(tables: &[LanguageTable], metric: MetricKind) -> Result<IntraSpread> {
    let mut per_language = IndexMap::new();
    let mut pair_counts = IndexMap::new();
    for t in tables {
        if metric == MetricKind::Cosine {
            t.check_cosine()?;
        }
        let (value, pairs) = t.intra(metric, None)?;
        per_language.insert(t.language.clone(), value);
        pair_counts.insert(t.language.clone(), pairs);
    }
    let aggregate = per_language.values().sum::<f64>() / per_language.len() as f64;
    Ok(IntraSpread {
        aggregate,
        per_language,
        pair_counts,
    })
}

fn inter_from_table(tuples: &TupleTable, metric: MetricKind) -> Result<InterSpread> {
    let values = tuples.values(metric);
    if values.is_empty() {
        return Err(Error::InvalidEmbeddings("no translation pairs".into()));
    }
    let aggregate = values.iter().sum::<f64>() / values.len() as f64;
    Ok(InterSpread {
        aggregate,
        per_unit: values.to_vec(),
        expanded_count: values.len(),
        language_pairs: tuples.language_pairs,
    })
}

/// Intra-lingual spread over each set's full vocabulary.
pub fn intra_spread(sets: &[LanguageEmbeddingSet], metric: MetricKind) -> Result<IntraSpread> {
    if sets.is_empty() {
        return Err(Error::TooFewLanguages(0));
    }
    let tables: Vec<LanguageTable> = sets.iter().map(LanguageTable::build).collect();
    intra_from_tables(&tables, metric)
}

/// Inter-lingual spread over expanded units; `sets` must be in the same
/// language order as the units' words.
pub fn inter_spread(
    tuples: &[ExpandedTuple],
    sets: &[LanguageEmbeddingSet],
    metric: MetricKind,
) -> Result<InterSpread> {
    if sets.len() < 2 {
        return Err(Error::TooFewLanguages(sets.len()));
    }
    let tables: Vec<LanguageTable> = sets.iter().map(LanguageTable::build).collect();
    if metric == MetricKind::Cosine {
        check_units_nonzero(tuples, &tables)?;
    }
    let table = TupleTable::build(tuples, &tables)?;
    inter_from_table(&table, metric)
}

fn check_units_nonzero(tuples: &[ExpandedTuple], tables: &[LanguageTable]) -> Result<()> {
    for tuple in tuples {
        for (w, t) in tuple.words.iter().zip(tables) {
            if let Some(&i) = t.index.get(w) {
                if t.norms[i] == 0.0 {
                    return Err(Error::ZeroVector {
                        word: Some(w.clone()),
                    });
                }
            }
        }
    }
    Ok(())
}

/// `intra / (intra + inter)`.
pub fn semantic_affinity(intra: f64, inter: f64) -> Result<f64> {
    if !(intra > 0.0) || !intra.is_finite() {
        return Err(Error::NonPositiveIntra(intra));
    }
    if !(inter >= 0.0) || !inter.is_finite() {
        return Err(Error::Numerical(format!(
            "inter spread must be nonnegative, got {inter}"
        )));
    }
    Ok(intra / (intra + inter))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Tier1,
    Tier2,
    Tier3,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::Tier1 => "tier1",
            Tier::Tier2 => "tier2",
            Tier::Tier3 => "tier3",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Tier::Tier1 => "great alignment",
            Tier::Tier2 => "good alignment",
            Tier::Tier3 => "non-alignment",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_tier(sa_cosine: f64) -> Tier {
    if sa_cosine >= TIER1_THRESHOLD {
        Tier::Tier1
    } else if sa_cosine >= TIER2_THRESHOLD {
        Tier::Tier2
    } else {
        Tier::Tier3
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinityConfig {
    pub bootstrap_iterations: usize,
    pub seed: u64,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        AffinityConfig {
            bootstrap_iterations: 1000,
            seed: 0,
        }
    }
}

/// Both metrics for one model × dataset × language set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinityResult {
    pub model_id: String,
    pub dataset_id: String,
    pub languages: Vec<Language>,
    /// Concepts in the dataset (M).
    pub concept_count: usize,
    /// Expanded translation units (M').
    pub expanded_count: usize,
    pub sa_cosine: f64,
    pub sem_cosine: f64,
    pub sa_euclidean: f64,
    pub sem_euclidean: f64,
    pub cosine: SpreadPair,
    pub euclidean: SpreadPair,
    pub tier: Tier,
    pub collapse: IndexMap<Language, CollapseCheck>,
    pub bootstrap: BootstrapSummary,
}

impl AffinityResult {
    pub fn language_pair_label(&self) -> String {
        self.languages
            .iter()
            .map(Language::as_str)
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn any_collapse(&self) -> bool {
        self.collapse.values().any(|c| c.collapsed)
    }

    pub fn spreads(&self, metric: MetricKind) -> &SpreadPair {
        match metric {
            MetricKind::Cosine => &self.cosine,
            MetricKind::Euclidean => &self.euclidean,
        }
    }

    /// Result carrying only aggregate spreads, e.g. values reported
    /// elsewhere. Counts are zero, SEMs are zero and no bootstrap was run.
    pub fn from_spreads(
        model_id: &str,
        dataset_id: &str,
        languages: Vec<Language>,
        cosine: (f64, f64),
        euclidean: (f64, f64),
    ) -> Result<Self> {
        let pair = |metric, (intra, inter): (f64, f64)| SpreadPair {
            metric,
            intra,
            inter,
            per_language_intra: IndexMap::new(),
            num_intra_pairs: IndexMap::new(),
            num_expanded: 0,
            num_language_pairs: languages.len() * languages.len().saturating_sub(1) / 2,
        };
        let cosine = pair(MetricKind::Cosine, cosine);
        let euclidean = pair(MetricKind::Euclidean, euclidean);
        let sa_cosine = cosine.semantic_affinity()?;
        let sa_euclidean = euclidean.semantic_affinity()?;
        Ok(AffinityResult {
            model_id: model_id.to_owned(),
            dataset_id: dataset_id.to_owned(),
            languages,
            concept_count: 0,
            expanded_count: 0,
            sa_cosine,
            sem_cosine: 0.0,
            sa_euclidean,
            sem_euclidean: 0.0,
            cosine,
            euclidean,
            tier: classify_tier(sa_cosine),
            collapse: IndexMap::new(),
            bootstrap: BootstrapSummary {
                iterations: 0,
                seed: 0,
                mean_cosine: sa_cosine,
                sem_cosine: 0.0,
                mean_euclidean: sa_euclidean,
                sem_euclidean: 0.0,
                redraws: 0,
            },
        })
    }
}

/// Restricts each language's embeddings to the lexicon vocabulary, in
/// lexicon language order.
pub fn align_embeddings(
    lexicon: &TranslationLexicon,
    sets: &[LanguageEmbeddingSet],
) -> Result<Vec<LanguageEmbeddingSet>> {
    lexicon
        .languages
        .iter()
        .map(|lang| {
            let set = sets
                .iter()
                .find(|s| &s.language == lang)
                .ok_or_else(|| Error::UnknownLanguage(lang.clone()))?;
            set.restrict_to(&unique_words(lexicon, lang)?)
        })
        .collect()
}

fn spread_pair(tables: &ExperimentTables, metric: MetricKind) -> Result<SpreadPair> {
    let intra = intra_from_tables(&tables.languages, metric)?;
    let inter = inter_from_table(&tables.tuples, metric)?;
    Ok(SpreadPair {
        metric,
        intra: intra.aggregate,
        inter: inter.aggregate,
        per_language_intra: intra.per_language,
        num_intra_pairs: intra.pair_counts,
        num_expanded: inter.expanded_count,
        num_language_pairs: inter.language_pairs,
    })
}

/// Full experiment: spreads and SA under both metrics, bootstrap SEMs,
/// collapse flags and tier.
pub fn run_affinity(
    lexicon: &TranslationLexicon,
    sets: &[LanguageEmbeddingSet],
    config: &AffinityConfig,
) -> Result<AffinityResult> {
    let aligned = align_embeddings(lexicon, sets)?;
    let model_id = aligned
        .first()
        .map(|s| s.model_id.clone())
        .ok_or(Error::TooFewLanguages(0))?;

    let mut collapse = IndexMap::new();
    for set in &aligned {
        collapse.insert(set.language.clone(), detect_collapse(set)?);
    }

    let tuples = expand_tuples(lexicon);
    let tables = ExperimentTables::build(lexicon, &aligned, &tuples)?;
    let cosine = spread_pair(&tables, MetricKind::Cosine)?;
    let euclidean = spread_pair(&tables, MetricKind::Euclidean)?;
    let collapsed_note = |e: Error| match e {
        Error::NonPositiveIntra(v) => {
            let langs: Vec<String> = collapse
                .iter()
                .filter(|(_, c)| c.collapsed)
                .map(|(l, _)| l.to_string())
                .collect();
            if langs.is_empty() {
                Error::NonPositiveIntra(v)
            } else {
                Error::Numerical(format!(
                    "intra spread is {v}; embeddings collapsed for {}",
                    langs.join(", ")
                ))
            }
        }
        other => other,
    };
    let sa_cosine = cosine.semantic_affinity().map_err(collapsed_note)?;
    let sa_euclidean = euclidean.semantic_affinity().map_err(collapsed_note)?;
    let summary = bootstrap::bootstrap_tables(&tables, config.bootstrap_iterations, config.seed)?;

    Ok(AffinityResult {
        model_id,
        dataset_id: lexicon.dataset_id.clone(),
        languages: lexicon.languages.clone(),
        concept_count: lexicon.concept_count(),
        expanded_count: tuples.len(),
        sa_cosine,
        sem_cosine: summary.sem_cosine,
        sa_euclidean,
        sem_euclidean: summary.sem_euclidean,
        cosine,
        euclidean,
        tier: classify_tier(sa_cosine),
        collapse,
        bootstrap: summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn set(lang: &str, vectors: &[(&str, &[f64])]) -> LanguageEmbeddingSet {
        LanguageEmbeddingSet::new(
            "m",
            Language::new(lang),
            vectors
                .iter()
                .map(|(w, v)| (w.to_string(), v.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cosine_distance_examples() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[2.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(
            cosine_distance(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            0.292_893_218_813_452_5,
            epsilon = 1e-15
        );
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector { .. })
        ));
        assert!(cosine_distance(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn intra_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let one = set(
            "x",
            &[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0]), ("c", &[h, h])],
        );
        let cos = intra_spread(std::slice::from_ref(&one), MetricKind::Cosine).unwrap();
        // (1 + 2·(1 − 1/√2)) / 3
        assert_relative_eq!(
            cos.aggregate,
            (1.0 + 2.0 * (1.0 - h)) / 3.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(cos.aggregate, 0.528_595, epsilon = 1e-6);
        assert_eq!(cos.pair_counts[&Language::new("x")], 3);

        let two = set("x", &[("a", &[0.0, 0.0]), ("b", &[3.0, 4.0])]);
        let eu = intra_spread(std::slice::from_ref(&two), MetricKind::Euclidean).unwrap();
        assert_eq!(eu.aggregate, 5.0);
        // zero vector is fine for euclidean, an error for cosine naming the word
        let err = intra_spread(std::slice::from_ref(&two), MetricKind::Cosine).unwrap_err();
        assert!(err.to_string().contains("'a'"));
    }

    #[test]
    fn intra_mean_across_languages() {
        // cos distance 0.2 and 0.4 between the two words of each language
        let angle = |d: f64| (1.0f64 - d).acos();
        let a = angle(0.2);
        let b = angle(0.4);
        let l1 = set("p", &[("u", &[1.0, 0.0]), ("v", &[a.cos(), a.sin()])]);
        let l2 = set("q", &[("u", &[1.0, 0.0]), ("v", &[b.cos(), b.sin()])]);
        let s = intra_spread(&[l1, l2], MetricKind::Cosine).unwrap();
        assert_relative_eq!(s.aggregate, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn insufficient_vocabulary() {
        let one = set("x", &[("a", &[1.0, 0.0])]);
        assert!(matches!(
            intra_spread(&[one], MetricKind::Cosine),
            Err(Error::InsufficientVocabulary { distinct: 1, .. })
        ));
    }

    fn tuple(c: usize, words: &[&str]) -> ExpandedTuple {
        ExpandedTuple {
            concept_index: c,
            words: words.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn inter_examples() {
        let a = set("chn", &[("日", &[1.0, 2.0]), ("水", &[3.0, -1.0])]);
        let b = set("enu", &[("sun", &[1.0, 2.0]), ("water", &[3.0, -1.0])]);
        let tuples = [tuple(0, &["日", "sun"]), tuple(1, &["水", "water"])];
        let s = inter_spread(&tuples, &[a, b], MetricKind::Cosine).unwrap();
        assert_eq!(s.aggregate, 0.0);
        assert_eq!(s.language_pairs, 1);

        // distances 0.1 and 0.3 → 0.2
        let rot = |d: f64| {
            let t = (1.0f64 - d).acos();
            vec![t.cos(), t.sin()]
        };
        let a = set("chn", &[("x", &[1.0, 0.0]), ("y", &[1.0, 0.0])]);
        let (v1, v2) = (rot(0.1), rot(0.3));
        let b = set("enu", &[("p", &v1), ("q", &v2)]);
        let tuples = [tuple(0, &["x", "p"]), tuple(1, &["y", "q"])];
        let s = inter_spread(&tuples, &[a.clone(), b.clone()], MetricKind::Cosine).unwrap();
        assert_relative_eq!(s.aggregate, 0.2, epsilon = 1e-12);
        assert_relative_eq!(s.per_unit[0], 0.1, epsilon = 1e-12);

        let missing = [tuple(0, &["x", "nope"])];
        assert!(matches!(
            inter_spread(&missing, &[a, b], MetricKind::Cosine),
            Err(Error::MissingEmbedding { .. })
        ));
    }

    #[test]
    fn sa_examples() {
        assert_relative_eq!(
            semantic_affinity(0.379, 0.090).unwrap(),
            0.808_102,
            epsilon = 1e-6
        );
        assert_relative_eq!(
            semantic_affinity(53.9, 64.4).unwrap(),
            0.455_621,
            epsilon = 1e-6
        );
        assert_eq!(semantic_affinity(0.3, 0.3).unwrap(), 0.5);
        assert_eq!(semantic_affinity(0.3, 0.0).unwrap(), 1.0);
        assert!(matches!(
            semantic_affinity(0.0, 0.1),
            Err(Error::NonPositiveIntra(_))
        ));
        assert!(semantic_affinity(-1.0, 0.1).is_err());
    }

    #[test]
    fn tiers() {
        assert_eq!(classify_tier(0.692), Tier::Tier1);
        assert_eq!(classify_tier(0.60), Tier::Tier1);
        assert_eq!(classify_tier(0.599_999), Tier::Tier2);
        assert_eq!(classify_tier(0.550), Tier::Tier2);
        assert_eq!(classify_tier(0.50), Tier::Tier2);
        assert_eq!(classify_tier(0.449), Tier::Tier3);
        assert_eq!(serde_json::to_string(&Tier::Tier1).unwrap(), "\"tier1\"");
    }
}
