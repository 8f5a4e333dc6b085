//! Precomputed distance tables shared by the full-sample spreads and the
//! bootstrap, which only re-averages table entries.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lexicon::{ExpandedTuple, Language, TranslationLexicon};
use crate::providers::LanguageEmbeddingSet;

use super::{cosine_from_parts, MetricKind};

/// Index into a condensed upper-triangular `n × n` table, `i < j`.
#[inline]
pub(crate) fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

pub(crate) struct LanguageTable {
    pub language: Language,
    pub words: Vec<String>,
    pub index: HashMap<String, usize>,
    pub vectors: Vec<Vec<f64>>,
    /// Squared L2 norms.
    pub norms: Vec<f64>,
    /// Cosine distances (NaN where a norm is zero).
    pub cosine: Vec<f64>,
    /// Squared Euclidean distances.
    pub euclidean_sq: Vec<f64>,
}

impl LanguageTable {
    pub fn build(set: &LanguageEmbeddingSet) -> Self {
        let words: Vec<String> = set.vectors.keys().cloned().collect();
        let vectors: Vec<Vec<f64>> = set.vectors.values().cloned().collect();
        let norms: Vec<f64> = vectors.iter().map(|v| dot(v, v)).collect();
        let n = vectors.len();
        let cap = n * n.saturating_sub(1) / 2;
        let mut cosine = Vec::with_capacity(cap);
        let mut euclidean_sq = Vec::with_capacity(cap);
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&vectors[i], &vectors[j]);
                cosine.push(if norms[i] > 0.0 && norms[j] > 0.0 {
                    cosine_from_parts(dot(a, b), norms[i], norms[j])
                } else {
                    f64::NAN
                });
                euclidean_sq.push(squared_distance(a, b));
            }
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        LanguageTable {
            language: set.language.clone(),
            words,
            index,
            vectors,
            norms,
            cosine,
            euclidean_sq,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn check_cosine(&self) -> Result<()> {
        match self.norms.iter().position(|&n| n == 0.0) {
            Some(i) => Err(Error::ZeroVector {
                word: Some(self.words[i].clone()),
            }),
            None => Ok(()),
        }
    }

    /// Intra spread over a sorted subset of word indices, or over all words.
    pub fn intra(&self, metric: MetricKind, subset: Option<&[usize]>) -> Result<(f64, usize)> {
        let n = self.len();
        let count = subset.map_or(n, <[usize]>::len);
        if count < 2 {
            return Err(Error::InsufficientVocabulary {
                language: self.language.clone(),
                distinct: count,
            });
        }
        let table = match metric {
            MetricKind::Cosine => &self.cosine,
            MetricKind::Euclidean => &self.euclidean_sq,
        };
        let sum: f64 = match subset {
            None => table.iter().sum(),
            Some(idx) => {
                let mut s = 0.0;
                for (a, &i) in idx.iter().enumerate() {
                    for &j in &idx[a + 1..] {
                        s += table[condensed_index(n, i, j)];
                    }
                }
                s
            }
        };
        let pairs = count * (count - 1) / 2;
        let mean = sum / pairs as f64;
        let value = match metric {
            MetricKind::Cosine => mean,
            MetricKind::Euclidean => mean.sqrt(),
        };
        Ok((value, pairs))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-tuple inner aggregates over the K language pairs.
pub(crate) struct TupleTable {
    pub cosine: Vec<f64>,
    pub euclidean: Vec<f64>,
    /// Word index per language for each tuple.
    pub members: Vec<Vec<usize>>,
    pub concept: Vec<usize>,
    pub language_pairs: usize,
}

impl TupleTable {
    pub fn build(tuples: &[ExpandedTuple], tables: &[LanguageTable]) -> Result<Self> {
        let l = tables.len();
        let k = l * l.saturating_sub(1) / 2;
        if let Some(first) = tables.first() {
            let d = first.vectors.first().map_or(0, Vec::len);
            for t in &tables[1..] {
                let dt = t.vectors.first().map_or(0, Vec::len);
                if dt != d {
                    return Err(Error::DimensionMismatch(d, dt));
                }
            }
        }
        let mut cosine = Vec::with_capacity(tuples.len());
        let mut euclidean = Vec::with_capacity(tuples.len());
        let mut members = Vec::with_capacity(tuples.len());
        let mut concept = Vec::with_capacity(tuples.len());
        for tuple in tuples {
            let idx = tuple
                .words
                .iter()
                .zip(tables)
                .map(|(w, t)| {
                    t.index
                        .get(w)
                        .copied()
                        .ok_or_else(|| Error::MissingEmbedding {
                            word: w.clone(),
                            language: t.language.clone(),
                        })
                })
                .collect::<Result<Vec<usize>>>()?;
            let (mut cos_sum, mut sq_sum) = (0.0, 0.0);
            for i in 0..l {
                for j in i + 1..l {
                    let (ti, tj) = (&tables[i], &tables[j]);
                    let (a, b) = (&ti.vectors[idx[i]], &tj.vectors[idx[j]]);
                    let (na, nb) = (ti.norms[idx[i]], tj.norms[idx[j]]);
                    cos_sum += if na > 0.0 && nb > 0.0 {
                        cosine_from_parts(dot(a, b), na, nb)
                    } else {
                        f64::NAN
                    };
                    sq_sum += squared_distance(a, b);
                }
            }
            cosine.push(cos_sum / k as f64);
            euclidean.push((sq_sum / k as f64).sqrt());
            members.push(idx);
            concept.push(tuple.concept_index);
        }
        Ok(TupleTable {
            cosine,
            euclidean,
            members,
            concept,
            language_pairs: k,
        })
    }

    pub fn values(&self, metric: MetricKind) -> &[f64] {
        match metric {
            MetricKind::Cosine => &self.cosine,
            MetricKind::Euclidean => &self.euclidean,
        }
    }
}

/// Everything one experiment needs, built once.
pub(crate) struct ExperimentTables {
    pub languages: Vec<LanguageTable>,
    pub tuples: TupleTable,
    /// Tuple index ranges per concept, in concept order.
    pub concept_tuples: Vec<std::ops::Range<usize>>,
}

impl ExperimentTables {
    pub fn build(
        lexicon: &TranslationLexicon,
        sets: &[LanguageEmbeddingSet],
        tuples: &[ExpandedTuple],
    ) -> Result<Self> {
        let languages: Vec<LanguageTable> = sets.iter().map(LanguageTable::build).collect();
        let tuple_table = TupleTable::build(tuples, &languages)?;
        let mut concept_tuples = vec![0..0; lexicon.concept_count()];
        let mut start = 0;
        while start < tuple_table.concept.len() {
            let c = tuple_table.concept[start];
            let mut end = start;
            while end < tuple_table.concept.len() && tuple_table.concept[end] == c {
                end += 1;
            }
            concept_tuples[c] = start..end;
            start = end;
        }
        Ok(ExperimentTables {
            languages,
            tuples: tuple_table,
            concept_tuples,
        })
    }
}
