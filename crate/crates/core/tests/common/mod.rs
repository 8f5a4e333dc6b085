//! Shared test fixtures and independent reference computations.
#![allow(dead_code)]

pub mod mock;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use semaffinity::lexicon::{align_lexicon, Language, TranslationLexicon};
use semaffinity::providers::LanguageEmbeddingSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn embedding_set(
    model: &str,
    lang: &str,
    rows: Vec<(String, Vec<f64>)>,
) -> LanguageEmbeddingSet {
    LanguageEmbeddingSet::new(
        model,
        Language::new(lang),
        rows.into_iter().collect::<IndexMap<_, _>>(),
    )
    .expect("valid embedding set")
}

/// Rows of `x` as one language with words `p0, p1, ...`.
pub fn matrix_set(lang: &str, x: &DMatrix<f64>) -> LanguageEmbeddingSet {
    embedding_set(
        "m",
        lang,
        (0..x.nrows())
            .map(|i| (format!("p{i}"), x.row(i).iter().copied().collect()))
            .collect(),
    )
}

/// `k` isotropic unit-variance clusters of `per` points in `d` dimensions
/// with centers pairwise `separation` apart.
pub fn clusters(
    k: usize,
    per: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> (DMatrix<f64>, Vec<usize>) {
    assert!(k <= d);
    let mut r = rng(seed);
    let offset = separation / std::f64::consts::SQRT_2;
    let n = k * per;
    let mut x = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for c in 0..k {
        for p in 0..per {
            let i = c * per + p;
            let z = gaussian_vec(&mut r, d);
            for j in 0..d {
                x[(i, j)] = z[j] + if j == c { offset } else { 0.0 };
            }
            labels.push(c);
        }
    }
    (x, labels)
}

/// Mean silhouette over all points.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = labels.iter().max().unwrap() + 1;
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(&points[i], &points[j]);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Relative Frobenius residual after the best rigid (rotation/reflection,
/// translation) alignment of `x` onto `y`.
pub fn procrustes_residual(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let center = |m: &DMatrix<f64>| {
        let mut c = m.clone();
        for j in 0..m.ncols() {
            let mean = m.column(j).mean();
            for i in 0..m.nrows() {
                c[(i, j)] -= mean;
            }
        }
        c
    };
    let (xc, yc) = (center(x), center(y));
    let svd = (xc.transpose() * &yc).svd(true, true);
    let r = svd.u.unwrap() * svd.v_t.unwrap();
    (xc * r - &yc).norm() / yc.norm()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// Random lexicon with up to 3 `|`-variants per cell, words drawn from a
/// small pool so that vocabulary is shared across concepts.
pub fn random_lexicon(rng: &mut ChaCha8Rng, concepts: usize, langs: &[&str]) -> TranslationLexicon {
    let per_language = langs
        .iter()
        .map(|lang| {
            let pool = concepts + 2;
            let cells: Vec<Vec<String>> = (0..concepts)
                .map(|_| {
                    let variants = rng.random_range(1..=3);
                    let mut words: Vec<String> = Vec::new();
                    for _ in 0..variants {
                        let w = format!("{lang}{}", rng.random_range(0..pool));
                        if !words.contains(&w) {
                            words.push(w);
                        }
                    }
                    words
                })
                .collect();
            (Language::new(*lang), cells)
        })
        .collect();
    align_lexicon(per_language, "rand").expect("valid lexicon")
}

/// Gaussian vectors (random scale per word) for every word in the lexicon.
pub fn random_sets(
    rng: &mut ChaCha8Rng,
    lexicon: &TranslationLexicon,
    d: usize,
) -> Vec<LanguageEmbeddingSet> {
    lexicon
        .languages
        .iter()
        .map(|lang| {
            let mut rows: IndexMap<String, Vec<f64>> = IndexMap::new();
            for entry in &lexicon.entries {
                for w in entry.variants(lang) {
                    if !rows.contains_key(w) {
                        let scale = rng.random_range(0.2..5.0);
                        let v = gaussian_vec(rng, d)
                            .into_iter()
                            .map(|x| x * scale)
                            .collect();
                        rows.insert(w.clone(), v);
                    }
                }
            }
            LanguageEmbeddingSet::new("rand-model", lang.clone(), rows).unwrap()
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub intra_cos: f64,
    pub inter_cos: f64,
    pub intra_euc: f64,
    pub inter_euc: f64,
    pub expanded: usize,
}

impl Oracle {
    pub fn sa_cos(&self) -> f64 {
        self.intra_cos / (self.intra_cos + self.inter_cos)
    }

    pub fn sa_euc(&self) -> f64 {
        self.intra_euc / (self.intra_euc + self.inter_euc)
    }
}

fn cos_d(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    1.0 - dot / (na * nb)
}

fn euc_d(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Direct loops over the lexicon: distinct-word pairs for the intra spread,
/// every cross-product unit for the inter spread.
pub fn brute_force(lexicon: &TranslationLexicon, sets: &[LanguageEmbeddingSet]) -> Oracle {
    let lookup = |lang: &Language, w: &str| -> Vec<f64> {
        sets.iter().find(|s| &s.language == lang).unwrap().vectors[w].clone()
    };
    let (mut intra_cos, mut intra_euc) = (0.0, 0.0);
    for lang in &lexicon.languages {
        let mut vocab: Vec<String> = Vec::new();
        for e in &lexicon.entries {
            for w in e.variants(lang) {
                if !vocab.contains(w) {
                    vocab.push(w.clone());
                }
            }
        }
        let (mut c, mut e2, mut n) = (0.0, 0.0, 0.0);
        for i in 0..vocab.len() {
            for j in i + 1..vocab.len() {
                let (a, b) = (lookup(lang, &vocab[i]), lookup(lang, &vocab[j]));
                c += cos_d(&a, &b);
                e2 += euc_d(&a, &b).powi(2);
                n += 1.0;
            }
        }
        intra_cos += c / n;
        intra_euc += (e2 / n).sqrt();
    }
    let l = lexicon.languages.len() as f64;
    intra_cos /= l;
    intra_euc /= l;

    let (mut inter_cos, mut inter_euc, mut units) = (0.0, 0.0, 0usize);
    for e in &lexicon.entries {
        let mut combos: Vec<Vec<(Language, String)>> = vec![vec![]];
        for lang in &lexicon.languages {
            let mut next = Vec::new();
            for prefix in &combos {
                for w in e.variants(lang) {
                    let mut c = prefix.clone();
                    c.push((lang.clone(), w.clone()));
                    next.push(c);
                }
            }
            combos = next;
        }
        for combo in combos {
            let (mut c, mut e2, mut k) = (0.0, 0.0, 0.0);
            for i in 0..combo.len() {
                for j in i + 1..combo.len() {
                    let a = lookup(&combo[i].0, &combo[i].1);
                    let b = lookup(&combo[j].0, &combo[j].1);
                    c += cos_d(&a, &b);
                    e2 += euc_d(&a, &b).powi(2);
                    k += 1.0;
                }
            }
            inter_cos += c / k;
            inter_euc += (e2 / k).sqrt();
            units += 1;
        }
    }
    Oracle {
        intra_cos,
        inter_cos: inter_cos / units as f64,
        intra_euc,
        inter_euc: inter_euc / units as f64,
        expanded: units,
    }
}
