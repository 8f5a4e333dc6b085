mod common;

use std::time::Instant;

use common::*;
use rand::Rng;
use semaffinity::affinity::{bootstrap, bootstrap_sem, run_affinity, AffinityConfig, MetricKind};
use semaffinity::lexicon::{align_lexicon, Language, TranslationLexicon};
use semaffinity::providers::LanguageEmbeddingSet;

fn lexicon(m: usize) -> TranslationLexicon {
    align_lexicon(
        ["aa", "bb"]
            .iter()
            .map(|l| {
                (
                    Language::new(*l),
                    (0..m).map(|i| vec![format!("{l}{i}")]).collect(),
                )
            })
            .collect(),
        "boot",
    )
    .unwrap()
}

/// Translations are copies plus noise whose scale varies per concept.
fn noisy_pairs(m: usize, d: usize, seed: u64) -> Vec<LanguageEmbeddingSet> {
    let mut r = rng(seed);
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let base = gaussian_vec(&mut r, d);
        let sigma: f64 = r.random_range(0.1..1.5);
        let noise = gaussian_vec(&mut r, d);
        b.push((
            format!("bb{i}"),
            base.iter()
                .zip(&noise)
                .map(|(x, n)| x + sigma * n)
                .collect(),
        ));
        a.push((format!("aa{i}"), base));
    }
    vec![embedding_set("n", "aa", a), embedding_set("n", "bb", b)]
}

#[test]
fn fixed_seed_is_bit_identical() {
    let lex = lexicon(60);
    let sets = noisy_pairs(60, 16, 1);
    let a = bootstrap(&lex, &sets, 500, 42).unwrap();
    let b = bootstrap(&lex, &sets, 500, 42).unwrap();
    assert_eq!(a.mean_cosine.to_bits(), b.mean_cosine.to_bits());
    assert_eq!(a.sem_cosine.to_bits(), b.sem_cosine.to_bits());
    assert_eq!(a.mean_euclidean.to_bits(), b.mean_euclidean.to_bits());
    assert_eq!(a.sem_euclidean.to_bits(), b.sem_euclidean.to_bits());
    let c = bootstrap(&lex, &sets, 500, 43).unwrap();
    assert_ne!(a.sem_cosine, c.sem_cosine);
}

#[test]
fn degenerate_input_has_zero_sem() {
    // every word a distinct basis vector: all intra and inter distances equal
    let m = 20;
    let lex = lexicon(m);
    let basis = |k: usize| {
        let mut v = vec![0.0; 2 * m];
        v[k] = 1.0;
        v
    };
    let sets = vec![
        embedding_set(
            "z",
            "aa",
            (0..m).map(|i| (format!("aa{i}"), basis(i))).collect(),
        ),
        embedding_set(
            "z",
            "bb",
            (0..m).map(|i| (format!("bb{i}"), basis(m + i))).collect(),
        ),
    ];
    let s = bootstrap(&lex, &sets, 1000, 0).unwrap();
    assert_eq!(s.sem_cosine, 0.0);
    assert_eq!(s.sem_euclidean, 0.0);
    assert_eq!(s.mean_cosine, 0.5);
}

#[test]
fn sem_scales_as_inverse_sqrt_m() {
    let sem = |m: usize| {
        (0..4)
            .map(|rep| {
                let (mean, sem) = bootstrap_sem(
                    &lexicon(m),
                    &noisy_pairs(m, 16, 100 + rep),
                    MetricKind::Cosine,
                    1000,
                    rep,
                )
                .unwrap();
                assert!(mean > 0.5);
                sem
            })
            .sum::<f64>()
            / 4.0
    };
    let (small, large) = (sem(100), sem(400));
    let ratio = large / (small / 2.0);
    eprintln!("SEM(100) = {small:.5}, SEM(400) = {large:.5}, ratio to half = {ratio:.3}");
    assert!((0.75..=1.25).contains(&ratio), "ratio {ratio}");
}

#[test]
fn point_estimate_is_full_sample() {
    let lex = lexicon(40);
    let sets = noisy_pairs(40, 8, 9);
    let res = run_affinity(
        &lex,
        &sets,
        &AffinityConfig {
            bootstrap_iterations: 200,
            seed: 5,
        },
    )
    .unwrap();
    let s = bootstrap(&lex, &sets, 200, 5).unwrap();
    assert_eq!(res.bootstrap, s);
    assert_eq!(res.sem_cosine, s.sem_cosine);
    assert_ne!(res.sa_cosine, s.mean_cosine);
    assert!((res.sa_cosine - s.mean_cosine).abs() < 5.0 * s.sem_cosine);
}

#[test]
fn too_few_iterations() {
    assert!(bootstrap(&lexicon(5), &noisy_pairs(5, 4, 0), 1, 0).is_err());
}

#[test]
fn runtime_budget_m349_d768() {
    let lex = lexicon(349);
    let sets = noisy_pairs(349, 768, 77);
    let start = Instant::now();
    let res = run_affinity(&lex, &sets, &AffinityConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    eprintln!("M = 349, d = 768, 1000 iterations: {secs:.2} s");
    assert_eq!(res.bootstrap.iterations, 1000);
    assert!(secs < 10.0, "{secs} s");
}
