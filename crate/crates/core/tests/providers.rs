mod common;

use std::time::Duration;

use common::mock::{mock_vector, Behavior, MockServer};
use common::*;
use indexmap::IndexSet;
use semaffinity::lexicon::Language;
use semaffinity::providers::{
    detect_collapse, fetch_embeddings, import_embeddings, write_import_text, EmbeddingCache,
    FetchOptions, ModelSpec, RetryPolicy,
};
use semaffinity::Error;

fn words(n: usize) -> IndexSet<String> {
    (0..n).map(|i| format!("word{i}")).collect()
}

fn options(cache: Option<EmbeddingCache>) -> FetchOptions {
    FetchOptions {
        retry: RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(5),
        },
        cache,
        ..FetchOptions::default()
    }
}

fn behavior(dim: usize) -> Behavior {
    Behavior {
        dim,
        ..Behavior::default()
    }
}

#[test]
fn cold_then_warm_cache() {
    let server = MockServer::start(behavior(12));
    let dir = tempfile::tempdir().unwrap();
    let spec = ModelSpec::http("mock-model", &server.url);
    let lang = Language::new("enu");
    let ws = words(150);
    let opts = options(Some(EmbeddingCache::new(dir.path())));

    let (cold, stats) = fetch_embeddings(&spec, &ws, &lang, "ds", &opts).unwrap();
    assert_eq!(stats.fetched, 150);
    assert_eq!(stats.cache_hits, 0);
    assert_eq!(stats.network_requests, 3);
    assert_eq!(server.request_count(), 3);
    assert_eq!(cold.dimension, 12);
    let expected: Vec<f64> = mock_vector(&behavior(12), "word7")
        .iter()
        .map(|&x| x as f32 as f64)
        .collect();
    assert_eq!(cold.get("word7").unwrap(), expected.as_slice());

    let (warm, stats) = fetch_embeddings(&spec, &ws, &lang, "ds", &opts).unwrap();
    assert_eq!(stats.fetched, 0);
    assert_eq!(stats.cache_hits, 150);
    assert_eq!(server.request_count(), 3);
    assert_eq!(cold, warm);
}

#[test]
fn cache_is_keyed_by_model() {
    let server = MockServer::start(behavior(4));
    let dir = tempfile::tempdir().unwrap();
    let opts = options(Some(EmbeddingCache::new(dir.path())));
    let lang = Language::new("enu");
    let ws = words(3);
    fetch_embeddings(&ModelSpec::http("a", &server.url), &ws, &lang, "ds", &opts).unwrap();
    let (_, stats) =
        fetch_embeddings(&ModelSpec::http("b", &server.url), &ws, &lang, "ds", &opts).unwrap();
    assert_eq!(stats.fetched, 3);
    assert_eq!(server.request_count(), 2);
}

#[test]
fn transient_failures_are_retried() {
    let server = MockServer::start(Behavior {
        fail_first: 2,
        ..behavior(4)
    });
    let spec = ModelSpec::http("m", &server.url);
    let (set, _) = fetch_embeddings(
        &spec,
        &words(5),
        &Language::new("enu"),
        "ds",
        &options(None),
    )
    .unwrap();
    assert_eq!(set.len(), 5);
    assert_eq!(server.request_count(), 3);
}

#[test]
fn persistent_server_errors_give_up_after_three_attempts() {
    let server = MockServer::start(Behavior {
        always_status: Some(503),
        ..behavior(4)
    });
    let spec = ModelSpec::http("m", &server.url);
    let err = fetch_embeddings(
        &spec,
        &words(5),
        &Language::new("enu"),
        "ds",
        &options(None),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Http { attempts: 3, .. }), "{err}");
    assert_eq!(server.request_count(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(Behavior {
        always_status: Some(400),
        ..behavior(4)
    });
    let spec = ModelSpec::http("m", &server.url);
    assert!(fetch_embeddings(
        &spec,
        &words(5),
        &Language::new("enu"),
        "ds",
        &options(None)
    )
    .is_err());
    assert_eq!(server.request_count(), 1);
}

#[test]
fn rate_limit_is_retried() {
    let server = MockServer::start(Behavior {
        always_status: Some(429),
        ..behavior(4)
    });
    let spec = ModelSpec::http("m", &server.url);
    assert!(fetch_embeddings(
        &spec,
        &words(2),
        &Language::new("enu"),
        "ds",
        &options(None)
    )
    .is_err());
    assert_eq!(server.request_count(), 3);
}

#[test]
fn short_batches_are_rejected() {
    let server = MockServer::start(Behavior {
        drop_last: true,
        ..behavior(4)
    });
    let spec = ModelSpec::http("m", &server.url);
    let dir = tempfile::tempdir().unwrap();
    let cache = EmbeddingCache::new(dir.path());
    let err = fetch_embeddings(
        &spec,
        &words(5),
        &Language::new("enu"),
        "ds",
        &options(Some(cache.clone())),
    )
    .unwrap_err();
    assert!(err.to_string().contains("incomplete batch"), "{err}");
    assert!(cache.entries().unwrap().is_empty());
}

#[test]
fn out_of_order_responses_are_matched_by_index() {
    let server = MockServer::start(Behavior {
        reverse: true,
        ..behavior(6)
    });
    let spec = ModelSpec::http("m", &server.url);
    let (set, _) = fetch_embeddings(
        &spec,
        &words(9),
        &Language::new("enu"),
        "ds",
        &options(None),
    )
    .unwrap();
    for w in words(9) {
        let expected: Vec<f64> = mock_vector(&behavior(6), &w)
            .iter()
            .map(|&x| x as f32 as f64)
            .collect();
        assert_eq!(set.get(&w).unwrap(), expected.as_slice());
    }
}

#[test]
fn bearer_token_from_environment() {
    let server = MockServer::start(Behavior {
        token: Some("sekrit".into()),
        ..behavior(4)
    });
    let mut spec = ModelSpec::http("m", &server.url);
    spec.auth_env_var = Some("SEMAFFINITY_TEST_TOKEN_PROVIDERS".into());
    let lang = Language::new("enu");
    assert!(matches!(
        fetch_embeddings(&spec, &words(2), &lang, "ds", &options(None)),
        Err(Error::Config(_))
    ));
    std::env::set_var("SEMAFFINITY_TEST_TOKEN_PROVIDERS", "sekrit");
    fetch_embeddings(&spec, &words(2), &lang, "ds", &options(None)).unwrap();
}

#[test]
fn dimension_hint_is_checked() {
    let server = MockServer::start(behavior(8));
    let mut spec = ModelSpec::http("m", &server.url);
    spec.dimension_hint = Some(16);
    let err = fetch_embeddings(
        &spec,
        &words(2),
        &Language::new("enu"),
        "ds",
        &options(None),
    )
    .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(16, 8)));
}

#[test]
fn import_round_trip() {
    let mut r = rng(4);
    let set = embedding_set(
        "imp",
        "chn",
        (0..20)
            .map(|i| (format!("字{i}"), gaussian_vec(&mut r, 5)))
            .collect(),
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chn.tsv");
    std::fs::write(&path, write_import_text(&set)).unwrap();
    let back = import_embeddings(&path, "imp", &Language::new("chn"), None).unwrap();
    assert_eq!(back, set);
    let subset: IndexSet<String> = ["字3".to_string(), "字1".to_string()].into_iter().collect();
    let some = import_embeddings(&path, "imp", &Language::new("chn"), Some(&subset)).unwrap();
    assert_eq!(some.len(), 2);
    let missing: IndexSet<String> = ["none".to_string()].into_iter().collect();
    assert!(import_embeddings(&path, "imp", &Language::new("chn"), Some(&missing)).is_err());
}

#[test]
fn collapse_detection() {
    let same = embedding_set(
        "c",
        "a",
        (0..10)
            .map(|i| (format!("w{i}"), vec![0.3, -1.2, 4.0]))
            .collect(),
    );
    assert!(detect_collapse(&same).unwrap().collapsed);
    let mut r = rng(8);
    let unit = embedding_set(
        "c",
        "a",
        (0..50)
            .map(|i| {
                let v = gaussian_vec(&mut r, 32);
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (format!("w{i}"), v.into_iter().map(|x| x / n).collect())
            })
            .collect(),
    );
    assert!(!detect_collapse(&unit).unwrap().collapsed);
}
