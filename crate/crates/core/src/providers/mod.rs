//! Embedding acquisition.
//!
//! Embeddings come from either an OpenAI-compatible `/embeddings` endpoint
//! or a local line-record file. HTTP fetches go through a per-word on-disk
//! cache so each `(model, word)` is embedded at most once.

mod cache;
mod http;
mod import;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Language;

pub use cache::{CacheEntryInfo, CacheKey, CacheRecord, EmbeddingCache, CACHE_DIR_ENV};
pub use http::{EmbeddingBackend, OpenAiClient, RetryPolicy};
pub use import::{import_embeddings, parse_import_text, write_import_text};

/// Maximum pairwise distance below which a set is considered collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    HttpApi,
    FileImport,
}

/// Registry entry for one embedding model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub provider_kind: ProviderKind,
    /// Full URL of the embeddings endpoint (http-api).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Model name sent to the endpoint; defaults to `model_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_model: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env_var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_hint: Option<usize>,
    /// Per-language import files (file-import). A `{dataset}` placeholder
    /// in the path is substituted with the dataset id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sources: BTreeMap<Language, PathBuf>,
}

impl ModelSpec {
    pub fn http(model_id: &str, endpoint: &str) -> Self {
        ModelSpec {
            model_id: model_id.to_owned(),
            provider_kind: ProviderKind::HttpApi,
            endpoint: Some(endpoint.to_owned()),
            api_model: None,
            auth_env_var: None,
            dimension_hint: None,
            sources: BTreeMap::new(),
        }
    }

    pub fn file_import(model_id: &str, sources: BTreeMap<Language, PathBuf>) -> Self {
        ModelSpec {
            model_id: model_id.to_owned(),
            provider_kind: ProviderKind::FileImport,
            endpoint: None,
            api_model: None,
            auth_env_var: None,
            dimension_hint: None,
            sources,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_id.trim().is_empty() {
            return Err(Error::Config("model id is empty".into()));
        }
        if self.dimension_hint == Some(0) {
            return Err(Error::Config(format!(
                "model '{}': dimension_hint must be positive",
                self.model_id
            )));
        }
        match self.provider_kind {
            ProviderKind::HttpApi => {
                if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                    return Err(Error::Config(format!(
                        "model '{}': http-api requires an endpoint",
                        self.model_id
                    )));
                }
            }
            ProviderKind::FileImport => {
                if self.sources.is_empty() {
                    return Err(Error::Config(format!(
                        "model '{}': file-import requires at least one source path",
                        self.model_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn api_model(&self) -> &str {
        self.api_model.as_deref().unwrap_or(&self.model_id)
    }

    /// Import path for a language, with `{dataset}` substituted.
    pub fn source_for(&self, language: &Language, dataset_id: &str) -> Option<PathBuf> {
        self.sources.get(language).map(|p| {
            let s = p.to_string_lossy().replace("{dataset}", dataset_id);
            PathBuf::from(s)
        })
    }
}

/// Vectors for one `(model, language)`, keyed by surface form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageEmbeddingSet {
    pub model_id: String,
    pub language: Language,
    pub dimension: usize,
    pub vectors: IndexMap<String, Vec<f64>>,
}

impl LanguageEmbeddingSet {
    pub fn new(
        model_id: impl Into<String>,
        language: Language,
        vectors: IndexMap<String, Vec<f64>>,
    ) -> Result<Self> {
        let dimension = vectors.values().next().map(Vec::len).unwrap_or(0);
        for (word, v) in &vectors {
            if v.len() != dimension {
                return Err(Error::InvalidEmbeddings(format!(
                    "'{word}' has dimension {}, expected {dimension}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidEmbeddings(format!(
                    "'{word}' contains NaN or infinity"
                )));
            }
        }
        if !vectors.is_empty() && dimension < 2 {
            return Err(Error::InvalidEmbeddings(format!(
                "dimension must be at least 2, got {dimension}"
            )));
        }
        Ok(LanguageEmbeddingSet {
            model_id: model_id.into(),
            language,
            dimension,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Restricts the vocabulary to exactly `words`, in their order.
    pub fn restrict_to(&self, words: &IndexSet<String>) -> Result<Self> {
        let mut vectors = IndexMap::with_capacity(words.len());
        for word in words {
            let v = self
                .vectors
                .get(word)
                .ok_or_else(|| Error::MissingEmbedding {
                    word: word.clone(),
                    language: self.language.clone(),
                })?;
            vectors.insert(word.clone(), v.clone());
        }
        Ok(LanguageEmbeddingSet {
            model_id: self.model_id.clone(),
            language: self.language.clone(),
            dimension: self.dimension,
            vectors,
        })
    }

    /// Applies `f` to every vector.
    pub fn map_vectors(&self, mut f: impl FnMut(&str, &[f64]) -> Vec<f64>) -> Result<Self> {
        let vectors = self
            .vectors
            .iter()
            .map(|(w, v)| (w.clone(), f(w, v)))
            .collect();
        LanguageEmbeddingSet::new(self.model_id.clone(), self.language.clone(), vectors)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseCheck {
    pub collapsed: bool,
    pub max_distance: f64,
}

/// Flags a set whose maximum pairwise Euclidean distance is below 1e-6.
pub fn detect_collapse(set: &LanguageEmbeddingSet) -> Result<CollapseCheck> {
    if set.len() < 2 {
        return Err(Error::InsufficientVocabulary {
            language: set.language.clone(),
            distinct: set.len(),
        });
    }
    let vectors: Vec<&Vec<f64>> = set.vectors.values().collect();
    let mut max_sq = 0.0f64;
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            let sq: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            max_sq = max_sq.max(sq);
        }
    }
    let max_distance = max_sq.sqrt();
    Ok(CollapseCheck {
        collapsed: max_distance < COLLAPSE_THRESHOLD,
        max_distance,
    })
}

#[derive(Clone, Debug)]
pub struct FetchOptions {
    pub batch_size: usize,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    pub cache: Option<EmbeddingCache>,
    pub timeout: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            batch_size: 64,
            parallelism: 4,
            retry: RetryPolicy::default(),
            cache: None,
            timeout: Duration::from_secs(60),
        }
    }
}

/// Counters for one fetch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchStats {
    pub requested: usize,
    pub cache_hits: usize,
    pub fetched: usize,
    pub network_requests: usize,
}

impl FetchStats {
    pub fn merge(&mut self, other: &FetchStats) {
        self.requested += other.requested;
        self.cache_hits += other.cache_hits;
        self.fetched += other.fetched;
        self.network_requests += other.network_requests;
    }
}

type BatchResult = Result<Vec<Vec<f32>>>;

/// Resolves `words` through the cache, fetching misses from `backend` in
/// batches. Vectors are rounded to f32 on arrival so cached and fresh
/// values are bit-identical.
pub fn fetch_with_backend(
    backend: &dyn EmbeddingBackend,
    model_id: &str,
    words: &IndexSet<String>,
    language: &Language,
    options: &FetchOptions,
) -> Result<(LanguageEmbeddingSet, FetchStats)> {
    if words.is_empty() {
        return Err(Error::InvalidEmbeddings("no words requested".into()));
    }
    let batch_size = options.batch_size.max(1);
    let mut stats = FetchStats {
        requested: words.len(),
        ..FetchStats::default()
    };

    let mut resolved: Vec<Option<Vec<f32>>> = vec![None; words.len()];
    let mut misses = Vec::new();
    for (idx, word) in words.iter().enumerate() {
        let cached = match &options.cache {
            Some(cache) => cache.get(&CacheKey::new(model_id, word))?,
            None => None,
        };
        match cached {
            Some(v) => {
                resolved[idx] = Some(v);
                stats.cache_hits += 1;
            }
            None => misses.push(idx),
        }
    }

    if !misses.is_empty() {
        let batches: Vec<&[usize]> = misses.chunks(batch_size).collect();
        let next = AtomicUsize::new(0);
        let requests = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<BatchResult>>> =
            Mutex::new((0..batches.len()).map(|_| None).collect());
        let workers = options.parallelism.clamp(1, batches.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let b = next.fetch_add(1, Ordering::SeqCst);
                    if b >= batches.len() {
                        break;
                    }
                    let inputs: Vec<String> =
                        batches[b].iter().map(|&i| words[i].clone()).collect();
                    requests.fetch_add(1, Ordering::SeqCst);
                    let out = backend.embed_batch(&inputs).and_then(|vectors| {
                        if vectors.len() != inputs.len() {
                            return Err(Error::IncompleteBatch {
                                requested: inputs.len(),
                                returned: vectors.len(),
                            });
                        }
                        Ok(vectors
                            .into_iter()
                            .map(|v| v.into_iter().map(|x| x as f32).collect())
                            .collect())
                    });
                    results.lock().expect("fetch results poisoned")[b] = Some(out);
                });
            }
        });
        stats.network_requests = requests.into_inner();
        let results = results.into_inner().expect("fetch results poisoned");
        for (batch, out) in batches.iter().zip(results) {
            let vectors = out.expect("every batch is processed")?;
            for (&idx, v) in batch.iter().zip(vectors) {
                if let Some(cache) = &options.cache {
                    cache.put(
                        &CacheKey::new(model_id, &words[idx]),
                        &v,
                        backend.provider_name(),
                    )?;
                }
                resolved[idx] = Some(v);
                stats.fetched += 1;
            }
        }
    }

    let vectors: IndexMap<String, Vec<f64>> = words
        .iter()
        .zip(resolved)
        .map(|(w, v)| {
            let v = v.expect("all words resolved");
            (w.clone(), v.into_iter().map(f64::from).collect())
        })
        .collect();
    let set = LanguageEmbeddingSet::new(model_id, language.clone(), vectors)?;
    Ok((set, stats))
}

/// Acquires embeddings for `words` as described by `spec`.
///
/// For http-api models the bearer token is read from the environment
/// variable named by `spec.auth_env_var`. File-import models read the language's
/// source file and restrict it to `words`.
pub fn fetch_embeddings(
    spec: &ModelSpec,
    words: &IndexSet<String>,
    language: &Language,
    dataset_id: &str,
    options: &FetchOptions,
) -> Result<(LanguageEmbeddingSet, FetchStats)> {
    spec.validate()?;
    let (set, stats) = match spec.provider_kind {
        ProviderKind::HttpApi => {
            let client = OpenAiClient::from_spec(spec, options)?;
            fetch_with_backend(&client, &spec.model_id, words, language, options)?
        }
        ProviderKind::FileImport => {
            let path = spec.source_for(language, dataset_id).ok_or_else(|| {
                Error::Config(format!(
                    "model '{}' has no import file for language '{}'",
                    spec.model_id, language
                ))
            })?;
            let set = import_embeddings(&path, &spec.model_id, language, Some(words))?;
            let stats = FetchStats {
                requested: words.len(),
                ..FetchStats::default()
            };
            (set, stats)
        }
    };
    if let Some(hint) = spec.dimension_hint {
        if hint != set.dimension {
            return Err(Error::DimensionMismatch(hint, set.dimension));
        }
    }
    Ok((set, stats))
}
