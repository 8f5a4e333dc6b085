//! Declarative run file.
//!
//! ```toml
//! [run]
//! name = "toy"
//! output_dir = "out"
//! bootstrap_iterations = 1000
//!
//! [phate]
//! knn = 5
//!
//! [[models]]
//! model_id = "toy-import"
//! provider_kind = "file-import"
//! sources = { chn = "embeddings/{dataset}-chn.tsv", enu = "embeddings/{dataset}-enu.tsv" }
//!
//! [[datasets]]
//! id = "toy"
//! dir = "datasets"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use semaffinity::lexicon::{dataset_file_name, Language};
use semaffinity::manifold::PhateConfig;
use semaffinity::providers::{ModelSpec, ProviderKind};
use semaffinity::viz::OutputFormat;
use semaffinity::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub name: String,
    pub output_dir: PathBuf,
    pub bootstrap_iterations: usize,
    pub seed: u64,
    /// Concurrent experiments; `None` uses every available core.
    pub parallelism: Option<usize>,
    pub charts: bool,
    pub chart_formats: Vec<OutputFormat>,
    pub cache_dir: Option<PathBuf>,
    /// Default language list for datasets that do not name their own.
    pub languages: Vec<Language>,
    /// Concurrent requests per language fetch.
    pub fetch_parallelism: usize,
    pub batch_size: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            name: "run".into(),
            output_dir: PathBuf::from("results"),
            bootstrap_iterations: 1000,
            seed: 0,
            parallelism: None,
            charts: true,
            chart_formats: vec![OutputFormat::Svg],
            cache_dir: None,
            languages: Vec::new(),
            fetch_parallelism: 4,
            batch_size: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    /// Directory holding `<id>-<lang>.txt` files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Explicit per-language files; takes precedence over `dir`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub files: BTreeMap<Language, PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub languages: Vec<Language>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default)]
    pub phate: PhateConfig,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub datasets: Vec<DatasetEntry>,
}

/// A dataset with its language list and file paths settled.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub id: String,
    pub files: Vec<(Language, PathBuf)>,
}

impl DatasetSpec {
    pub fn languages(&self) -> Vec<Language> {
        self.files.iter().map(|(l, _)| l.clone()).collect()
    }
}

/// Values given on the command line; each one overrides the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub name: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub bootstrap_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub charts: Option<bool>,
    pub chart_formats: Option<Vec<OutputFormat>>,
    pub cache_dir: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = if base.as_os_str().is_empty() {
            Path::new(".")
        } else {
            base
        };
        Self::from_toml(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.run.output_dir = resolve(base, &self.run.output_dir);
        if let Some(c) = &self.run.cache_dir {
            self.run.cache_dir = Some(resolve(base, c));
        }
        for m in &mut self.models {
            for p in m.sources.values_mut() {
                *p = resolve(base, p);
            }
        }
        for d in &mut self.datasets {
            if let Some(dir) = &d.dir {
                d.dir = Some(resolve(base, dir));
            }
            for p in d.files.values_mut() {
                *p = resolve(base, p);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        let r = &mut self.run;
        if let Some(v) = &o.name {
            r.name = v.clone();
        }
        if let Some(v) = &o.output_dir {
            r.output_dir = v.clone();
        }
        if let Some(v) = o.bootstrap_iterations {
            r.bootstrap_iterations = v;
        }
        if let Some(v) = o.seed {
            r.seed = v;
        }
        if let Some(v) = o.parallelism {
            r.parallelism = Some(v);
        }
        if let Some(v) = o.charts {
            r.charts = v;
        }
        if let Some(v) = &o.chart_formats {
            r.chart_formats = v.clone();
        }
        if let Some(v) = &o.cache_dir {
            r.cache_dir = Some(v.clone());
        }
    }

    /// Keeps only the named model and dataset.
    pub fn select(&mut self, model: Option<&str>, dataset: Option<&str>) -> Result<()> {
        if let Some(m) = model {
            self.models.retain(|s| s.model_id == m);
            if self.models.is_empty() {
                return Err(Error::Config(format!("no model named '{m}'")));
            }
        }
        if let Some(d) = dataset {
            self.datasets.retain(|s| s.id == d);
            if self.datasets.is_empty() {
                return Err(Error::Config(format!("no dataset named '{d}'")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.name.trim().is_empty() {
            return Err(Error::Config("run name is empty".into()));
        }
        if r.bootstrap_iterations < 2 {
            return Err(Error::Config(format!(
                "bootstrap_iterations must be at least 2, got {}",
                r.bootstrap_iterations
            )));
        }
        if r.parallelism == Some(0) || r.fetch_parallelism == 0 || r.batch_size == 0 {
            return Err(Error::Config(
                "parallelism and batch_size must be positive".into(),
            ));
        }
        if r.charts && r.chart_formats.is_empty() {
            return Err(Error::Config(
                "charts are enabled but chart_formats is empty".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models configured".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        self.phate.validate()?;
        let mut seen = std::collections::HashSet::new();
        for m in &self.models {
            m.validate()?;
            if !seen.insert(&m.model_id) {
                return Err(Error::Config(format!("duplicate model '{}'", m.model_id)));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for d in &self.datasets {
            if !seen.insert(&d.id) {
                return Err(Error::Config(format!("duplicate dataset '{}'", d.id)));
            }
            let spec = self.dataset(d)?;
            for m in &self.models {
                if m.provider_kind == ProviderKind::FileImport {
                    for lang in spec.languages() {
                        if !m.sources.contains_key(&lang) {
                            return Err(Error::Config(format!(
                                "model '{}' has no import file for language '{lang}' (dataset '{}')",
                                m.model_id, d.id
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Settles the language list and files for one dataset entry.
    pub fn dataset(&self, entry: &DatasetEntry) -> Result<DatasetSpec> {
        let languages = if !entry.languages.is_empty() {
            entry.languages.clone()
        } else if !self.run.languages.is_empty() {
            self.run.languages.clone()
        } else {
            entry.files.keys().cloned().collect()
        };
        if languages.len() < 2 {
            return Err(Error::Config(format!(
                "dataset '{}' needs at least two languages",
                entry.id
            )));
        }
        let files = languages
            .iter()
            .map(|lang| {
                let path = match (entry.files.get(lang), &entry.dir) {
                    (Some(p), _) => p.clone(),
                    (None, Some(dir)) => dir.join(dataset_file_name(&entry.id, lang)),
                    (None, None) => {
                        return Err(Error::Config(format!(
                            "dataset '{}' has no file for language '{lang}'",
                            entry.id
                        )))
                    }
                };
                Ok((lang.clone(), path))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DatasetSpec {
            id: entry.id.clone(),
            files,
        })
    }

    pub fn dataset_specs(&self) -> Result<Vec<DatasetSpec>> {
        self.datasets.iter().map(|d| self.dataset(d)).collect()
    }

    pub fn parallelism(&self) -> usize {
        self.run
            .parallelism
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}
