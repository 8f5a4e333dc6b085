//! Dense PHATE.
//!
//! Pipeline: [`preprocess`] → [`alpha_decay_kernel`] → [`diffusion_operator`]
//! → [`select_t`] (when `t = auto`) → [`potential_distances`] → [`mds_embed`].

pub mod diffusion;
pub mod kernel;
pub mod mds;
pub mod preprocess;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Language;
use crate::providers::LanguageEmbeddingSet;

pub use diffusion::{
    diffusion_operator, matrix_power, potential_distances, select_t, von_neumann_entropy,
    DiffusionOperator, TimeSelection,
};
pub use kernel::{alpha_decay_kernel, pairwise_distances};
pub use mds::{classical_mds, mds_embed, MdsResult};
pub use preprocess::{preprocess, Prepared};

/// Diffusion time: knee of the entropy curve, or a fixed power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "TimeRepr", into = "TimeRepr")]
pub enum DiffusionTime {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TimeRepr {
    Int(usize),
    Text(String),
}

impl TryFrom<TimeRepr> for DiffusionTime {
    type Error = String;

    fn try_from(r: TimeRepr) -> Result<Self, String> {
        match r {
            TimeRepr::Int(0) => Err("t must be positive".into()),
            TimeRepr::Int(t) => Ok(Self::Fixed(t)),
            TimeRepr::Text(s) if s == "auto" => Ok(Self::Auto),
            TimeRepr::Text(s) => s
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .map(Self::Fixed)
                .ok_or_else(|| format!("t must be \"auto\" or a positive integer, got {s:?}")),
        }
    }
}

impl From<DiffusionTime> for TimeRepr {
    fn from(t: DiffusionTime) -> Self {
        match t {
            DiffusionTime::Auto => TimeRepr::Text("auto".into()),
            DiffusionTime::Fixed(t) => TimeRepr::Int(t),
        }
    }
}

impl fmt::Display for DiffusionTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhateConfig {
    pub knn: usize,
    pub decay: f64,
    pub t: DiffusionTime,
    pub gamma: f64,
    pub n_components: usize,
    pub seed: u64,
    pub t_max: usize,
}

impl Default for PhateConfig {
    fn default() -> Self {
        Self {
            knn: 15,
            decay: 40.0,
            t: DiffusionTime::Auto,
            gamma: 1.0,
            n_components: 2,
            seed: 0,
            t_max: 100,
        }
    }
}

impl PhateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.knn == 0 {
            return Err(Error::Config("knn must be positive".into()));
        }
        if !(self.decay > 0.0) || !self.decay.is_finite() {
            return Err(Error::Config(format!(
                "decay must be positive, got {}",
                self.decay
            )));
        }
        if self.gamma != 1.0 {
            return Err(Error::Config(format!(
                "only gamma = 1 (log potential) is supported, got {}",
                self.gamma
            )));
        }
        if self.n_components == 0 {
            return Err(Error::Config("n_components must be at least 1".into()));
        }
        if self.t_max == 0 {
            return Err(Error::Config("t_max must be positive".into()));
        }
        if self.t == DiffusionTime::Fixed(0) {
            return Err(Error::Config("t must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointLabel {
    pub language: Language,
    pub word: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhateLayout {
    /// One row per point, `n_components` columns.
    pub coordinates: Vec<Vec<f64>>,
    pub labels: Vec<PointLabel>,
    pub chosen_t: usize,
    /// Empty when `t` was fixed.
    pub entropy_curve: Vec<(usize, f64)>,
    pub stress: f64,
    pub mds_iterations: usize,
    pub degenerate: bool,
    pub dropped_duplicates: usize,
}

impl PhateLayout {
    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    pub fn languages(&self) -> Vec<Language> {
        let mut out: Vec<Language> = Vec::new();
        for l in &self.labels {
            if !out.contains(&l.language) {
                out.push(l.language.clone());
            }
        }
        out
    }
}

/// Output of the numeric pipeline on an already prepared matrix.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub coordinates: DMatrix<f64>,
    pub chosen_t: usize,
    pub entropy_curve: Vec<(usize, f64)>,
    pub mds: MdsResult,
}

/// Kernel → diffusion → t → potential → MDS on rows of `x`, no preprocessing.
pub fn fit_matrix(x: &DMatrix<f64>, config: &PhateConfig) -> Result<Embedding> {
    config.validate()?;
    if x.nrows() <= config.knn {
        return Err(Error::Config(format!(
            "knn = {} requires more than {} points, got {}",
            config.knn,
            config.knn,
            x.nrows()
        )));
    }
    let k = alpha_decay_kernel(x, config.knn, config.decay)?;
    let op = diffusion_operator(&k)?;
    let (chosen_t, entropy_curve) = match config.t {
        DiffusionTime::Fixed(t) => (t, Vec::new()),
        DiffusionTime::Auto => {
            let sel = select_t(&op, config.t_max)?;
            (sel.chosen_t, sel.entropy_curve)
        }
    };
    let d = potential_distances(&op, chosen_t)?;
    let mds = mds_embed(&d, config.n_components)?;
    if mds.coordinates.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "layout contains non-finite coordinates".into(),
        ));
    }
    Ok(Embedding {
        coordinates: mds.coordinates.clone(),
        chosen_t,
        entropy_curve,
        mds,
    })
}

/// Full PHATE on the given languages' vectors.
pub fn phate_fit(sets: &[LanguageEmbeddingSet], config: &PhateConfig) -> Result<PhateLayout> {
    config.validate()?;
    let prepared = preprocess(sets, config.knn, config.seed)?;
    let fit = fit_matrix(&prepared.matrix, config)?;
    let coordinates = (0..fit.coordinates.nrows())
        .map(|i| fit.coordinates.row(i).iter().copied().collect())
        .collect();
    Ok(PhateLayout {
        coordinates,
        labels: prepared.labels,
        chosen_t: fit.chosen_t,
        entropy_curve: fit.entropy_curve,
        stress: fit.mds.stress,
        mds_iterations: fit.mds.iterations,
        degenerate: fit.mds.degenerate,
        dropped_duplicates: prepared.dropped_duplicates,
    })
}
