use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PointLabel;
use crate::error::{Error, Result};
use crate::providers::LanguageEmbeddingSet;

/// Standard deviation of the stabilizing noise added after scaling.
pub const NOISE_SCALE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Prepared {
    /// n × d, one row per point.
    pub matrix: DMatrix<f64>,
    pub labels: Vec<PointLabel>,
    /// Rows removed as exact duplicates within their language.
    pub dropped_duplicates: usize,
}

/// Z-scores every column (population standard deviation). Constant columns
/// are set to zero.
pub fn standardize(matrix: &mut DMatrix<f64>) {
    let n = matrix.nrows() as f64;
    for mut col in matrix.column_iter_mut() {
        let first = col[0];
        if col.iter().all(|&x| x == first) {
            col.fill(0.0);
            continue;
        }
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        for x in col.iter_mut() {
            *x = (*x - mean) / sd;
        }
    }
}

/// Adds `NOISE_SCALE · N(0, 1)` to every entry, row-major, from `seed`.
pub fn add_noise(matrix: &mut DMatrix<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            let z: f64 = StandardNormal.sample(&mut rng);
            matrix[(i, j)] += NOISE_SCALE * z;
        }
    }
}

/// Stacks languages in order, drops duplicate vectors within each language,
/// standardizes columns and adds seeded noise.
pub fn preprocess(sets: &[LanguageEmbeddingSet], knn: usize, seed: u64) -> Result<Prepared> {
    let dim = sets.first().map(|s| s.dimension).unwrap_or(0);
    let mut rows: Vec<&[f64]> = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    for set in sets {
        if set.dimension != dim && !set.is_empty() {
            return Err(Error::DimensionMismatch(dim, set.dimension));
        }
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for (word, v) in &set.vectors {
            // +0.0 and -0.0 are the same point
            let key: Vec<u64> = v.iter().map(|x| (x + 0.0).to_bits()).collect();
            if seen.insert(key) {
                rows.push(v);
                labels.push(PointLabel {
                    language: set.language.clone(),
                    word: word.clone(),
                });
            } else {
                dropped += 1;
            }
        }
    }
    if rows.len() <= knn {
        return Err(Error::Config(format!(
            "too few points for PHATE: {} distinct points, knn = {knn} needs at least {}",
            rows.len(),
            knn + 1
        )));
    }
    let mut matrix = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    standardize(&mut matrix);
    add_noise(&mut matrix, seed);
    Ok(Prepared {
        matrix,
        labels,
        dropped_duplicates: dropped,
    })
}
