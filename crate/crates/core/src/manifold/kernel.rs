use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows())
        .map(|i| x.row(i).iter().copied().collect())
        .collect()
}

/// Dense Euclidean distance matrix between the rows of `x`.
pub fn pairwise_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = rows_of(x);
    euclidean_rows(&rows)
}

pub(crate) fn euclidean_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &rows[i];
            rows[i + 1..]
                .iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Distance from each point to its k-th nearest other point.
pub fn knn_bandwidths(distances: &DMatrix<f64>, knn: usize) -> Result<Vec<f64>> {
    let n = distances.nrows();
    if knn == 0 || knn >= n {
        return Err(Error::Config(format!(
            "knn must be in 1..{n} for {n} points, got {knn}"
        )));
    }
    (0..n)
        .map(|i| {
            let mut others: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| distances[(i, j)])
                .collect();
            let (_, kth, _) = others.select_nth_unstable_by(knn - 1, f64::total_cmp);
            if *kth <= 0.0 {
                return Err(Error::Numerical(format!(
                    "point {i} has a zero kNN bandwidth (duplicate points)"
                )));
            }
            Ok(*kth)
        })
        .collect()
}

/// `K(x, y) = ½[exp(−(d/ε_x)^α) + exp(−(d/ε_y)^α)]` with ε the kNN bandwidth.
pub fn alpha_decay_from_distances(
    distances: &DMatrix<f64>,
    knn: usize,
    decay: f64,
) -> Result<DMatrix<f64>> {
    if !(decay > 0.0) {
        return Err(Error::Config(format!(
            "decay must be positive, got {decay}"
        )));
    }
    let eps = knn_bandwidths(distances, knn)?;
    let n = distances.nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in i + 1..n {
            let d = distances[(i, j)];
            let v = 0.5 * ((-(d / eps[i]).powf(decay)).exp() + (-(d / eps[j]).powf(decay)).exp());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub fn alpha_decay_kernel(x: &DMatrix<f64>, knn: usize, decay: f64) -> Result<DMatrix<f64>> {
    alpha_decay_from_distances(&pairwise_distances(x), knn, decay)
}
