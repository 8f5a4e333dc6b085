use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::euclidean_rows;
use crate::error::{Error, Result};

/// Floor added inside the log of the potential transform.
pub const POTENTIAL_FLOOR: f64 = 1e-12;

/// Row-stochastic `P = D⁻¹K`, keeping the degrees so the symmetric
/// conjugate `D^{-1/2} K D^{-1/2}` can be recovered for spectral work.
#[derive(Clone, Debug)]
pub struct DiffusionOperator {
    pub p: DMatrix<f64>,
    pub degrees: DVector<f64>,
}

impl DiffusionOperator {
    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    /// `A_ij = P_ij · sqrt(d_i / d_j)`, symmetrized against rounding.
    pub fn symmetric_conjugate(&self) -> DMatrix<f64> {
        let n = self.len();
        let sqrt_d: Vec<f64> = self.degrees.iter().map(|d| d.sqrt()).collect();
        let a = DMatrix::from_fn(n, n, |i, j| self.p[(i, j)] * sqrt_d[i] / sqrt_d[j]);
        (&a + a.transpose()) * 0.5
    }
}

pub fn diffusion_operator(k: &DMatrix<f64>) -> Result<DiffusionOperator> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::Numerical("affinity matrix must be square".into()));
    }
    let mut degrees = DVector::zeros(n);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = k[(i, j)];
            if !(v >= 0.0) {
                return Err(Error::Numerical(format!(
                    "negative or NaN affinity at ({i}, {j})"
                )));
            }
            if (v - k[(j, i)]).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(Error::Numerical(format!(
                    "affinity matrix not symmetric at ({i}, {j})"
                )));
            }
            sum += v;
        }
        if !(sum > 0.0) {
            return Err(Error::Numerical(format!(
                "row {i} of the affinity matrix sums to zero"
            )));
        }
        degrees[i] = sum;
    }
    let p = DMatrix::from_fn(n, n, |i, j| k[(i, j)] / degrees[i]);
    Ok(DiffusionOperator { p, degrees })
}

/// `m^t` by repeated squaring.
pub fn matrix_power(m: &DMatrix<f64>, t: usize) -> DMatrix<f64> {
    assert!(t >= 1, "power must be at least 1");
    let mut result: Option<DMatrix<f64>> = None;
    let mut base = m.clone();
    let mut e = t;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => &r * &base,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
    }
    result.expect("t >= 1")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSelection {
    pub chosen_t: usize,
    /// `(t, H(t))` for t in 1..=t_max.
    pub entropy_curve: Vec<(usize, f64)>,
}

/// Nonnegative diffusion spectrum: |eigenvalues| of the symmetric conjugate,
/// sorted descending.
pub fn diffusion_spectrum(op: &DiffusionOperator) -> Result<Vec<f64>> {
    let eig = op.symmetric_conjugate().symmetric_eigenvalues();
    if eig.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "eigendecomposition did not converge".into(),
        ));
    }
    let mut s: Vec<f64> = eig.iter().map(|x| x.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Von Neumann entropy of the spectrum raised to the power `t`.
pub fn von_neumann_entropy(spectrum: &[f64], t: usize) -> f64 {
    let powered: Vec<f64> = spectrum.iter().map(|s| s.powi(t as i32)).collect();
    let total: f64 = powered.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -powered
        .iter()
        .map(|p| p / total)
        .filter(|&eta| eta > 0.0)
        .map(|eta| eta * eta.ln())
        .sum::<f64>()
}

/// Index of the point farthest from the chord joining the first and last
/// points of the curve. First index wins ties.
pub fn knee_index(curve: &[(f64, f64)]) -> usize {
    let n = curve.len();
    if n < 3 {
        return 0;
    }
    let (x1, y1) = curve[0];
    let (x2, y2) = curve[n - 1];
    let (dx, dy) = (x2 - x1, y2 - y1);
    let norm = (dx * dx + dy * dy).sqrt();
    if norm == 0.0 {
        return 0;
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &(x, y)) in curve.iter().enumerate() {
        let dist = (dx * (y1 - y) - (x1 - x) * dy).abs() / norm;
        if dist > best.1 {
            best = (i, dist);
        }
    }
    best.0
}

/// Chooses the diffusion time at the knee of the entropy curve H(t).
pub fn select_t(op: &DiffusionOperator, t_max: usize) -> Result<TimeSelection> {
    if t_max < 1 {
        return Err(Error::Config("t_max must be at least 1".into()));
    }
    let spectrum = diffusion_spectrum(op)?;
    let entropy_curve: Vec<(usize, f64)> = (1..=t_max)
        .map(|t| (t, von_neumann_entropy(&spectrum, t)))
        .collect();
    let points: Vec<(f64, f64)> = entropy_curve.iter().map(|&(t, h)| (t as f64, h)).collect();
    let chosen_t = entropy_curve[knee_index(&points)].0;
    Ok(TimeSelection {
        chosen_t,
        entropy_curve,
    })
}

/// Euclidean distances between rows of `−log(Pᵗ + 1e-12)`.
pub fn potential_distances(op: &DiffusionOperator, t: usize) -> Result<DMatrix<f64>> {
    if t < 1 {
        return Err(Error::Config("diffusion time must be at least 1".into()));
    }
    let pt = matrix_power(&op.p, t);
    let n = pt.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| -(pt[(i, j)].max(0.0) + POTENTIAL_FLOOR).ln())
                .collect()
        })
        .collect();
    Ok(euclidean_rows(&rows))
}
