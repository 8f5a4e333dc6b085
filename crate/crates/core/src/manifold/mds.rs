use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const SMACOF_TOLERANCE: f64 = 1e-6;
pub const SMACOF_MAX_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct MdsResult {
    /// n × n_components.
    pub coordinates: DMatrix<f64>,
    /// Raw stress `Σ_{i<j} (D_ij − ‖x_i − x_j‖)²` at exit.
    pub stress: f64,
    pub iterations: usize,
    /// Set when every input distance is zero; all points sit at the origin.
    pub degenerate: bool,
}

fn validate(d: &DMatrix<f64>) -> Result<()> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::Numerical("distance matrix must be square".into()));
    }
    for i in 0..n {
        if d[(i, i)] != 0.0 {
            return Err(Error::Numerical(format!("nonzero diagonal at {i}")));
        }
        for j in i + 1..n {
            let v = d[(i, j)];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Numerical(format!("invalid distance at ({i}, {j})")));
            }
            if (v - d[(j, i)]).abs() > 1e-12 * v.max(1.0) {
                return Err(Error::Numerical(format!(
                    "distance matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Classical (Torgerson) MDS. Each axis is signed so its largest-magnitude
/// entry is positive.
pub fn classical_mds(d: &DMatrix<f64>, n_components: usize) -> Result<DMatrix<f64>> {
    let n = d.nrows();
    let sq = d.map(|x| x * x);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    let eig = b.symmetric_eigen();
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "eigendecomposition did not converge".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut x = DMatrix::zeros(n, n_components);
    for (c, &k) in order.iter().take(n_components).enumerate() {
        let lambda = eig.eigenvalues[k].max(0.0);
        let v = eig.eigenvectors.column(k);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * lambda.sqrt();
        for i in 0..n {
            x[(i, c)] = v[i] * scale;
        }
    }
    Ok(x)
}

fn embedded_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                let diff = x[(i, c)] - x[(j, c)];
                s += diff * diff;
            }
            let v = s.sqrt();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn stress(d: &DMatrix<f64>, e: &DMatrix<f64>) -> f64 {
    let n = d.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = d[(i, j)] - e[(i, j)];
            s += r * r;
        }
    }
    s
}

/// Guttman transform with unit weights: `X ← B(X) X / n`.
fn guttman(d: &DMatrix<f64>, e: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let k = x.ncols();
    let mut out = DMatrix::zeros(n, k);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if j == i || e[(i, j)] == 0.0 {
                continue;
            }
            let b = d[(i, j)] / e[(i, j)];
            diag += b;
            for c in 0..k {
                out[(i, c)] -= b * x[(j, c)];
            }
        }
        for c in 0..k {
            out[(i, c)] += diag * x[(i, c)];
        }
    }
    out / n as f64
}

/// Classical MDS start refined by SMACOF until the relative stress
/// improvement drops below 1e-6 or 300 iterations.
pub fn mds_embed(d: &DMatrix<f64>, n_components: usize) -> Result<MdsResult> {
    if n_components == 0 {
        return Err(Error::Config("n_components must be at least 1".into()));
    }
    validate(d)?;
    let n = d.nrows();
    if d.iter().all(|&v| v == 0.0) {
        return Ok(MdsResult {
            coordinates: DMatrix::zeros(n, n_components),
            stress: 0.0,
            iterations: 0,
            degenerate: true,
        });
    }
    let mut x = classical_mds(d, n_components)?;
    let mut e = embedded_distances(&x);
    let mut current = stress(d, &e);
    let mut iterations = 0;
    while iterations < SMACOF_MAX_ITER && current > 0.0 {
        let next_x = guttman(d, &e, &x);
        let next_e = embedded_distances(&next_x);
        let next = stress(d, &next_e);
        iterations += 1;
        if next > current {
            break;
        }
        let improvement = (current - next) / current;
        x = next_x;
        e = next_e;
        current = next;
        if improvement < SMACOF_TOLERANCE {
            break;
        }
    }
    Ok(MdsResult {
        coordinates: x,
        stress: current,
        iterations,
        degenerate: false,
    })
}
