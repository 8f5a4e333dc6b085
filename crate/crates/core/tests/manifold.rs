mod common;

use std::time::Instant;

use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use semaffinity::manifold::{
    alpha_decay_kernel, diffusion_operator, matrix_power, mds_embed, pairwise_distances, phate_fit,
    select_t, von_neumann_entropy, DiffusionOperator, DiffusionTime, PhateConfig,
};

fn three_clusters() -> (DMatrix<f64>, Vec<usize>) {
    clusters(3, 100, 10, 10.0, 11)
}

#[test]
fn fit_is_deterministic() {
    let (x, _) = three_clusters();
    let sets = [matrix_set("a", &x)];
    let config = PhateConfig::default();
    let a = phate_fit(&sets, &config).unwrap();
    let b = phate_fit(&sets, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn three_clusters_separate() {
    let (x, labels) = three_clusters();
    let layout = phate_fit(&[matrix_set("a", &x)], &PhateConfig::default()).unwrap();
    assert_eq!(layout.coordinates.len(), 300);
    assert!(layout
        .coordinates
        .iter()
        .all(|r| r.len() == 2 && r.iter().all(|v| v.is_finite())));
    let s = silhouette(&layout.coordinates, &labels);
    assert!(s > 0.3, "silhouette {s}");
}

#[test]
fn diffusion_rows_sum_to_one_at_every_power() {
    let (x, _) = three_clusters();
    let k = alpha_decay_kernel(&x, 15, 40.0).unwrap();
    let op = diffusion_operator(&k).unwrap();
    let sel = select_t(&op, 100).unwrap();
    for t in [1, 2, 3, sel.chosen_t, 17, 100] {
        let pt = matrix_power(&op.p, t);
        for i in 0..pt.nrows() {
            let s = pt.row(i).sum();
            assert!((s - 1.0).abs() < 1e-12, "t = {t}, row {i}: {s}");
        }
    }
}

#[test]
fn mds_recovers_planted_plane() {
    let mut r = rng(5);
    let y = DMatrix::from_fn(60, 2, |_, _| r.random_range(-3.0..3.0));
    let d = pairwise_distances(&y);
    let m = mds_embed(&d, 2).unwrap();
    assert_eq!(m.coordinates.ncols(), 2);
    let res = procrustes_residual(&m.coordinates, &y);
    assert!(res < 1e-6, "procrustes residual {res}");
}

#[test]
fn mds_all_equal_points() {
    let d = DMatrix::zeros(7, 7);
    let m = mds_embed(&d, 2).unwrap();
    assert!(m.degenerate);
    let first = m.coordinates.row(0).clone_owned();
    for i in 1..7 {
        assert_eq!(m.coordinates.row(i), first);
    }
}

fn random_operator(n: usize, seed: u64) -> DiffusionOperator {
    let mut r = rng(seed);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = r.random_range(0.0..1.0);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    diffusion_operator(&k).unwrap()
}

#[test]
fn entropy_is_non_increasing() {
    for seed in 0..5 {
        let op = random_operator(20, seed);
        // direct spectrum of D^{-1/2} K D^{-1/2}, where K = D P
        let n = op.len();
        let s = DMatrix::from_fn(n, n, |i, j| {
            op.p[(i, j)] * op.degrees[i] / (op.degrees[i] * op.degrees[j]).sqrt()
        });
        let spectrum: Vec<f64> = s.symmetric_eigenvalues().iter().map(|x| x.abs()).collect();
        let sel = select_t(&op, 100).unwrap();
        assert_eq!(sel.entropy_curve.len(), 100);
        assert!((1..=100).contains(&sel.chosen_t));
        for (t, h) in &sel.entropy_curve {
            assert!((h - von_neumann_entropy(&spectrum, *t)).abs() < 1e-9);
        }
        for w in sel.entropy_curve.windows(2) {
            assert!(
                w[1].1 <= w[0].1 + 1e-12,
                "H({}) = {} > H({}) = {}",
                w[1].0,
                w[1].1,
                w[0].0,
                w[0].1
            );
        }
    }
}

#[test]
fn two_clusters_plateau_near_log_two() {
    let (x, _) = clusters(2, 60, 5, 30.0, 3);
    let k = alpha_decay_kernel(&x, 10, 40.0).unwrap();
    let op = diffusion_operator(&k).unwrap();
    let sel = select_t(&op, 100).unwrap();
    let h_end = sel.entropy_curve.last().unwrap().1;
    assert!((h_end - 2f64.ln()).abs() < 0.05, "H(t_max) = {h_end}");
    let plateau = sel
        .entropy_curve
        .iter()
        .find(|(_, h)| (h - 2f64.ln()).abs() < 0.05)
        .unwrap()
        .0;
    assert!(
        sel.chosen_t <= plateau,
        "knee {} plateau {}",
        sel.chosen_t,
        plateau
    );
}

#[test]
fn chosen_t_stable_under_tiny_perturbation() {
    let (x, _) = three_clusters();
    let mut r = rng(99);
    let y = x.map(|v| v + 1e-8 * r.random_range(-1.0..1.0));
    let config = PhateConfig::default();
    let a = phate_fit(&[matrix_set("a", &x)], &config).unwrap();
    let b = phate_fit(&[matrix_set("a", &y)], &config).unwrap();
    assert!(a.chosen_t.abs_diff(b.chosen_t) <= 1);
}

#[test]
fn layout_invariant_under_reordering() {
    let (x, _) = clusters(3, 40, 6, 8.0, 21);
    let n = x.nrows();
    let perm: Vec<usize> = (0..n).map(|i| (i * 37 + 5) % n).collect();
    let y = DMatrix::from_fn(n, x.ncols(), |i, j| x[(perm[i], j)]);
    let config = PhateConfig {
        knn: 10,
        ..PhateConfig::default()
    };
    let a = phate_fit(&[matrix_set("a", &x)], &config).unwrap();
    let b = phate_fit(&[matrix_set("a", &y)], &config).unwrap();
    assert_eq!(a.chosen_t, b.chosen_t);
    let a_perm = DMatrix::from_fn(n, 2, |i, j| a.coordinates[perm[i]][j]);
    let res = procrustes_residual(&rows_to_matrix(&b.coordinates), &a_perm);
    assert!(res < 1e-6, "procrustes residual {res}");
}

#[test]
fn fixed_t_skips_selection() {
    let (x, _) = clusters(2, 20, 4, 8.0, 1);
    let config = PhateConfig {
        knn: 5,
        t: DiffusionTime::Fixed(7),
        ..PhateConfig::default()
    };
    let layout = phate_fit(&[matrix_set("a", &x)], &config).unwrap();
    assert_eq!(layout.chosen_t, 7);
    assert!(layout.entropy_curve.is_empty());
}

#[test]
fn labels_follow_languages() {
    let (x, _) = clusters(2, 20, 4, 8.0, 2);
    let top = x.rows(0, 20).into_owned();
    let bottom = x.rows(20, 20).into_owned();
    let layout = phate_fit(
        &[matrix_set("chn", &top), matrix_set("enu", &bottom)],
        &PhateConfig {
            knn: 5,
            ..PhateConfig::default()
        },
    )
    .unwrap();
    assert_eq!(layout.labels.len(), layout.coordinates.len());
    assert_eq!(layout.labels[0].language.as_str(), "chn");
    assert_eq!(layout.labels[39].language.as_str(), "enu");
}

#[test]
fn too_few_points_is_an_error() {
    let (x, _) = clusters(1, 10, 3, 0.0, 4);
    assert!(phate_fit(&[matrix_set("a", &x)], &PhateConfig::default()).is_err());
}

#[test]
fn thousand_points_within_budget() {
    let (x, _) = clusters(4, 250, 50, 10.0, 8);
    let start = Instant::now();
    let layout = phate_fit(&[matrix_set("a", &x)], &PhateConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    eprintln!("n = 1000 PHATE fit: {secs:.2} s, t = {}", layout.chosen_t);
    assert_eq!(layout.coordinates.len(), 1000);
    assert!(secs < 60.0, "{secs} s");
}
