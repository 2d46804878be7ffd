//! Linear-algebra and graph-generator properties.

use diffpoly::graphmodels::{diffusion_operator, erdos_renyi, random_geometric, ring};
use diffpoly::matcore::{eig_sym, frob_norm, mat_power, matrix_csv_string, read_matrix_csv, trace, SymMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sym_matrix(max_n: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-10.0f64..10.0, n * n)
            .prop_map(move |v| SymMatrix::from_upper_fn(n, |i, j| v[i * n + j]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(a in sym_matrix(50)) {
        let b = eig_sym(&a).unwrap();
        let scale = frob_norm(&a).max(1.0);
        prop_assert!(frob_norm(&b.compose(b.values()).sub(&a)) <= 1e-9 * scale);
        prop_assert!(b.orthonormality_error() <= 1e-10 * a.n() as f64);
        prop_assert!(b.values().windows(2).all(|w| w[0] >= w[1]));
        let sum: f64 = b.values().iter().sum();
        prop_assert!((sum - trace(&a)).abs() <= 1e-9 * scale);
        for k in 0..a.n() {
            let v = b.vector(k);
            let av = a.matvec(&v);
            let res: f64 = av.iter().zip(&v).map(|(x, y)| (x - b.values()[k] * y).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-9 * frob_norm(&a).max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn power_matches_spectral_route(a in sym_matrix(20), k in 0u32..=20) {
        // spectral radius at most 1 keeps the comparison on an absolute scale
        let b = eig_sym(&a).unwrap();
        let rho = b.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let a = a.scaled(1.0 / rho);
        let b = eig_sym(&a).unwrap();
        let lam: Vec<f64> = b.values().iter().map(|v| v.powi(k as i32)).collect();
        prop_assert!(mat_power(&a, k).max_abs_diff(&b.compose(&lam)) <= 1e-8);
    }

    #[test]
    fn matrix_csv_round_trip(a in sym_matrix(8)) {
        let back = read_matrix_csv(matrix_csv_string(&a).as_bytes()).unwrap();
        prop_assert_eq!(back, a);
    }
}

#[test]
fn eigendecomposition_is_deterministic_with_sign_convention() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = diffusion_operator(&random_geometric(12, 0.5, &mut rng).unwrap()).unwrap();
    let a = eig_sym(&t.t).unwrap();
    assert_eq!(a, eig_sym(&t.t).unwrap());
    for k in 0..a.n() {
        let v = a.vector(k);
        let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = v.iter().position(|x| x.abs() == big).unwrap();
        assert!(v[first] >= 0.0);
    }
}

#[test]
fn paper_example_power_matches_eigen_route() {
    let w = SymMatrix::from_rows(&[vec![0.417, 0.302, 0.186], vec![0.302, 0.147, 0.346], vec![0.186, 0.346, 0.397]])
        .unwrap();
    let t = diffusion_operator(&diffpoly::AdjacencyMatrix::new(w).unwrap()).unwrap();
    let sq: Vec<f64> = t.basis.values().iter().map(|v| v * v).collect();
    assert!(mat_power(&t.t, 2).max_abs_diff(&t.basis.compose(&sq)) < 1e-10);
}

/// The eigenvector for eigenvalue 1 is `(√(D_uu / trace D))_u` up to sign.
#[test]
fn constant_sign_eigenvector_matches_degrees() {
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_geometric(10, 0.6, &mut rng).unwrap();
        let t = diffusion_operator(&w).unwrap();
        let deg = w.degrees();
        let total: f64 = deg.iter().sum();
        let chi = t.basis.vector(0);
        let sign = chi[0].signum();
        for (c, d) in chi.iter().zip(&deg) {
            assert!((sign * c - (d / total).sqrt()).abs() <= 1e-8, "seed {seed}");
        }
    }
}

#[test]
fn generated_spectra_lie_in_unit_interval() {
    for seed in 0..1000 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_geometric(10, 0.6, &mut rng).unwrap();
        for i in 0..10 {
            assert_eq!(w.w.get(i, i), 0.0);
            for j in 0..10 {
                assert_eq!(w.w.get(i, j), w.w.get(j, i));
            }
        }
        let t = diffusion_operator(&w).unwrap();
        assert!(t.basis.values().iter().all(|v| v.abs() <= 1.0 + 1e-9));
        assert!((t.basis.values()[0] - 1.0).abs() <= 1e-9);
        // connected and (almost surely) not bipartite: a single eigenvalue at 1
        assert!(t.basis.values()[1] < 1.0 - 1e-9, "seed {seed}");
    }
}

#[test]
fn erdos_renyi_edge_count_is_binomial() {
    let n = 20;
    let p = (20f64).ln() / 20.0 * 1.5;
    let pairs = (n * (n - 1) / 2) as f64;
    let sd = (pairs * p * (1.0 - p)).sqrt();
    let counts: Vec<f64> = (0..1000)
        .map(|seed| erdos_renyi(n, p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().edge_count() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    // rejecting disconnected draws nudges the mean up by well under one edge
    assert!((mean - p * pairs).abs() < 3.0 * sd / (counts.len() as f64).sqrt() + 1.0, "mean {mean}");
    let outside = counts.iter().filter(|c| (*c - p * pairs).abs() > 3.0 * sd).count();
    assert!(outside <= 10, "{outside} draws beyond 3 sigma");
}

#[test]
fn geometric_regression_fixture() {
    // topology of the seed-42 draw, pinned to catch generator drift
    let w = random_geometric(10, 0.6, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
    assert!(w.is_connected());
    assert_eq!(w.edge_count(), FIXTURE_EDGES);
    assert!(w.w.as_slice().iter().all(|&v| v == 0.0 || v >= 1.0 / 0.6));
}

const FIXTURE_EDGES: usize = 43;

#[test]
fn ring_spectrum_is_cosine() {
    for n in [3usize, 5, 8, 11] {
        let t = diffusion_operator(&ring(n).unwrap()).unwrap();
        let mut expected: Vec<f64> =
            (0..n).map(|k| (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in t.basis.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
