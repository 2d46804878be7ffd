//! Statistical behaviour of diffused signals and their sample covariance.

use diffpoly::graphmodels::{diffusion_operator, random_geometric};
use diffpoly::matcore::{eig_sym, SymMatrix};
use diffpoly::seeding::stream;
use diffpoly::signals::{
    anderson_variance, generate_observations, sample_covariance, streaming_covariance, DiffusionCounts,
    SourceDistribution,
};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean_top3_cosine(source: SourceDistribution) -> f64 {
    let mut total = 0.0;
    let trials = 100;
    for trial in 0..trials {
        let mut rng = stream(11, "cosine", &[trial]);
        let t = diffusion_operator(&random_geometric(10, 0.6, &mut rng).unwrap()).unwrap();
        let cov = streaming_covariance(&t.t, 100_000, DiffusionCounts::new(1, 10).unwrap(), source, &mut rng).unwrap();
        // the covariance ranks eigenvectors by |λ|
        let mut order: Vec<usize> = (0..10).collect();
        order.sort_by(|&a, &b| t.basis.values()[b].abs().total_cmp(&t.basis.values()[a].abs()));
        for (i, &k) in order.iter().take(3).enumerate() {
            total += dot(&cov.basis.vector(i), &t.basis.vector(k)).abs();
        }
    }
    total / (3 * trials) as f64
}

#[test]
fn sample_eigenvectors_approach_the_operator_basis() {
    let gaussian = mean_top3_cosine(SourceDistribution::Gaussian);
    assert!(gaussian > 0.95, "gaussian source: mean |cos| = {gaussian}");
    // A uniform [0, 1] source has a nonzero mean. With k random, the mean
    // term T^k μ fluctuates from column to column and adds a covariance
    // component that does not commute with T, so the limit is only close
    // to T's basis (about 0.93 here), not equal to it.
    let uniform = mean_top3_cosine(SourceDistribution::Uniform);
    assert!(uniform > 0.9, "uniform source: mean |cos| = {uniform}");
}

/// Empirical variance of `χ_iᵀ χ̂_j` against the asymptotic Gaussian law.
#[test]
fn anderson_law_holds_within_factor_two() {
    let q = eig_sym(&SymMatrix::from_upper_fn(5, |i, j| ((i * 7 + j * 3) % 5) as f64 + if i == j { 2.0 } else { 0.0 }))
        .unwrap();
    let lam_t = [1.0, 0.8, 0.6, 0.4, 0.2];
    let t = q.compose(&lam_t);
    // one diffusion of unit-variance white noise: covariance T², eigenvalues λ²
    let cov_values: Vec<f64> = lam_t.iter().map(|l| l * l).collect();
    let m = 10_000;
    let reps = 2000;
    let pairs = [(0usize, 1usize), (1, 2), (2, 3), (0, 4)];
    let mut samples = vec![Vec::with_capacity(reps); pairs.len()];
    for rep in 0..reps {
        let mut rng = stream(5, "anderson", &[rep as u64]);
        let cov = streaming_covariance(&t, m, DiffusionCounts::fixed(1).unwrap(), SourceDistribution::Gaussian, &mut rng)
            .unwrap();
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let chi_j_hat = cov.basis.vector(j);
            let sign = dot(&chi_j_hat, &q.vector(j)).signum();
            samples[p].push(sign * dot(&q.vector(i), &chi_j_hat));
        }
    }
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let s = &samples[p];
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
        let law = anderson_variance(cov_values[i], cov_values[j], m).unwrap();
        let ratio = var / law;
        assert!((0.5..=2.0).contains(&ratio), "pair ({i},{j}): empirical {var:e} vs law {law:e}");
    }
}

#[test]
fn covariance_ignores_column_order() {
    let mut rng = stream(3, "perm", &[]);
    let t = diffusion_operator(&random_geometric(8, 0.6, &mut rng).unwrap()).unwrap();
    let obs = generate_observations(&t.t, 50, DiffusionCounts::new(1, 10).unwrap(), SourceDistribution::Uniform, &mut rng)
        .unwrap();
    let perm: Vec<usize> = (0..50).map(|i| (i * 17 + 3) % 50).collect();
    let a = sample_covariance(&obs).unwrap().sigma;
    let b = sample_covariance(&obs.permute_columns(&perm).unwrap()).unwrap().sigma;
    assert!(a.max_abs_diff(&b) < 1e-14);
}

#[test]
fn streaming_and_batch_agree_on_large_draws() {
    let mut rng = stream(4, "agree", &[]);
    let t = diffusion_operator(&random_geometric(10, 0.6, &mut rng).unwrap()).unwrap();
    let counts = DiffusionCounts::new(1, 10).unwrap();
    let mut a = stream(4, "draw", &[]);
    let mut b = stream(4, "draw", &[]);
    let obs = generate_observations(&t.t, 5000, counts, SourceDistribution::Uniform, &mut a).unwrap();
    let batch = sample_covariance(&obs).unwrap();
    let streamed = streaming_covariance(&t.t, 5000, counts, SourceDistribution::Uniform, &mut b).unwrap();
    assert!(batch.sigma.max_abs_diff(&streamed.sigma) < 1e-12);
}
