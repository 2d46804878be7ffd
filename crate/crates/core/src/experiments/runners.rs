//! Per-trial bodies of the experiments.

use rand::Rng;

use super::config::{ExperimentConfig, ExperimentKind, GraphFamily, SampleCount};
use super::Measurement;
use crate::error::{Error, Result};
use crate::graphmodels::{
    diffusion_operator, erdos_renyi, random_geometric, ring, uniform_dense, AdjacencyMatrix, DiffusionOperator,
    MAX_GENERATION_ATTEMPTS,
};
use crate::matcore::{Eigenbasis, SymMatrix};
use crate::metrics::{align_by_magnitude, diff_simple, diff_sparse, edge_score, mepre, repre_search};
use crate::polytope::{build_constraints, is_member, reconstruct, EigenvalueVector};
use crate::seeding::stream;
use crate::select::{hypothesis_test, normalize_candidate, rank_candidates, solve, Strategy};
use crate::signals::{generate_observations, streaming_covariance, DiffusionCounts, SourceDistribution};

pub(super) fn columns(kind: ExperimentKind) -> (Vec<&'static str>, Vec<&'static str>) {
    match kind {
        ExperimentKind::InclusionRatio => (vec!["k", "m", "tolerance"], vec!["ratio"]),
        ExperimentKind::SimpleConvergence | ExperimentKind::SparseStudy => (
            vec!["m"],
            vec![
                "mepre",
                "repre",
                "diff_simple",
                "diff_sparse",
                "recall",
                "precision",
                "f_measure",
                "repre_integer_power",
                "degenerate",
                "iterations",
            ],
        ),
        ExperimentKind::Scaling => (vec!["model", "n", "m", "strategy"], vec!["f_measure", "mepre"]),
        ExperimentKind::Hypothesis => (vec!["m"], vec!["success_ratio", "truth_rank", "projection_failures"]),
    }
}

pub(super) fn run_trial(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Measurement>> {
    match cfg.experiment {
        ExperimentKind::InclusionRatio => inclusion_trial(cfg, seed),
        ExperimentKind::SimpleConvergence => selection_trial(cfg, seed, Strategy::Simple),
        ExperimentKind::SparseStudy => selection_trial(cfg, seed, Strategy::Sparse),
        ExperimentKind::Scaling => scaling_trial(cfg, seed),
        ExperimentKind::Hypothesis => hypothesis_trial(cfg, seed),
    }
}

pub fn draw_graph<R: Rng + ?Sized>(
    family: GraphFamily,
    n: usize,
    radius: f64,
    probability: f64,
    rng: &mut R,
) -> Result<AdjacencyMatrix> {
    match family {
        GraphFamily::Geometric => random_geometric(n, radius, rng),
        GraphFamily::ErdosRenyi => erdos_renyi(n, probability, rng),
        GraphFamily::Ring => ring(n),
        GraphFamily::Uniform => uniform_dense(n, rng),
    }
}

/// The eigenbasis the selection works in: the operator's own for
/// [`SampleCount::Exact`], otherwise that of the sample covariance.
pub fn observed_basis<R: Rng + ?Sized>(
    t: &DiffusionOperator,
    m: SampleCount,
    counts: DiffusionCounts,
    source: SourceDistribution,
    rng: &mut R,
) -> Result<Eigenbasis> {
    match m {
        SampleCount::Exact => Ok(t.basis.clone()),
        SampleCount::Finite(m) => Ok(streaming_covariance(&t.t, m, counts, source, rng)?.basis),
    }
}

/// Ground-truth eigenvalues in the column order of [`observed_basis`]. The
/// sample covariance ranks eigenvectors by `|λ|`, the exact basis by `λ`.
pub fn ground_truth_for(t: &DiffusionOperator, m: SampleCount) -> EigenvalueVector {
    match m {
        SampleCount::Exact => EigenvalueVector(t.basis.values().to_vec()),
        SampleCount::Finite(_) => align_by_magnitude(t.basis.values()),
    }
}

fn operator(cfg: &ExperimentConfig, seed: u64) -> Result<DiffusionOperator> {
    let mut rng = stream(seed, "graph", &[]);
    let w = draw_graph(cfg.model, cfg.n, cfg.radius, cfg.probability, &mut rng)?;
    diffusion_operator(&w)
}

fn inclusion_trial(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Measurement>> {
    let t = operator(cfg, seed)?;
    let mut tolerances = vec![cfg.tolerance];
    tolerances.extend(cfg.sensitivity.iter().filter(|s| **s != cfg.tolerance));
    let mut out = Vec::new();
    for &k in &cfg.k {
        for &m in &cfg.m {
            let mut rng = stream(seed, "signals", &[k as u64, m.seed_key()]);
            let basis = observed_basis(&t, m, DiffusionCounts::fixed(k)?, cfg.source, &mut rng);
            let member = basis.map(|b| {
                let c = build_constraints(&b);
                let truth = ground_truth_for(&t, m);
                tolerances.iter().map(|&tol| is_member(&c, &truth, tol)).collect::<Vec<_>>()
            });
            for (i, tol) in tolerances.iter().enumerate() {
                out.push(Measurement {
                    group: vec![k.to_string(), m.to_string(), format!("{tol:?}")],
                    values: match &member {
                        Ok(v) => Ok(vec![f64::from(u8::from(v[i]))]),
                        Err(e) => Err(e.to_string()),
                    },
                });
            }
        }
    }
    Ok(out)
}

struct Selected {
    truth: EigenvalueVector,
    lam: EigenvalueVector,
    t_hat: SymMatrix,
    degenerate: bool,
    iterations: usize,
}

fn select_for(t: &DiffusionOperator, m: SampleCount, basis: &Eigenbasis, strategy: Strategy) -> Result<Selected> {
    let c = build_constraints(basis);
    let sel = solve(&c, strategy)?;
    let t_hat = reconstruct(basis, &sel.lam)?;
    Ok(Selected {
        truth: ground_truth_for(t, m),
        degenerate: sel.is_degenerate(),
        iterations: sel.iterations,
        lam: sel.lam,
        t_hat,
    })
}

fn selection_metrics(t: &DiffusionOperator, s: &Selected) -> Result<Vec<f64>> {
    let score = edge_score(&t.t, &s.t_hat)?;
    let fit = repre_search(&s.truth, &s.lam)?;
    Ok(vec![
        mepre(&t.t, &s.t_hat)?,
        fit.value,
        diff_simple(&t.t, &s.t_hat)?,
        diff_sparse(&t.t, &s.t_hat)?,
        score.recall,
        score.precision,
        score.f_measure,
        f64::from(u8::from(fit.integer)),
        f64::from(u8::from(s.degenerate)),
        s.iterations as f64,
    ])
}

fn selection_trial(cfg: &ExperimentConfig, seed: u64, strategy: Strategy) -> Result<Vec<Measurement>> {
    let t = operator(cfg, seed)?;
    let counts = DiffusionCounts::new(cfg.k_min, cfg.k_max)?;
    let mut out = Vec::new();
    for &m in &cfg.m {
        let mut rng = stream(seed, "signals", &[m.seed_key()]);
        let values = observed_basis(&t, m, counts, cfg.source, &mut rng)
            .and_then(|b| select_for(&t, m, &b, strategy))
            .and_then(|s| selection_metrics(&t, &s));
        if let Err(e) = &values {
            log::debug!("seed {seed} m={m}: {e}");
        }
        out.push(Measurement { group: vec![m.to_string()], values: values.map_err(|e| e.to_string()) });
    }
    Ok(out)
}

/// Radius and edge probability for order `n`: `R ∝ 1/√N` anchored at the
/// configured radius for N = 10, and `P = er_scale · ln N / N`.
pub(super) fn scaled_parameters(cfg: &ExperimentConfig, n: usize) -> (f64, f64) {
    let radius = cfg.radius * (10.0 / n as f64).sqrt();
    let p = (cfg.er_scale * (n as f64).ln() / n as f64).min(1.0);
    (radius, p)
}

fn scaling_trial(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Measurement>> {
    let counts = DiffusionCounts::new(cfg.k_min, cfg.k_max)?;
    let mut out = Vec::new();
    for &family in &cfg.models {
        for &n in &cfg.n_list {
            let (radius, p) = scaled_parameters(cfg, n);
            let mut graph_rng = stream(seed, &format!("graph-{family}"), &[n as u64]);
            let t = draw_graph(family, n, radius, p, &mut graph_rng)
                .and_then(|w| diffusion_operator(&w))
                .map_err(|e| e.to_string());
            for &m in &cfg.m {
                let mut rng = stream(seed, &format!("signals-{family}"), &[n as u64, m.seed_key()]);
                let basis = t
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|t| observed_basis(t, m, counts, cfg.source, &mut rng).map_err(|e| e.to_string()));
                for strategy in [Strategy::Simple, Strategy::Sparse] {
                    let values = match (&t, &basis) {
                        (Ok(t), Ok(b)) => select_for(t, m, b, strategy)
                            .and_then(|s| Ok(vec![edge_score(&t.t, &s.t_hat)?.f_measure, mepre(&t.t, &s.t_hat)?]))
                            .map_err(|e| e.to_string()),
                        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                    };
                    let name = match strategy {
                        Strategy::Simple => "simple",
                        Strategy::Sparse => "sparse",
                    };
                    out.push(Measurement {
                        group: vec![family.to_string(), n.to_string(), m.to_string(), name.to_string()],
                        values,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Half geometric graphs and half Erdős–Rényi graphs with their parameter
/// uniform in `[param_min, param_max]`; a parameter whose draws all come out
/// disconnected is replaced by a fresh one.
pub(super) fn hypothesis_candidates(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<DiffusionOperator>> {
    let mut rng = stream(seed, "candidates", &[]);
    let half = cfg.candidates / 2;
    (0..cfg.candidates)
        .map(|i| {
            let family = if i < half { GraphFamily::Geometric } else { GraphFamily::ErdosRenyi };
            for _ in 0..MAX_GENERATION_ATTEMPTS {
                let param = rng.random_range(cfg.param_min..=cfg.param_max);
                match draw_graph(family, cfg.n, param, param, &mut rng) {
                    Ok(w) => return diffusion_operator(&w),
                    Err(Error::GenerationFailed { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::GenerationFailed { attempts: MAX_GENERATION_ATTEMPTS })
        })
        .collect()
}

fn hypothesis_trial(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Measurement>> {
    let candidates = hypothesis_candidates(cfg, seed)?;
    let matrices: Vec<SymMatrix> = candidates.iter().map(|c| c.t.clone()).collect();
    let counts = DiffusionCounts::new(cfg.k_min, cfg.k_max)?;
    let mut out = Vec::new();
    for &m in &cfg.m {
        for (i, cand) in candidates.iter().enumerate() {
            let ranking = match m {
                SampleCount::Finite(m) => {
                    let mut rng = stream(seed, "signals", &[m as u64, i as u64]);
                    generate_observations(&cand.t, m, counts, cfg.source, &mut rng)
                        .and_then(|obs| hypothesis_test(&matrices, &obs))
                }
                SampleCount::Exact => matrices
                    .iter()
                    .map(normalize_candidate)
                    .collect::<Result<Vec<_>>>()
                    .map(|norm| rank_candidates(&build_constraints(&cand.basis), &norm)),
            };
            let values = ranking.map(|r| {
                let rank = r.iter().position(|e| e.index == i).expect("every candidate is ranked");
                let failures = r.iter().filter(|e| e.outcome.is_err()).count();
                let success = rank == 0 && r[0].outcome.is_ok();
                vec![f64::from(u8::from(success)), (rank + 1) as f64, failures as f64]
            });
            out.push(Measurement { group: vec![m.to_string()], values: values.map_err(|e| e.to_string()) });
        }
    }
    Ok(out)
}
