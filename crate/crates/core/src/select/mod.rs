//! Selection of one point of the polytope: trace minimization (Simple),
//! `L1,1` minimization (Sparse), and Euclidean projection of an external
//! candidate matrix, which also scores how well that candidate fits.

pub mod hildreth;
pub mod simplex;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::matcore::{eig_sym, fmt_f64, SymMatrix};
use crate::polytope::{build_constraints, is_member, EigenvalueVector, PolytopeConstraints};
use crate::signals::{sample_covariance, ObservationSet};

use simplex::{LinearProgram, LpSolution};

/// Stop when no coordinate moves more than this during a sweep.
pub const HILDRETH_TOL: f64 = 1e-10;
pub const HILDRETH_MAX_SWEEPS: usize = 100_000;
/// Membership tolerance a projection result must meet.
pub const PROJECTION_FEASIBILITY: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Simple,
    Sparse,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Self::Simple),
            "sparse" => Ok(Self::Sparse),
            other => invalid(format!("unknown strategy {other:?}")),
        }
    }
}

/// An optimal vertex of a selection LP.
#[derive(Clone, Debug)]
pub struct LpSelection {
    pub lam: EigenvalueVector,
    pub objective: f64,
    pub iterations: usize,
    /// Count of nonbasic directions with zero reduced cost at the optimum.
    pub degenerate_directions: usize,
    /// Worst primal/dual/gap residual of the optimality certificate.
    pub certificate_residual: f64,
}

impl LpSelection {
    /// The optimum may not be unique.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_directions > 0
    }
}

/// The polytope as an LP over `λ` with the given cost vector.
pub fn polytope_program(c: &PolytopeConstraints, objective: Vec<f64>) -> LinearProgram {
    let n = c.n();
    LinearProgram {
        objective,
        rows: c.rows().flat_map(|r| r.iter().copied()).collect(),
        lower: vec![0.0; c.row_count()],
        bounds: vec![(-1.0, 1.0); n],
        fixed: BTreeMap::from([(c.pinned_index(), 1.0)]),
    }
}

fn run_lp(lp: &LinearProgram) -> Result<LpSelection> {
    let sol: LpSolution = simplex::solve(lp)?;
    let certificate_residual = sol.certificate_residual();
    Ok(LpSelection {
        lam: EigenvalueVector(sol.x),
        objective: sol.objective,
        iterations: sol.iterations,
        degenerate_directions: sol.degenerate_directions,
        certificate_residual,
    })
}

/// Minimizes `Σ λ_i`, the trace of the reconstructed matrix.
pub fn solve_simple(c: &PolytopeConstraints) -> Result<LpSelection> {
    run_lp(&polytope_program(c, vec![1.0; c.n()]))
}

/// Per-eigenvalue weights of `1ᵀ X diag(λ) Xᵀ 1`: squared column sums of `X`.
pub fn sparse_objective(c: &PolytopeConstraints) -> Vec<f64> {
    let basis = c.basis();
    (0..c.n())
        .map(|k| {
            let s: f64 = (0..c.n()).map(|u| basis.entry(u, k)).sum();
            s * s
        })
        .collect()
}

/// Minimizes the sum of all entries of the reconstructed matrix, which is its
/// `L1,1` norm on the polytope.
pub fn solve_sparse(c: &PolytopeConstraints) -> Result<LpSelection> {
    run_lp(&polytope_program(c, sparse_objective(c)))
}

pub fn solve(c: &PolytopeConstraints, strategy: Strategy) -> Result<LpSelection> {
    match strategy {
        Strategy::Simple => solve_simple(c),
        Strategy::Sparse => solve_sparse(c),
    }
}

/// Closest admissible eigenvalue vector to the diagonal of a candidate
/// expressed in the constraint basis.
#[derive(Clone, Debug)]
pub struct ProjectionResult {
    pub lam_hat: EigenvalueVector,
    /// Diagonal of `Xᵀ T_m X`, before projection.
    pub lam_m: EigenvalueVector,
    /// `‖Xᵀ T_m X − diag(λ̂)‖_F`.
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ProjectionResult {
    /// `distance,converged,iterations` line followed by `lambda_hat` values.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("distance,converged,iterations\n");
        let _ = writeln!(s, "{},{},{}", fmt_f64(self.distance), self.converged, self.iterations);
        s.push_str("lambda_hat\n");
        for v in self.lam_hat.values() {
            let _ = writeln!(s, "{}", fmt_f64(*v));
        }
        s
    }
}

pub fn project_candidate(c: &PolytopeConstraints, t_m: &SymMatrix) -> Result<ProjectionResult> {
    let n = c.n();
    if t_m.n() != n {
        return invalid(format!("candidate has order {}, constraints have order {n}", t_m.n()));
    }
    if !t_m.is_finite() {
        return invalid("candidate has non-finite entries");
    }
    let a = c.basis().to_spectral(t_m);
    let lam_m = a.diagonal();
    let p = c.pinned_index();
    let free: Vec<usize> = (0..n).filter(|&k| k != p).collect();

    let mut rows = Vec::with_capacity(c.row_count() * free.len());
    let mut rhs = Vec::with_capacity(c.row_count());
    for row in c.rows() {
        rows.extend(free.iter().map(|&k| row[k]));
        rhs.push(-row[p]);
    }
    let bound_lo = vec![-1.0; free.len()];
    let bound_hi = vec![1.0; free.len()];
    let x0: Vec<f64> = free.iter().map(|&k| lam_m[k]).collect();
    let problem = hildreth::HalfSpaces { rows: &rows, rhs: &rhs, lo: &bound_lo, hi: &bound_hi };
    let out = hildreth::project(&problem, &x0, HILDRETH_TOL, HILDRETH_MAX_SWEEPS);

    let mut lam_hat = vec![1.0; n];
    for (jj, &k) in free.iter().enumerate() {
        lam_hat[k] = out.x[jj];
    }
    let lam_hat = EigenvalueVector(lam_hat);
    if !out.converged && !is_member(c, &lam_hat, PROJECTION_FEASIBILITY) {
        return Err(Error::NonConvergence { iterations: out.sweeps });
    }
    let distance = a.sub(&SymMatrix::from_diag(lam_hat.values())).as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ProjectionResult {
        lam_hat,
        lam_m: EigenvalueVector(lam_m),
        distance,
        iterations: out.sweeps,
        converged: out.converged,
    })
}

/// Divides a candidate by its largest eigenvalue.
pub fn normalize_candidate(t: &SymMatrix) -> Result<SymMatrix> {
    let top = eig_sym(t)?.values()[0];
    if !(top > 0.0) {
        return invalid(format!("candidate has nonpositive largest eigenvalue {top}"));
    }
    Ok(t.scaled(1.0 / top))
}

/// One candidate's place in a ranking.
#[derive(Debug)]
pub struct RankEntry {
    pub index: usize,
    pub outcome: Result<ProjectionResult>,
}

impl RankEntry {
    pub fn distance(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|p| p.distance)
    }
}

/// Projects already-normalized candidates and sorts them by ascending
/// distance (ties by lower index). Failed projections sort last.
pub fn rank_candidates(c: &PolytopeConstraints, candidates: &[SymMatrix]) -> Vec<RankEntry> {
    let mut entries: Vec<RankEntry> = candidates
        .par_iter()
        .enumerate()
        .map(|(index, t)| RankEntry { index, outcome: project_candidate(c, t) })
        .collect();
    entries.sort_by(|a, b| match (a.distance(), b.distance()) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    entries
}

/// Ranks candidate diffusion matrices by how well they explain `obs` under
/// the stationarity assumption. Each candidate is first scaled so its largest
/// eigenvalue is 1.
pub fn hypothesis_test(candidates: &[SymMatrix], obs: &ObservationSet) -> Result<Vec<RankEntry>> {
    if candidates.len() < 2 {
        return invalid("hypothesis test needs at least two candidates");
    }
    if let Some(t) = candidates.iter().find(|t| t.n() != obs.n()) {
        return invalid(format!("candidate of order {} does not match {} vertices", t.n(), obs.n()));
    }
    let cov = sample_covariance(obs)?;
    let c = build_constraints(&cov.basis);
    let normalized: Vec<Result<SymMatrix>> = candidates.iter().map(normalize_candidate).collect();
    let ok: Vec<SymMatrix> = normalized
        .iter()
        .map(|r| r.as_ref().map(Clone::clone).unwrap_or_else(|_| SymMatrix::zeros(obs.n())))
        .collect();
    let mut ranking = rank_candidates(&c, &ok);
    let mut failed = Vec::new();
    for (i, r) in normalized.into_iter().enumerate() {
        if let Err(e) = r {
            failed.push((i, e));
        }
    }
    if failed.is_empty() {
        return Ok(ranking);
    }
    ranking.retain(|e| !failed.iter().any(|(i, _)| *i == e.index));
    ranking.extend(failed.into_iter().map(|(index, e)| RankEntry { index, outcome: Err(e) }));
    Ok(ranking)
}
