//! Two-dimensional slices through an order-3 polytope, optionally overlaid
//! with the polytopes of repeated sample covariances.

use std::fmt::Write as _;

use super::config::SampleCount;
use crate::error::{invalid, Result};
use crate::graphmodels::{diffusion_operator, AdjacencyMatrix};
use crate::matcore::Eigenbasis;
use crate::polytope::{build_constraints_pinned, grid_axis, grid_slice_2d, is_member, EigenvalueVector};
use crate::seeding::stream;
use crate::signals::{streaming_covariance, DiffusionCounts, SourceDistribution};

#[derive(Clone, Debug)]
pub struct GridRequest {
    /// Order-3 adjacency matrix.
    pub w: AdjacencyMatrix,
    pub step: f64,
    pub tolerance: f64,
    /// Sample-covariance repetitions; 0 gives the exact grid alone.
    pub repetitions: usize,
    pub m: SampleCount,
    pub counts: DiffusionCounts,
    pub source: SourceDistribution,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub lambda2: f64,
    pub lambda3: f64,
    /// Inside the polytope of the exact eigenbasis.
    pub member: bool,
    /// Repetitions whose sample polytope contains the point.
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct GridOutput {
    pub cells: Vec<GridCell>,
    /// The operator's own `(λ₂, λ₃)`.
    pub truth: (f64, f64),
    pub repetitions: usize,
}

impl GridOutput {
    /// `lambda2,lambda3,member`, plus `count` when repetitions were run.
    pub fn to_csv(&self) -> String {
        let histogram = self.repetitions > 0;
        let mut s = String::from(if histogram { "lambda2,lambda3,member,count\n" } else { "lambda2,lambda3,member\n" });
        for c in &self.cells {
            let _ = write!(s, "{},{},{}", c.lambda2, c.lambda3, u8::from(c.member));
            if histogram {
                let _ = write!(s, ",{}", c.count);
            }
            s.push('\n');
        }
        s
    }
}

/// For each column of `reference`, the column of `sample` it overlaps most,
/// assigned greedily from the largest `|overlap|` down.
pub fn match_columns(reference: &Eigenbasis, sample: &Eigenbasis) -> Vec<usize> {
    let n = reference.n();
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|r| (0..n).map(move |s| (r, s)))
        .map(|(r, s)| ((0..n).map(|u| reference.entry(u, r) * sample.entry(u, s)).sum::<f64>().abs(), r, s))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut assigned = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, r, s) in pairs {
        if assigned[r] == usize::MAX && !taken[s] {
            assigned[r] = s;
            taken[s] = true;
        }
    }
    assigned
}

/// Exact membership grid over `(λ₂, λ₃)` with `λ₁ = 1`, and for each
/// repetition the membership of the same points in a sample polytope whose
/// columns are matched to the exact ones.
pub fn polytope_grid(req: &GridRequest) -> Result<GridOutput> {
    if req.w.n() != 3 {
        return invalid(format!("grid needs a 3-vertex graph, got order {}", req.w.n()));
    }
    let t = diffusion_operator(&req.w)?;
    let exact = build_constraints_pinned(&t.basis, 0)?;
    let points = grid_slice_2d(&exact, req.step, req.tolerance)?;
    let mut cells: Vec<GridCell> = points
        .iter()
        .map(|p| GridCell { lambda2: p.lambda_a, lambda3: p.lambda_b, member: p.member, count: 0 })
        .collect();
    let axis = grid_axis(req.step)?;
    for rep in 0..req.repetitions {
        let mut rng = stream(req.seed, "grid", &[rep as u64]);
        let sample = match req.m {
            SampleCount::Exact => t.basis.clone(),
            SampleCount::Finite(m) => streaming_covariance(&t.t, m, req.counts, req.source, &mut rng)?.basis,
        };
        let cols = match_columns(&t.basis, &sample);
        let c = build_constraints_pinned(&sample, cols[0])?;
        let mut lam = vec![1.0; 3];
        let mut idx = 0;
        for &a in &axis {
            for &b in &axis {
                lam[cols[1]] = a;
                lam[cols[2]] = b;
                if is_member(&c, &EigenvalueVector(lam.clone()), req.tolerance) {
                    cells[idx].count += 1;
                }
                idx += 1;
            }
        }
    }
    let v = t.basis.values();
    Ok(GridOutput { cells, truth: (v[1], v[2]), repetitions: req.repetitions })
}
