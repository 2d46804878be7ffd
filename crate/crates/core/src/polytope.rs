//! Linear description of the admissible eigenvalue vectors for a fixed
//! eigenbasis `X`.
//!
//! Entry `(i, j)` of `X diag(λ) Xᵀ` is `Σ_k α_ijk λ_k` with `α_ijk = X(i,k) X(j,k)`.
//! Requiring every entry of the upper triangle to be nonnegative, every
//! `|λ_k| <= 1`, and the pinned eigenvalue to equal 1 carves out a convex
//! polytope in `λ`-space.

use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::matcore::{fmt_f64, Eigenbasis, SymMatrix};

/// Default membership tolerance for exact bases.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Eigenvalue vector aligned to the columns of a constraint basis.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueVector(pub Vec<f64>);

impl EigenvalueVector {
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise integer power.
    pub fn powi(&self, k: i32) -> Self {
        Self(self.0.iter().map(|v| v.powi(k)).collect())
    }
}

impl From<Vec<f64>> for EigenvalueVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// The `N(N+1)/2` nonnegativity rows plus the pinned index.
#[derive(Clone, Debug)]
pub struct PolytopeConstraints {
    n: usize,
    pinned_index: usize,
    /// Row-major, one row per `(i, j)` with `i <= j`, in row-scan order.
    alpha: Vec<f64>,
    basis: Eigenbasis,
}

/// Eigenvalues within this distance of the largest are treated as tied when
/// picking the pinned column.
const PIN_TIE: f64 = 1e-12;

impl PolytopeConstraints {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pinned_index(&self) -> usize {
        self.pinned_index
    }

    pub fn basis(&self) -> &Eigenbasis {
        &self.basis
    }

    pub fn row_count(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.alpha[r * self.n..(r + 1) * self.n]
    }

    /// Row index of entry `(i, j)`, either order.
    pub fn row_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // rows before i: n + (n-1) + ... + (n-i+1)
        i * self.n - i * (i.saturating_sub(1)) / 2 + (j - i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.alpha.chunks_exact(self.n)
    }

    /// Index pairs `(i, j)` in row order.
    pub fn row_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j)))
    }

    /// Reconstructed entries, one per row: `α_ij · λ`.
    pub fn entries(&self, lam: &[f64]) -> Vec<f64> {
        self.rows().map(|row| row.iter().zip(lam).map(|(a, l)| a * l).sum()).collect()
    }

    /// Constraint rows as CSV (`i,j,alpha_1,…,alpha_n`), for external LP tooling.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let cols: Vec<String> = (1..=self.n).map(|k| format!("alpha_{k}")).collect();
        let _ = writeln!(s, "i,j,{}", cols.join(","));
        for ((i, j), row) in self.row_pairs().zip(self.rows()) {
            let vals: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(s, "{},{},{}", i + 1, j + 1, vals.join(","));
        }
        s
    }
}

/// Builds the constraint rows; the pinned column is the one with the largest
/// eigenvalue, with ties broken by fewest sign changes, then lowest index.
pub fn build_constraints(basis: &Eigenbasis) -> PolytopeConstraints {
    let pinned = choose_pinned(basis);
    build_constraints_pinned(basis, pinned).expect("pinned index in range")
}

pub fn build_constraints_pinned(basis: &Eigenbasis, pinned_index: usize) -> Result<PolytopeConstraints> {
    let n = basis.n();
    if pinned_index >= n {
        return invalid(format!("pinned index {pinned_index} out of range for order {n}"));
    }
    let mut alpha = Vec::with_capacity(n * (n + 1) / 2 * n);
    for i in 0..n {
        let ri = basis.row(i);
        for j in i..n {
            let rj = basis.row(j);
            alpha.extend(ri.iter().zip(rj).map(|(a, b)| a * b));
        }
    }
    Ok(PolytopeConstraints { n, pinned_index, alpha, basis: basis.clone() })
}

fn sign_changes(v: &[f64]) -> usize {
    let pos = v.iter().filter(|&&x| x > PIN_TIE).count();
    let neg = v.iter().filter(|&&x| x < -PIN_TIE).count();
    pos.min(neg)
}

fn choose_pinned(basis: &Eigenbasis) -> usize {
    let values = basis.values();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = PIN_TIE * top.abs().max(1.0);
    (0..basis.n())
        .filter(|&k| values[k] >= top - tie)
        .min_by_key(|&k| (sign_changes(&basis.vector(k)), k))
        .expect("nonempty basis")
}

/// True iff every entry constraint holds to `-tol`, all `|λ_k| <= 1 + tol`,
/// and the pinned eigenvalue is at least `1 - tol`.
pub fn is_member(c: &PolytopeConstraints, lam: &EigenvalueVector, tol: f64) -> bool {
    if lam.len() != c.n {
        return false;
    }
    let v = lam.values();
    if v.iter().any(|x| !x.is_finite() || x.abs() > 1.0 + tol) {
        return false;
    }
    if v[c.pinned_index] < 1.0 - tol {
        return false;
    }
    c.rows().all(|row| row.iter().zip(v).map(|(a, l)| a * l).sum::<f64>() >= -tol)
}

/// `X diag(λ) Xᵀ`, explicitly symmetrized.
pub fn reconstruct(basis: &Eigenbasis, lam: &EigenvalueVector) -> Result<SymMatrix> {
    if lam.len() != basis.n() {
        return invalid(format!("eigenvalue vector has length {}, basis has order {}", lam.len(), basis.n()));
    }
    Ok(basis.compose(lam.values()))
}

/// One grid point of a 2-D slice through a 3-vertex polytope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub member: bool,
}

/// Grid coordinates `-1, -1 + step, …, 1` (the last snapped to 1).
pub fn grid_axis(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 2.0) {
        return invalid(format!("grid step must lie in (0, 2], got {step}"));
    }
    let count = (2.0 / step).round() as usize + 1;
    Ok((0..count).map(|i| if i + 1 == count { 1.0 } else { -1.0 + i as f64 * step }).collect())
}

/// Enumerates the two free eigenvalues of an order-3 polytope over
/// `[-1, 1]²`, with the pinned eigenvalue set to 1.
pub fn grid_slice_2d(c: &PolytopeConstraints, step: f64, tol: f64) -> Result<Vec<GridPoint>> {
    if c.n != 3 {
        return invalid(format!("grid slices need order 3, got {}", c.n));
    }
    let axis = grid_axis(step)?;
    let free: Vec<usize> = (0..3).filter(|&k| k != c.pinned_index).collect();
    let mut out = Vec::with_capacity(axis.len() * axis.len());
    let mut lam = vec![1.0; 3];
    for &a in &axis {
        for &b in &axis {
            lam[free[0]] = a;
            lam[free[1]] = b;
            let member = is_member(c, &EigenvalueVector(lam.clone()), tol);
            out.push(GridPoint { lambda_a: a, lambda_b: b, member });
        }
    }
    Ok(out)
}

pub fn grid_csv(points: &[GridPoint]) -> String {
    let mut s = String::from("lambda2,lambda3,member\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.lambda_a, p.lambda_b, u8::from(p.member));
    }
    s
}
