//! Dense primal simplex in dictionary form with Bland's rule.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    cᵀx
//! subject to  G x >= g          (one row per constraint)
//!             lo <= x <= hi
//!             x_f = v_f         (fixed variables)
//! ```
//!
//! Free variables are rewritten as `x = hi − μ` with `0 <= μ <= hi − lo`,
//! which turns the problem into `max cᵀμ` over `Aμ <= b, μ >= 0` with the
//! bound rows appended to `A`. The starting vertex is `μ = 0`, i.e. every free
//! variable at its upper bound, and it must be feasible. For polytope
//! problems this is the all-ones eigenvalue vector (the identity matrix).
//!
//! The dictionary keeps only the `V` nonbasic columns, so a pivot costs
//! `O(rows · V)` regardless of how many slacks there are.

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};

/// Pivot elements below this are not eligible in the ratio test.
pub const PIVOT_TOL: f64 = 1e-10;
/// Reduced costs above this still improve the objective.
const COST_TOL: f64 = 1e-11;
/// A nonbasic reduced cost within this of zero marks a possibly non-unique optimum.
const DEGENERACY_TOL: f64 = 1e-9;
/// Starting-point violations up to this size are absorbed into the right-hand side.
const ZERO_SNAP: f64 = 1e-11;
const START_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LinearProgram {
    /// Minimized.
    pub objective: Vec<f64>,
    /// Row-major `rows x vars`.
    pub rows: Vec<f64>,
    /// Right-hand sides of `row · x >= lower`.
    pub lower: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub fixed: BTreeMap<usize, f64>,
}

impl LinearProgram {
    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn row_count(&self) -> usize {
        self.lower.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let v = self.vars();
        &self.rows[r * v..(r + 1) * v]
    }

    fn validate(&self) -> Result<()> {
        let v = self.vars();
        if self.rows.len() != v * self.row_count() {
            return invalid("constraint matrix size does not match rows x vars");
        }
        if self.bounds.len() != v {
            return invalid("one bound pair per variable is required");
        }
        if self.bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return invalid("bounds must be finite with lo <= hi");
        }
        if self.fixed.keys().any(|&k| k >= v) {
            return invalid("fixed variable index out of range");
        }
        Ok(())
    }

    /// Sum of positive parts of row violations and bound violations at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.row_count() {
            let lhs: f64 = self.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max(self.lower[r] - lhs);
        }
        for (xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xi).max(xi - hi);
        }
        for (&k, &v) in &self.fixed {
            worst = worst.max((x[k] - v).abs());
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Optimal vertex with a dual certificate.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Nonbasic columns with zero reduced cost at the optimum. Nonzero means
    /// the optimal face may contain more than this vertex.
    pub degenerate_directions: usize,
    certificate: Certificate,
}

/// The reduced problem `max cᵀμ, Aμ <= b, μ >= 0` and the duals `y` read off
/// the final dictionary.
#[derive(Clone, Debug)]
struct Certificate {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    mu: Vec<f64>,
    y: Vec<f64>,
}

impl LpSolution {
    /// Re-checks optimality from the reduced problem data alone: primal
    /// feasibility `Aμ <= b`, `μ >= 0`; dual feasibility `y >= 0`,
    /// `Aᵀy >= c`; and a zero duality gap. Returns the worst residual.
    pub fn certificate_residual(&self) -> f64 {
        let cert = &self.certificate;
        let v = cert.c.len();
        let m = cert.b.len();
        let mut worst = 0.0f64;
        for r in 0..m {
            let lhs: f64 = (0..v).map(|j| cert.a[r * v + j] * cert.mu[j]).sum();
            worst = worst.max(lhs - cert.b[r]);
            worst = worst.max(-cert.y[r]);
        }
        for j in 0..v {
            worst = worst.max(-cert.mu[j]);
            let aty: f64 = (0..m).map(|r| cert.a[r * v + j] * cert.y[r]).sum();
            worst = worst.max(cert.c[j] - aty);
        }
        let primal: f64 = cert.c.iter().zip(&cert.mu).map(|(a, b)| a * b).sum();
        let dual: f64 = cert.b.iter().zip(&cert.y).map(|(a, b)| a * b).sum();
        worst.max((primal - dual).abs())
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let nv = lp.vars();
    let free: Vec<usize> = (0..nv).filter(|k| !lp.fixed.contains_key(k)).collect();
    let v = free.len();
    let mut x_full: Vec<f64> = (0..nv).map(|k| lp.fixed.get(&k).copied().unwrap_or(lp.bounds[k].1)).collect();

    // Reduced data in μ-space.
    let rows = lp.row_count();
    let m = rows + v;
    let mut a = vec![0.0; m * v];
    let mut b = vec![0.0; m];
    for r in 0..rows {
        let row = lp.row(r);
        let at_start: f64 = row.iter().zip(&x_full).map(|(p, q)| p * q).sum();
        let mut rhs = at_start - lp.lower[r];
        if rhs < 0.0 {
            if rhs < -START_SLACK {
                return Err(Error::Infeasible(format!(
                    "starting vertex violates row {r} by {}",
                    -rhs
                )));
            }
            rhs = 0.0;
        }
        b[r] = rhs;
        for (jj, &k) in free.iter().enumerate() {
            a[r * v + jj] = row[k];
        }
    }
    for (jj, &k) in free.iter().enumerate() {
        let r = rows + jj;
        a[r * v + jj] = 1.0;
        b[r] = lp.bounds[k].1 - lp.bounds[k].0;
    }
    let c: Vec<f64> = free.iter().map(|&k| lp.objective[k]).collect();

    let dict = Dictionary::new(a.clone(), b.clone(), c.clone(), v, m);
    let cap = 50 * (v + m);
    let dict = dict.run(cap)?;

    let mu = refine(&a, &b, v, &dict.nonbasic).unwrap_or_else(|| dict.structural_values());
    for (jj, &k) in free.iter().enumerate() {
        x_full[k] = lp.bounds[k].1 - mu[jj];
    }
    let y = dict.duals();
    let degenerate_directions = dict.zero_reduced_costs();
    let objective = lp.objective_value(&x_full);
    Ok(LpSolution {
        x: x_full,
        objective,
        iterations: dict.iterations,
        degenerate_directions,
        certificate: Certificate { a, b, c, mu, y },
    })
}

/// Recomputes the final vertex from the original rows that are active there
/// (one per nonbasic variable), which removes the round-off accumulated over
/// the pivots. `None` when that system is nearly singular or the result is no
/// less feasible than it should be.
fn refine(a: &[f64], b: &[f64], v: usize, nonbasic: &[usize]) -> Option<Vec<f64>> {
    let mut sys: Vec<Vec<f64>> = nonbasic
        .iter()
        .map(|&var| {
            let mut row = vec![0.0; v + 1];
            if var < v {
                row[var] = 1.0;
            } else {
                let r = var - v;
                row[..v].copy_from_slice(&a[r * v..(r + 1) * v]);
                row[v] = b[r];
            }
            row
        })
        .collect();
    for col in 0..v {
        let piv = (col..v).max_by(|&p, &q| sys[p][col].abs().total_cmp(&sys[q][col].abs()))?;
        if sys[piv][col].abs() < PIVOT_TOL {
            return None;
        }
        sys.swap(col, piv);
        for r in 0..v {
            if r != col {
                let f = sys[r][col] / sys[col][col];
                if f != 0.0 {
                    for k in col..=v {
                        sys[r][k] -= f * sys[col][k];
                    }
                }
            }
        }
    }
    let mu: Vec<f64> = (0..v).map(|i| (sys[i][v] / sys[i][i]).max(0.0)).collect();
    let m = b.len();
    let worst = (0..m)
        .map(|r| (0..v).map(|j| a[r * v + j] * mu[j]).sum::<f64>() - b[r])
        .fold(0.0f64, f64::max);
    (worst <= 1e-12).then_some(mu)
}

/// `x_B = b̄ − Ā x_N`, `z = z0 + d · x_N`. Variable ids: structurals are
/// `0..v`, slacks are `v..v+m` (slack `v + r` belongs to row `r`).
struct Dictionary {
    v: usize,
    m: usize,
    abar: Vec<f64>,
    bbar: Vec<f64>,
    d: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    iterations: usize,
}

impl Dictionary {
    fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, v: usize, m: usize) -> Self {
        Self {
            v,
            m,
            abar: a,
            bbar: b,
            d: c,
            basic: (v..v + m).collect(),
            nonbasic: (0..v).collect(),
            iterations: 0,
        }
    }

    fn run(mut self, cap: usize) -> Result<Self> {
        loop {
            // Bland: entering variable is the lowest id with positive reduced cost.
            let entering = (0..self.v)
                .filter(|&j| self.d[j] > COST_TOL)
                .min_by_key(|&j| self.nonbasic[j]);
            let Some(col) = entering else {
                return Ok(self);
            };
            if self.iterations >= cap {
                return Err(Error::NumericalFailure(format!("simplex hit the iteration cap ({cap})")));
            }
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let arj = self.abar[r * self.v + col];
                if arj <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.bbar[r] / arj;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                        if ratio < br && !tie || tie && self.basic[r] < self.basic[best] {
                            Some((r, ratio))
                        } else {
                            Some((best, br))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Err(Error::NumericalFailure("linear program is unbounded".into()));
            };
            self.pivot(row, col);
            self.iterations += 1;
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let v = self.v;
        let p = self.abar[row * v + col];
        // Solve the pivot row for the entering variable.
        let inv = 1.0 / p;
        self.bbar[row] *= inv;
        for j in 0..v {
            if j != col {
                self.abar[row * v + j] *= inv;
            }
        }
        self.abar[row * v + col] = inv;
        let prow: Vec<f64> = self.abar[row * v..(row + 1) * v].to_vec();
        let pb = self.bbar[row];

        for r in 0..self.m {
            if r == row {
                continue;
            }
            let f = self.abar[r * v + col];
            if f == 0.0 {
                continue;
            }
            self.bbar[r] -= f * pb;
            // Snap round-off so degenerate rows tie exactly in the ratio test;
            // Bland's rule only rules out cycling when ties are exact.
            if self.bbar[r].abs() <= ZERO_SNAP {
                self.bbar[r] = 0.0;
            }
            let rr = &mut self.abar[r * v..(r + 1) * v];
            for j in 0..v {
                if j == col {
                    rr[j] = -f * prow[j];
                } else {
                    rr[j] -= f * prow[j];
                }
            }
        }
        let f = self.d[col];
        for j in 0..v {
            if j == col {
                self.d[j] = -f * prow[j];
            } else {
                self.d[j] -= f * prow[j];
            }
        }
        std::mem::swap(&mut self.basic[row], &mut self.nonbasic[col]);
    }

    fn structural_values(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.v];
        for (r, &var) in self.basic.iter().enumerate() {
            if var < self.v {
                mu[var] = self.bbar[r].max(0.0);
            }
        }
        mu
    }

    /// Dual of row `r` is minus the reduced cost of its slack when nonbasic.
    fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (j, &var) in self.nonbasic.iter().enumerate() {
            if var >= self.v {
                y[var - self.v] = -self.d[j];
            }
        }
        y
    }

    fn zero_reduced_costs(&self) -> usize {
        self.d.iter().filter(|d| d.abs() <= DEGENERACY_TOL).count()
    }
}
