//! Hildreth's cyclic dual coordinate ascent for the Euclidean projection
//!
//! ```text
//! minimize ½‖x − x0‖²  subject to  aᵣᵀx >= hᵣ  for every row r.
//! ```
//!
//! The primal iterate is kept as `x = x0 + Σ μᵣ aᵣ` with `μ >= 0`; each step
//! maximizes the dual in one coordinate. Coordinate-aligned rows (the box
//! `−1 <= x_k <= 1`) reduce to a clamp of `x_k` with its multiplier carried
//! along, so they are stored separately and never touch the dense rows.

/// Outcome of a projection run.
#[derive(Clone, Debug)]
pub struct HildrethOutcome {
    pub x: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Dense half-spaces `a·x >= h` plus per-coordinate bounds `lo <= x <= hi`.
pub struct HalfSpaces<'a> {
    pub rows: &'a [f64],
    pub rhs: &'a [f64],
    pub lo: &'a [f64],
    pub hi: &'a [f64],
}

pub fn project(problem: &HalfSpaces<'_>, x0: &[f64], tol: f64, max_sweeps: usize) -> HildrethOutcome {
    let v = x0.len();
    let nrows = problem.rhs.len();
    let norms: Vec<f64> = problem.rows.chunks_exact(v).map(|r| r.iter().map(|a| a * a).sum()).collect();
    let mut x = x0.to_vec();
    let mut mu = vec![0.0; nrows];
    let mut mu_lo = vec![0.0; v];
    let mut mu_hi = vec![0.0; v];

    for sweep in 1..=max_sweeps {
        let mut change = 0.0f64;
        for r in 0..nrows {
            let nn = norms[r];
            if nn < 1e-24 {
                continue;
            }
            let row = &problem.rows[r * v..(r + 1) * v];
            let ax: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            let new_mu = (mu[r] + (problem.rhs[r] - ax) / nn).max(0.0);
            let step = new_mu - mu[r];
            if step != 0.0 {
                mu[r] = new_mu;
                for (xi, a) in x.iter_mut().zip(row) {
                    let delta = step * a;
                    *xi += delta;
                    change = change.max(delta.abs());
                }
            }
        }
        for k in 0..v {
            // x_k >= lo
            let new_lo = (mu_lo[k] + problem.lo[k] - x[k]).max(0.0);
            let step = new_lo - mu_lo[k];
            mu_lo[k] = new_lo;
            x[k] += step;
            change = change.max(step.abs());
            // −x_k >= −hi
            let new_hi = (mu_hi[k] + x[k] - problem.hi[k]).max(0.0);
            let step = new_hi - mu_hi[k];
            mu_hi[k] = new_hi;
            x[k] -= step;
            change = change.max(step.abs());
        }
        if change < tol {
            return HildrethOutcome { x, sweeps: sweep, converged: true };
        }
    }
    HildrethOutcome { x, sweeps: max_sweeps, converged: false }
}
