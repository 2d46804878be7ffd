//! Graph families, degree normalization and the diffusion operator
//! `T = D^{-1/2} W D^{-1/2}`.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::matcore::{eig_sym, Eigenbasis, SymMatrix};

/// Consecutive disconnected draws tolerated before a generator gives up.
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub enum GraphModel {
    RandomGeometric { n: usize, r: f64 },
    ErdosRenyi { n: usize, p: f64 },
    Ring { n: usize },
    /// Dense symmetrized uniform `[0, 1]` weights, diagonal included.
    UniformDense { n: usize },
    External,
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphModel::RandomGeometric { n, r } => write!(f, "rg(n={n},r={r})"),
            GraphModel::ErdosRenyi { n, p } => write!(f, "er(n={n},p={p})"),
            GraphModel::Ring { n } => write!(f, "ring(n={n})"),
            GraphModel::UniformDense { n } => write!(f, "uniform(n={n})"),
            GraphModel::External => write!(f, "external"),
        }
    }
}

/// Symmetric nonnegative weight matrix plus the model that produced it.
#[derive(Clone, Debug)]
pub struct AdjacencyMatrix {
    pub w: SymMatrix,
    pub model: GraphModel,
    /// Disconnected draws rejected before this one was accepted.
    pub rejections: usize,
}

impl AdjacencyMatrix {
    pub fn new(w: SymMatrix) -> Result<Self> {
        if let Some(v) = w.as_slice().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return invalid(format!("adjacency weights must be finite and nonnegative, found {v}"));
        }
        Ok(Self { w, model: GraphModel::External, rejections: 0 })
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|u| self.w.row(u).iter().sum()).collect()
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| self.w.get(i, j) > 0.0).count()
    }

    pub fn is_connected(&self) -> bool {
        is_connected(&self.w)
    }
}

fn is_connected(w: &SymMatrix) -> bool {
    let n = w.n();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for (v, &wt) in w.row(u).iter().enumerate() {
            if wt > 0.0 && !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

fn generate_connected<R: Rng + ?Sized>(
    rng: &mut R,
    model: GraphModel,
    mut draw: impl FnMut(&mut R) -> SymMatrix,
) -> Result<AdjacencyMatrix> {
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let w = draw(rng);
        if is_connected(&w) {
            if attempt > 0 {
                log::debug!("{model}: accepted after {attempt} disconnected draws");
            }
            return Ok(AdjacencyMatrix { w, model, rejections: attempt });
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_GENERATION_ATTEMPTS })
}

/// Geodesic distance on the flat unit torus.
pub fn torus_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = (a.0 - b.0).abs();
    let dy = (a.1 - b.1).abs();
    let dx = dx.min(1.0 - dx);
    let dy = dy.min(1.0 - dy);
    (dx * dx + dy * dy).sqrt()
}

/// Points uniform on the unit torus; an edge of weight `1/d` joins points at
/// geodesic distance `d < r`. Redrawn until connected.
pub fn random_geometric<R: Rng + ?Sized>(n: usize, r: f64, rng: &mut R) -> Result<AdjacencyMatrix> {
    if n < 2 {
        return invalid("random geometric graph needs n >= 2");
    }
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("radius must be positive, got {r}"));
    }
    generate_connected(rng, GraphModel::RandomGeometric { n, r }, |rng| {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        SymMatrix::from_upper_fn(n, |i, j| {
            if i == j {
                return 0.0;
            }
            let d = torus_distance(pts[i], pts[j]);
            if d < r && d > 0.0 {
                1.0 / d
            } else {
                0.0
            }
        })
    })
}

/// Binary G(n, p), redrawn until connected.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<AdjacencyMatrix> {
    if n < 2 {
        return invalid("Erdős–Rényi graph needs n >= 2");
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("edge probability must lie in [0, 1], got {p}"));
    }
    generate_connected(rng, GraphModel::ErdosRenyi { n, p }, |rng| {
        SymMatrix::from_upper_fn(n, |i, j| if i != j && rng.random::<f64>() < p { 1.0 } else { 0.0 })
    })
}

pub fn ring(n: usize) -> Result<AdjacencyMatrix> {
    if n < 3 {
        return invalid("ring graph needs n >= 3");
    }
    let mut w = SymMatrix::zeros(n);
    for i in 0..n {
        w.set(i, (i + 1) % n, 1.0);
    }
    Ok(AdjacencyMatrix { w, model: GraphModel::Ring { n }, rejections: 0 })
}

/// Dense weights: an `n × n` array of uniform `[0, 1]` draws made symmetric
/// as `(A + Aᵀ)/2`, so off-diagonal weights are the mean of two draws and the
/// diagonal keeps a single one.
pub fn uniform_dense<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<AdjacencyMatrix> {
    if n < 2 {
        return invalid("uniform dense graph needs n >= 2");
    }
    generate_connected(rng, GraphModel::UniformDense { n }, |rng| {
        let a: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        SymMatrix::from_upper_fn(n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]))
    })
}

/// Symmetric nonnegative operator with top eigenvalue 1 and spectrum in `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct DiffusionOperator {
    pub t: SymMatrix,
    pub basis: Eigenbasis,
}

impl DiffusionOperator {
    /// Validates an arbitrary symmetric matrix as a diffusion operator.
    pub fn from_matrix(t: SymMatrix) -> Result<Self> {
        let basis = eig_sym(&t)?;
        let op = Self { t, basis };
        op.check()?;
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.t.n()
    }

    fn check(&self) -> Result<()> {
        if let Some(v) = self.t.as_slice().iter().find(|&&v| v < -1e-12) {
            return invalid(format!("diffusion operator has a negative entry {v}"));
        }
        let values = self.basis.values();
        if (values[0] - 1.0).abs() > 1e-9 {
            return invalid(format!("top eigenvalue is {} instead of 1", values[0]));
        }
        if let Some(v) = values.iter().find(|v| v.abs() > 1.0 + 1e-9) {
            return invalid(format!("eigenvalue {v} lies outside [-1, 1]"));
        }
        Ok(())
    }
}

/// `T = D^{-1/2} W D^{-1/2}` with its eigendecomposition.
pub fn diffusion_operator(w: &AdjacencyMatrix) -> Result<DiffusionOperator> {
    let deg = w.degrees();
    if let Some(u) = deg.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedVertex(u));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let t = SymMatrix::from_upper_fn(w.n(), |i, j| w.w.get(i, j) * inv_sqrt[i] * inv_sqrt[j]);
    let basis = eig_sym(&t)?;
    let op = DiffusionOperator { t, basis };
    op.check().map_err(|e| Error::NumericalFailure(format!("normalized operator failed validation: {e}")))?;
    Ok(op)
}

/// `S(x) = Σ_{u<v} T(u,v) (x_u − x_v)²`.
pub fn smoothness(t: &DiffusionOperator, x: &[f64]) -> Result<f64> {
    let n = t.n();
    if x.len() != n {
        return invalid(format!("signal has {} entries, operator has order {n}", x.len()));
    }
    let mut s = 0.0;
    for u in 0..n {
        for v in (u + 1)..n {
            let d = x[u] - x[v];
            s += t.t.get(u, v) * d * d;
        }
    }
    Ok(s)
}
