//! Diffused i.i.d. signals, the sample covariance and its eigenbasis, plus the
//! asymptotic laws for sample eigenvectors and eigenvalues.
//!
//! Columns are generated in fixed-size blocks. Block `b` draws from its own
//! ChaCha stream seeded from `(base seed, b)`, where the base seed is the first
//! `u64` taken from the caller's generator. [`generate_observations`] and
//! [`streaming_covariance`] therefore see identical `(k_i, y_i)` pairs for the
//! same caller state; the streaming path only skips materializing `X`.

use std::io::{BufRead, Write};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::matcore::{eig_sym, fmt_f64, frob_norm, mat_power, parse_csv_row, Eigenbasis, SymMatrix};
use crate::seeding;

const BLOCK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SourceDistribution {
    /// Uniform on `[0, 1]`.
    #[default]
    Uniform,
    /// Standard normal, zero mean.
    Gaussian,
}

impl std::str::FromStr for SourceDistribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "gaussian" => Ok(Self::Gaussian),
            other => invalid(format!("unknown source distribution {other:?}")),
        }
    }
}

impl SourceDistribution {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::Uniform => rng.random::<f64>(),
            Self::Gaussian => rng.sample(StandardNormal),
        }
    }
}

/// How many times each column is diffused: `k_i` uniform in `[k_min, k_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionCounts {
    pub k_min: u32,
    pub k_max: u32,
}

impl DiffusionCounts {
    pub fn new(k_min: u32, k_max: u32) -> Result<Self> {
        if k_min < 1 || k_min > k_max {
            return invalid(format!("diffusion counts need 1 <= k_min <= k_max, got [{k_min}, {k_max}]"));
        }
        Ok(Self { k_min, k_max })
    }

    pub fn fixed(k: u32) -> Result<Self> {
        Self::new(k, k)
    }
}

/// `N x M` observations, one signal per column.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    n: usize,
    m: usize,
    /// Row-major `n x m`.
    x: Vec<f64>,
    /// Diffusion counts; present only for synthetic data.
    pub k: Option<Vec<u32>>,
}

impl ObservationSet {
    pub fn new(n: usize, m: usize, x: Vec<f64>, k: Option<Vec<u32>>) -> Result<Self> {
        if n < 1 || m < 2 {
            return invalid(format!("observations need N >= 1 and M >= 2, got {n}x{m}"));
        }
        if x.len() != n * m {
            return invalid("observation buffer size does not match N x M");
        }
        if let Some(k) = &k {
            if k.len() != m || k.iter().any(|&v| v < 1) {
                return invalid("diffusion counts must have M entries, all >= 1");
            }
        }
        Ok(Self { n, m, x, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, col: usize) -> f64 {
        self.x[i * self.m + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, col)).collect()
    }

    /// Reorders columns; `perm[c]` is the source column of new column `c`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m {
            return invalid("permutation length differs from M");
        }
        let mut x = vec![0.0; self.x.len()];
        for i in 0..self.n {
            for (c, &src) in perm.iter().enumerate() {
                x[i * self.m + c] = self.get(i, src);
            }
        }
        let k = self.k.as_ref().map(|k| perm.iter().map(|&s| k[s]).collect());
        Self::new(self.n, self.m, x, k)
    }

    /// Observation CSV: header `N,M`, then `N` rows of `M` values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},{}", self.n, self.m)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.m).map(|c| fmt_f64(self.get(i, c))).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header = lines.next().ok_or_else(|| Error::Parse("empty observation file".into()))??;
        let dims: Vec<usize> = header
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [n, m] = dims[..] else {
            return Err(Error::Parse(format!("header must be `N,M`, got {header:?}")));
        };
        let mut x = Vec::with_capacity(n * m);
        for i in 0..n {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {i}")))??;
            let row = parse_csv_row(&line)?;
            if row.len() != m {
                return Err(Error::Parse(format!("row {i} has {} values, expected {m}", row.len())));
            }
            x.extend(row);
        }
        Self::new(n, m, x, None)
    }
}

fn draw_block<R: RngCore>(
    rng: &mut R,
    cols: usize,
    n: usize,
    counts: DiffusionCounts,
    source: SourceDistribution,
    mut each: impl FnMut(u32, &[f64]),
) {
    let mut y = vec![0.0; n];
    for _ in 0..cols {
        let k = rng.random_range(counts.k_min..=counts.k_max);
        for v in y.iter_mut() {
            *v = source.sample(rng);
        }
        each(k, &y);
    }
}

fn block_ranges(m: usize) -> impl Iterator<Item = (u64, usize)> {
    (0..m.div_ceil(BLOCK)).map(move |b| (b as u64, BLOCK.min(m - b * BLOCK)))
}

/// Draws `Y` and `k`, and forms column `i` of `X` as `T^{k_i} y_i` by `k_i`
/// successive matrix-vector products.
pub fn generate_observations<R: Rng + ?Sized>(
    t: &SymMatrix,
    m: usize,
    counts: DiffusionCounts,
    source: SourceDistribution,
    rng: &mut R,
) -> Result<ObservationSet> {
    if m < 2 {
        return invalid("need at least 2 observations");
    }
    let n = t.n();
    let base: u64 = rng.random();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut ks = Vec::with_capacity(m);
    for (b, len) in block_ranges(m) {
        let mut stream = seeding::stream(base, "signals", &[b]);
        draw_block(&mut stream, len, n, counts, source, |k, y| {
            let mut x = y.to_vec();
            let mut tmp = vec![0.0; n];
            for _ in 0..k {
                t.matvec_into(&x, &mut tmp);
                std::mem::swap(&mut x, &mut tmp);
            }
            cols.push(x);
            ks.push(k);
        });
    }
    let mut x = vec![0.0; n * m];
    for (c, col) in cols.iter().enumerate() {
        for i in 0..n {
            x[i * m + c] = col[i];
        }
    }
    ObservationSet::new(n, m, x, Some(ks))
}

/// Running mean and co-moment (upper triangle) of a stream of vectors.
#[derive(Clone, Debug)]
struct CovAccumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl CovAccumulator {
    fn new(n: usize) -> Self {
        Self { count: 0, mean: vec![0.0; n], m2: vec![0.0; n * n] }
    }

    fn push(&mut self, x: &[f64], delta: &mut [f64]) {
        let n = self.mean.len();
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        for i in 0..n {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] * inv;
        }
        for i in 0..n {
            let d2 = x[i] - self.mean[i];
            let row = &mut self.m2[i * n..(i + 1) * n];
            for j in i..n {
                row[j] += delta[j] * d2;
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let n = self.mean.len();
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        let delta: Vec<f64> = (0..n).map(|i| other.mean[i] - self.mean[i]).collect();
        for i in 0..n {
            for j in i..n {
                self.m2[i * n + j] += other.m2[i * n + j] + delta[i] * delta[j] * na * nb / total;
            }
        }
        for i in 0..n {
            self.mean[i] += delta[i] * nb / total;
        }
        self.count += other.count;
        self
    }

    fn covariance(&self) -> SymMatrix {
        let n = self.mean.len();
        let scale = 1.0 / (self.count as f64 - 1.0);
        SymMatrix::from_upper_fn(n, |i, j| self.m2[i * n + j] * scale)
    }
}

fn pairwise_reduce(mut parts: Vec<CovAccumulator>) -> CovAccumulator {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one block")
}

/// Sample covariance and its eigenbasis.
#[derive(Clone, Debug)]
pub struct CovarianceEstimate {
    pub sigma: SymMatrix,
    pub basis: Eigenbasis,
    pub m: usize,
}

impl CovarianceEstimate {
    fn from_sigma(sigma: SymMatrix, m: usize) -> Result<Self> {
        let basis = eig_sym(&sigma)?;
        let min = *basis.values().last().expect("nonempty");
        if min < -1e-9 * frob_norm(&sigma) {
            return Err(Error::NumericalFailure(format!("sample covariance has eigenvalue {min}")));
        }
        Ok(Self { sigma, basis, m })
    }
}

/// `Σ̂ = (X − M̄)(X − M̄)ᵀ / (M − 1)`, with `M̄` the row means.
pub fn sample_covariance(obs: &ObservationSet) -> Result<CovarianceEstimate> {
    let (n, m) = (obs.n(), obs.m());
    let means: Vec<f64> = (0..n).map(|i| (0..m).map(|c| obs.get(i, c)).sum::<f64>() / m as f64).collect();
    let centered: Vec<Vec<f64>> =
        (0..n).map(|i| (0..m).map(|c| obs.get(i, c) - means[i]).collect()).collect();
    let scale = 1.0 / (m as f64 - 1.0);
    let sigma = SymMatrix::from_upper_fn(n, |i, j| {
        centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>() * scale
    });
    CovarianceEstimate::from_sigma(sigma, m)
}

/// Same draws as [`generate_observations`], accumulated straight into the
/// covariance. Powers `T^k` are precomputed, so each column costs one
/// matrix-vector product whatever its `k`.
pub fn streaming_covariance<R: Rng + ?Sized>(
    t: &SymMatrix,
    m: usize,
    counts: DiffusionCounts,
    source: SourceDistribution,
    rng: &mut R,
) -> Result<CovarianceEstimate> {
    if m < 2 {
        return invalid("need at least 2 observations");
    }
    let n = t.n();
    let base: u64 = rng.random();
    let powers: Vec<SymMatrix> = (0..=counts.k_max).map(|k| mat_power(t, k)).collect();
    let blocks: Vec<(u64, usize)> = block_ranges(m).collect();
    let parts: Vec<CovAccumulator> = blocks
        .par_iter()
        .map(|&(b, len)| {
            let mut stream = seeding::stream(base, "signals", &[b]);
            let mut acc = CovAccumulator::new(n);
            let mut x = vec![0.0; n];
            let mut delta = vec![0.0; n];
            draw_block(&mut stream, len, n, counts, source, |k, y| {
                powers[k as usize].matvec_into(y, &mut x);
                acc.push(&x, &mut delta);
            });
            acc
        })
        .collect();
    CovarianceEstimate::from_sigma(pairwise_reduce(parts).covariance(), m)
}

/// Asymptotic variance of `χ_iᵀ χ̂_j`: `λ_i λ̂_j / ((M − 1)(λ_i − λ̂_j)²)`.
pub fn anderson_variance(lambda_i: f64, lambda_j_hat: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return invalid("need M >= 2");
    }
    if lambda_i == lambda_j_hat {
        return Err(Error::Undefined("variance requires distinct eigenvalues".into()));
    }
    let d = lambda_i - lambda_j_hat;
    Ok(lambda_i * lambda_j_hat / ((m as f64 - 1.0) * d * d))
}

/// Maximum-likelihood sample eigenvalue for a distinct eigenvalue `λ`: `(M − 1)/M · λ`.
pub fn mle_eigenvalue(lambda_i: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return invalid("need M >= 2");
    }
    Ok((m as f64 - 1.0) / m as f64 * lambda_i)
}
