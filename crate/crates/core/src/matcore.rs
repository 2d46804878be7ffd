//! Dense symmetric linear algebra.
//!
//! Everything in this crate that is a matrix in the model (adjacency, diffusion
//! operator, covariance, spectral projections of candidates) is symmetric, so a
//! single [`SymMatrix`] type backs all of them. Writes always go through
//! [`SymMatrix::set`], which mirrors the value, so exact symmetry holds by
//! construction.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

/// Square symmetric matrix stored densely in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be at least 1");
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle (`i <= j`).
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a full square array. Off-diagonal pairs may differ by rounding
    /// noise (relative 1e-12); they are averaged. Larger asymmetry is rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return invalid("matrix must have at least one row");
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return invalid(format!("row {i} has {} entries, expected {n}", r.len()));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                let scale = a.abs().max(b.abs()).max(1.0);
                if (a - b).abs() > 1e-12 * scale {
                    return invalid(format!("matrix is not symmetric at ({i}, {j}): {a} vs {b}"));
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entry `(i, j)` and its mirror `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Row-major view of all `n * n` entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * factor).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Product of two matrices that are known to commute (powers or
    /// polynomials of one matrix). The result is symmetrized.
    fn commuting_product(&self, other: &Self) -> Self {
        let n = self.n;
        let mut full = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let frow = &mut full[i * n..(i + 1) * n];
                for (f, b) in frow.iter_mut().zip(orow) {
                    *f += a * b;
                }
            }
        }
        Self::from_upper_fn(n, |i, j| 0.5 * (full[i * n + j] + full[j * n + i]))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Orthonormal eigenvectors (as columns) with their eigenvalues in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenbasis {
    n: usize,
    /// Row-major `n x n`; column `j` is eigenvector `j`.
    vectors: Vec<f64>,
    values: Vec<f64>,
}

impl Eigenbasis {
    /// Wraps an externally supplied basis. Columns of `vectors` (given as rows
    /// of the full matrix) must be orthonormal and `values` sorted descending.
    pub fn from_parts(vectors: &[Vec<f64>], values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 || vectors.len() != n || vectors.iter().any(|r| r.len() != n) {
            return invalid("eigenbasis dimensions do not match the eigenvalue count");
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return invalid("eigenvalues must be sorted in descending order");
        }
        let basis = Self { n, vectors: vectors.concat(), values };
        let err = basis.orthonormality_error();
        if err > 1e-10 * n as f64 {
            return invalid(format!("eigenvectors are not orthonormal (error {err:e})"));
        }
        Ok(basis)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `i` of eigenvector `k`.
    #[inline]
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.vectors[i * self.n + k]
    }

    /// Row `i` of the eigenvector matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, k)).collect()
    }

    pub fn vectors_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `‖XᵀX − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|i| self.entry(i, a) * self.entry(i, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                acc += (dot - target).powi(2);
            }
        }
        acc.sqrt()
    }

    /// `X diag(lam) Xᵀ`, symmetrized.
    pub fn compose(&self, lam: &[f64]) -> SymMatrix {
        assert_eq!(lam.len(), self.n);
        let n = self.n;
        let mut full = vec![0.0; n * n];
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..n {
                let rj = self.row(j);
                full[i * n + j] = (0..n).map(|k| ri[k] * lam[k] * rj[k]).sum();
            }
        }
        SymMatrix::from_upper_fn(n, |i, j| 0.5 * (full[i * n + j] + full[j * n + i]))
    }

    /// `Xᵀ A X`: the matrix `a` expressed in this basis.
    pub fn to_spectral(&self, a: &SymMatrix) -> SymMatrix {
        let n = self.n;
        assert_eq!(a.n(), n);
        // AX, row-major
        let mut ax = vec![0.0; n * n];
        for i in 0..n {
            let arow = a.row(i);
            for k in 0..n {
                ax[i * n + k] = (0..n).map(|l| arow[l] * self.entry(l, k)).sum();
            }
        }
        let mut full = vec![0.0; n * n];
        for p in 0..n {
            for q in 0..n {
                full[p * n + q] = (0..n).map(|i| self.entry(i, p) * ax[i * n + q]).sum();
            }
        }
        SymMatrix::from_upper_fn(n, |i, j| 0.5 * (full[i * n + j] + full[j * n + i]))
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// An off-diagonal entry is annihilated unless it is negligible next to the
/// geometric mean of its two diagonal entries, which keeps small eigenpairs
/// accurate to working precision instead of to a fraction of `‖A‖`.
///
/// Eigenvalues are returned in descending order. Each eigenvector is signed so
/// that its entry of largest magnitude is nonnegative (ties, within 1e-12
/// relative, go to the lowest index).
pub fn eig_sym(a: &SymMatrix) -> Result<Eigenbasis> {
    if !a.is_finite() {
        return invalid("matrix has non-finite entries");
    }
    let n = a.n();
    let mut w = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                let scale = (w[p * n + p] * w[q * n + q]).abs().sqrt();
                if apq.abs() <= f64::EPSILON * scale || apq.abs() < f64::MIN_POSITIVE {
                    w[p * n + q] = 0.0;
                    w[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (w[q * n + q] - w[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[k * n + p];
                    let akq = w[k * n + q];
                    w[k * n + p] = c * akp - s * akq;
                    w[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[p * n + k];
                    let aqk = w[q * n + k];
                    w[p * n + k] = c * apk - s * aqk;
                    w[q * n + k] = s * apk + c * aqk;
                }
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the sweep order for exactly equal eigenvalues
    order.sort_by(|&x, &y| w[y * n + y].total_cmp(&w[x * n + x]));

    let values: Vec<f64> = order.iter().map(|&k| w[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        let col: Vec<f64> = (0..n).map(|i| v[i * n + src]).collect();
        let sign = sign_for_convention(&col);
        for i in 0..n {
            vectors[i * n + dst] = sign * col[i];
        }
    }
    Ok(Eigenbasis { n, vectors, values })
}

fn sign_for_convention(col: &[f64]) -> f64 {
    let max_abs = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lead = col
        .iter()
        .find(|v| v.abs() >= max_abs * (1.0 - 1e-12))
        .copied()
        .unwrap_or(0.0);
    if lead < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `Aᵏ` by repeated squaring; `A⁰ = I`.
pub fn mat_power(a: &SymMatrix, k: u32) -> SymMatrix {
    let mut result = SymMatrix::identity(a.n());
    let mut base = a.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = result.commuting_product(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.commuting_product(&base);
        }
    }
    result
}

pub fn frob_norm(a: &SymMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sum of absolute values of all entries.
pub fn l11_norm(a: &SymMatrix) -> f64 {
    a.data.iter().map(|v| v.abs()).sum()
}

pub fn trace(a: &SymMatrix) -> f64 {
    (0..a.n()).map(|i| a.get(i, i)).sum()
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Matrix CSV: first line `n`, then `n` lines of `n` comma-separated values.
pub fn write_matrix_csv<W: Write>(a: &SymMatrix, mut out: W) -> Result<()> {
    out.write_all(matrix_csv_string(a).as_bytes())?;
    Ok(())
}

pub fn matrix_csv_string(a: &SymMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", a.n());
    for i in 0..a.n() {
        let row: Vec<String> = a.row(i).iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<SymMatrix> {
    let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad matrix order line: {header:?}")))?;
    if n == 0 {
        return Err(Error::Parse("matrix order must be positive".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {i}")))??;
        rows.push(parse_csv_row(&line)?);
    }
    SymMatrix::from_rows(&rows)
}

pub(crate) fn parse_csv_row(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?}"))))
        .collect()
}
