//! Error and retrieval scores comparing a recovered matrix to the ground truth.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::matcore::{fmt_f64, frob_norm, l11_norm, trace, SymMatrix};
use crate::polytope::EigenvalueVector;

/// Integer powers searched by [`repre`].
pub const REPRE_MAX_INTEGER_POWER: i32 = 40;
const REPRE_GRID_MIN: f64 = 0.1;
const REPRE_GRID_MAX: f64 = 40.0;
const REPRE_GRID_STEP: f64 = 0.05;
const REPRE_REFINE_TOL: f64 = 1e-6;

fn same_order(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.n() != b.n() {
        return invalid(format!("matrices have orders {} and {}", a.n(), b.n()));
    }
    Ok(())
}

/// Mean error per reconstructed entry, `(1/N) ‖T/‖T‖_F − T̂/‖T̂‖_F‖_F`.
pub fn mepre(t: &SymMatrix, t_hat: &SymMatrix) -> Result<f64> {
    same_order(t, t_hat)?;
    let (a, b) = (frob_norm(t), frob_norm(t_hat));
    if a == 0.0 || b == 0.0 {
        return Err(Error::Undefined("MEPRE of a zero matrix".into()));
    }
    let d: f64 = t
        .as_slice()
        .iter()
        .zip(t_hat.as_slice())
        .map(|(x, y)| {
            let e = x / a - y / b;
            e * e
        })
        .sum();
    Ok(d.sqrt() / t.n() as f64)
}

/// Best power found by [`repre_search`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepreFit {
    pub value: f64,
    pub k: f64,
    /// Whether the minimum came from the integer family (standard powers)
    /// rather than the real grid (signed powers).
    pub integer: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn repre_at(powered: &[f64], target: &[f64]) -> f64 {
    let s = max_abs(powered);
    if s == 0.0 || !s.is_finite() {
        return f64::INFINITY;
    }
    let d: f64 = powered.iter().zip(target).map(|(p, t)| (p / s - t).powi(2)).sum();
    d.sqrt() / powered.len() as f64
}

fn signed_power(v: f64, k: f64) -> f64 {
    v.signum() * v.abs().powf(k)
}

/// Minimizes `(1/N) ‖Λᴷ/‖Λᴷ‖_∞ − Λ̂/‖Λ̂‖_∞‖₂` over integer `K` in `[1, 40]`
/// and over real `K` in `[0.1, 40]` with signed powers.
pub fn repre_search(lam: &EigenvalueVector, lam_hat: &EigenvalueVector) -> Result<RepreFit> {
    if lam.len() != lam_hat.len() || lam.is_empty() {
        return invalid(format!("eigenvalue vectors have lengths {} and {}", lam.len(), lam_hat.len()));
    }
    let (s, s_hat) = (max_abs(lam.values()), max_abs(lam_hat.values()));
    if s == 0.0 || s_hat == 0.0 {
        return Err(Error::Undefined("REPRE of a zero eigenvalue vector".into()));
    }
    let target: Vec<f64> = lam_hat.values().iter().map(|v| v / s_hat).collect();
    // Powers of Λ/‖Λ‖_∞ give the same normalized vector as powers of Λ and never overflow.
    let base: Vec<f64> = lam.values().iter().map(|v| v / s).collect();

    let mut best = RepreFit { value: f64::INFINITY, k: 1.0, integer: true };
    for k in 1..=REPRE_MAX_INTEGER_POWER {
        let p: Vec<f64> = base.iter().map(|v| v.powi(k)).collect();
        let value = repre_at(&p, &target);
        if value < best.value {
            best = RepreFit { value, k: f64::from(k), integer: true };
        }
    }

    let eval = |k: f64| {
        let p: Vec<f64> = base.iter().map(|&v| signed_power(v, k)).collect();
        repre_at(&p, &target)
    };
    let steps = ((REPRE_GRID_MAX - REPRE_GRID_MIN) / REPRE_GRID_STEP).round() as usize;
    let mut grid_best = (f64::INFINITY, REPRE_GRID_MIN);
    for i in 0..=steps {
        let k = REPRE_GRID_MIN + i as f64 * REPRE_GRID_STEP;
        let value = eval(k);
        if value < grid_best.0 {
            grid_best = (value, k);
        }
    }
    let lo = (grid_best.1 - REPRE_GRID_STEP).max(REPRE_GRID_MIN);
    let hi = (grid_best.1 + REPRE_GRID_STEP).min(REPRE_GRID_MAX);
    let k = golden_section(eval, lo, hi, REPRE_REFINE_TOL);
    let refined = (eval(k), k);
    let real_best = if refined.0 < grid_best.0 { refined } else { grid_best };
    if real_best.0 < best.value {
        best = RepreFit { value: real_best.0, k: real_best.1, integer: false };
    }
    Ok(best)
}

/// Relative error on the powered retrieved eigenvalues.
pub fn repre(lam: &EigenvalueVector, lam_hat: &EigenvalueVector) -> Result<f64> {
    repre_search(lam, lam_hat).map(|f| f.value)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// `(1/N)(trace T̂ − trace T)`.
pub fn diff_simple(t_true: &SymMatrix, t_hat: &SymMatrix) -> Result<f64> {
    same_order(t_true, t_hat)?;
    Ok((trace(t_hat) - trace(t_true)) / t_true.n() as f64)
}

/// `(1/N²)(‖T̂‖_{1,1} − ‖T‖_{1,1})`.
pub fn diff_sparse(t_true: &SymMatrix, t_hat: &SymMatrix) -> Result<f64> {
    same_order(t_true, t_hat)?;
    let n = t_true.n() as f64;
    Ok((l11_norm(t_hat) - l11_norm(t_true)) / (n * n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Best threshold for edge retrieval plus the full ROC sweep.
#[derive(Clone, Debug)]
pub struct EdgeScore {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub threshold: f64,
    /// From `t = +∞` (nothing retrieved) down to `t = −∞` (everything retrieved).
    pub roc: Vec<RocPoint>,
}

impl EdgeScore {
    pub fn roc_csv(&self) -> String {
        let mut s = String::from("threshold,fpr,tpr\n");
        for p in &self.roc {
            let _ = writeln!(s, "{},{},{}", fmt_f64(p.threshold), fmt_f64(p.fpr), fmt_f64(p.tpr));
        }
        s
    }
}

/// Counts for one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub positives: usize,
    pub negatives: usize,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        let retrieved = self.tp + self.fp;
        if retrieved == 0 {
            0.0
        } else {
            self.tp as f64 / retrieved as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.positives == 0 {
            0.0
        } else {
            self.tp as f64 / self.positives as f64
        }
    }

    pub fn f_measure(&self) -> f64 {
        f_measure(self.precision(), self.recall())
    }

    pub fn fpr(&self) -> f64 {
        if self.negatives == 0 {
            0.0
        } else {
            self.fp as f64 / self.negatives as f64
        }
    }
}

pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn upper_pairs(t: &SymMatrix, t_hat: &SymMatrix) -> Vec<(f64, bool)> {
    let n = t.n();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            v.push((t_hat.get(i, j), t.get(i, j) > 0.0));
        }
    }
    v
}

/// Confusion counts for `T̂ > threshold` against the support of `T`, on the
/// upper triangle including the diagonal.
pub fn confusion_at(t: &SymMatrix, t_hat: &SymMatrix, threshold: f64) -> Result<Confusion> {
    same_order(t, t_hat)?;
    let pairs = upper_pairs(t, t_hat);
    let positives = pairs.iter().filter(|p| p.1).count();
    let mut c = Confusion { tp: 0, fp: 0, positives, negatives: pairs.len() - positives };
    for (v, truth) in pairs {
        if v > threshold {
            if truth {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
    }
    Ok(c)
}

/// Candidate thresholds: `−∞`, each distinct entry of `T̂`, and `+∞`, ascending.
pub fn candidate_thresholds(t_hat: &SymMatrix) -> Vec<f64> {
    let n = t_hat.n();
    let mut v: Vec<f64> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| t_hat.get(i, j)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let mut out = Vec::with_capacity(v.len() + 2);
    out.push(f64::NEG_INFINITY);
    out.extend(v);
    out.push(f64::INFINITY);
    out
}

/// Exhaustive threshold search maximizing the F-measure. Ties go to the
/// smallest threshold.
pub fn edge_score(t: &SymMatrix, t_hat: &SymMatrix) -> Result<EdgeScore> {
    same_order(t, t_hat)?;
    let mut pairs = upper_pairs(t, t_hat);
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = pairs.iter().filter(|p| p.1).count();
    let negatives = pairs.len() - positives;
    let thresholds = candidate_thresholds(t_hat);

    // Walk thresholds from +∞ downwards; entries strictly above t are retrieved.
    let mut roc = Vec::with_capacity(thresholds.len());
    let mut best: Option<(f64, Confusion)> = None;
    let mut c = Confusion { tp: 0, fp: 0, positives, negatives };
    let mut next = 0;
    for &th in thresholds.iter().rev() {
        while next < pairs.len() && pairs[next].0 > th {
            if pairs[next].1 {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
            next += 1;
        }
        roc.push(RocPoint { threshold: th, fpr: c.fpr(), tpr: c.recall() });
        // Descending sweep: `>=` moves ties to the smaller threshold.
        if best.is_none_or(|(_, b)| c.f_measure() >= b.f_measure()) {
            best = Some((th, c));
        }
    }
    let (threshold, c) = best.expect("at least two thresholds");
    Ok(EdgeScore { precision: c.precision(), recall: c.recall(), f_measure: c.f_measure(), threshold, roc })
}

/// Reorders ground-truth eigenvalues to match a basis sorted by descending
/// covariance eigenvalue: the covariance of diffused signals is an even
/// function of each `λ`, increasing in `|λ|`, so the sample basis ranks
/// eigenvalues by magnitude. Ties in magnitude keep the positive value first.
pub fn align_by_magnitude(values: &[f64]) -> EigenvalueVector {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
    EigenvalueVector(v)
}

/// One `metric,value,params…` CSV row; params are written as `key=value`.
pub fn metric_row(metric: &str, value: f64, params: &[(&str, String)]) -> String {
    let mut s = format!("{metric},{}", fmt_f64(value));
    for (k, v) in params {
        let _ = write!(s, ",{k}={v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SymMatrix {
        SymMatrix::from_rows(&[vec![0.0, 0.6, 0.0], vec![0.6, 0.1, 0.3], vec![0.0, 0.3, 0.0]]).unwrap()
    }

    #[test]
    fn mepre_trivial_cases() {
        let t = sample();
        assert_eq!(mepre(&t, &t).unwrap(), 0.0);
        assert!(mepre(&t, &t.scaled(2.0)).unwrap() < 1e-16);
        assert!(matches!(mepre(&t, &SymMatrix::zeros(3)), Err(Error::Undefined(_))));
        assert!(mepre(&t, &SymMatrix::identity(2)).is_err());
    }

    #[test]
    fn mepre_by_hand() {
        // diag(1,0) vs diag(0,1): normalized difference has norm √2, N = 2
        let v = mepre(&SymMatrix::from_diag(&[1.0, 0.0]), &SymMatrix::from_diag(&[0.0, 1.0])).unwrap();
        assert!((v - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn repre_examples() {
        let lam = EigenvalueVector(vec![1.0, 0.5]);
        assert!(repre(&lam, &lam).unwrap() < 1e-15);
        let fit = repre_search(&lam, &EigenvalueVector(vec![1.0, 0.25])).unwrap();
        assert!(fit.value < 1e-15);
        assert_eq!(fit.k, 2.0);
        assert!(fit.integer);
        assert!(repre(&lam, &EigenvalueVector(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn repre_real_power() {
        let lam = EigenvalueVector(vec![1.0, 0.5, -0.3]);
        let hat = EigenvalueVector(lam.values().iter().map(|&v| signed_power(v, 2.37)).collect());
        let fit = repre_search(&lam, &hat).unwrap();
        assert!(!fit.integer);
        assert!((fit.k - 2.37).abs() < 1e-4, "{fit:?}");
        assert!(fit.value < 1e-6);
    }

    #[test]
    fn diffs() {
        let t = sample();
        assert_eq!(diff_simple(&t, &t).unwrap(), 0.0);
        assert_eq!(diff_sparse(&t, &t).unwrap(), 0.0);
        let z = SymMatrix::zeros(3);
        assert!((diff_simple(&z, &t).unwrap() - 0.1 / 3.0).abs() < 1e-16);
        assert!((diff_sparse(&z, &t).unwrap() - 1.9 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_retrieval() {
        let t = sample();
        let s = edge_score(&t, &t).unwrap();
        assert_eq!(s.f_measure, 1.0);
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 1.0);
        let first = s.roc.first().unwrap();
        let last = s.roc.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn noisy_retrieval_by_hand() {
        // support {(0,1), (1,2)}; T̂ ranks (0,2) above (1,2)
        let t = SymMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let t_hat = SymMatrix::from_rows(&[vec![0.0, 0.9, 0.5], vec![0.9, 0.0, 0.4], vec![0.5, 0.4, 0.0]]).unwrap();
        let s = edge_score(&t, &t_hat).unwrap();
        // t = 0.5 gives p = 1, r = 1/2, F = 2/3; t = 0 gives p = 2/3, r = 1, F = 0.8
        assert!((s.f_measure - 0.8).abs() < 1e-15);
        assert_eq!(s.threshold, 0.0);
        let c = confusion_at(&t, &t_hat, 0.5).unwrap();
        assert_eq!((c.tp, c.fp), (1, 0));
    }

    #[test]
    fn empty_retrieval_has_zero_precision() {
        let c = Confusion { tp: 0, fp: 0, positives: 3, negatives: 2 };
        assert_eq!(c.precision(), 0.0);
        assert_eq!(c.f_measure(), 0.0);
    }

    #[test]
    fn magnitude_alignment() {
        let v = align_by_magnitude(&[1.0, -0.2, 0.5, -0.7, 0.2]);
        assert_eq!(v.values(), &[1.0, -0.7, 0.5, 0.2, -0.2]);
    }

    #[test]
    fn csv_rows() {
        assert_eq!(metric_row("mepre", 0.5, &[("M", "10".into())]), "mepre,5.0000000000000000e-1,M=10");
    }
}
