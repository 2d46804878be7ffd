//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use diffpoly::experiments::{run_experiment as run, ExperimentConfig, ExperimentKind};
use diffpoly::graphmodels::{self, AdjacencyMatrix};
use diffpoly::matcore::{eig_sym, Eigenbasis, SymMatrix};
use diffpoly::metrics;
use diffpoly::polytope::{self, EigenvalueVector, PolytopeConstraints};
use diffpoly::seeding::stream;
use diffpoly::select::{self, Strategy};
use diffpoly::signals::{self, DiffusionCounts, ObservationSet, SourceDistribution};

type Rows = Vec<Vec<f64>>;

fn py_err(e: diffpoly::Error) -> PyErr {
    if e.is_solver_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix(rows: &Rows) -> PyResult<SymMatrix> {
    SymMatrix::from_rows(rows).map_err(py_err)
}

fn adjacency(rows: &Rows) -> PyResult<AdjacencyMatrix> {
    AdjacencyMatrix::new(matrix(rows)?).map_err(py_err)
}

/// Signals as rows of length M, one row per vertex.
fn observations(x: &Rows) -> PyResult<ObservationSet> {
    let n = x.len();
    let m = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("signal rows have different lengths"));
    }
    ObservationSet::new(n, m, x.concat(), None).map_err(py_err)
}

fn strategy(name: &str) -> PyResult<Strategy> {
    name.parse().map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (n, radius, seed=0))]
fn random_geometric(n: usize, radius: f64, seed: u64) -> PyResult<Rows> {
    let mut rng = stream(seed, "graph", &[]);
    Ok(graphmodels::random_geometric(n, radius, &mut rng).map_err(py_err)?.w.to_rows())
}

#[pyfunction]
#[pyo3(signature = (n, probability, seed=0))]
fn erdos_renyi(n: usize, probability: f64, seed: u64) -> PyResult<Rows> {
    let mut rng = stream(seed, "graph", &[]);
    Ok(graphmodels::erdos_renyi(n, probability, &mut rng).map_err(py_err)?.w.to_rows())
}

#[pyfunction]
fn ring(n: usize) -> PyResult<Rows> {
    Ok(graphmodels::ring(n).map_err(py_err)?.w.to_rows())
}

/// `D^{-1/2} W D^{-1/2}`.
#[pyfunction]
fn diffusion_operator(w: Rows) -> PyResult<Rows> {
    Ok(graphmodels::diffusion_operator(&adjacency(&w)?).map_err(py_err)?.t.to_rows())
}

/// Eigenvalues in descending order and the eigenvectors as columns.
#[pyfunction]
fn eig(a: Rows) -> PyResult<(Vec<f64>, Rows)> {
    let b = eig_sym(&matrix(&a)?).map_err(py_err)?;
    Ok((b.values().to_vec(), b.vectors_rows()))
}

#[pyfunction]
#[pyo3(signature = (t, m, k_min=1, k_max=10, source="uniform", seed=0))]
fn generate_signals(t: Rows, m: usize, k_min: u32, k_max: u32, source: &str, seed: u64) -> PyResult<Rows> {
    let t = matrix(&t)?;
    let counts = DiffusionCounts::new(k_min, k_max).map_err(py_err)?;
    let source: SourceDistribution = source.parse().map_err(py_err)?;
    let mut rng = stream(seed, "signals", &[]);
    let obs = signals::generate_observations(&t, m, counts, source, &mut rng).map_err(py_err)?;
    Ok((0..obs.n()).map(|i| (0..obs.m()).map(|c| obs.get(i, c)).collect()).collect())
}

#[pyfunction]
fn sample_covariance(x: Rows) -> PyResult<Rows> {
    Ok(signals::sample_covariance(&observations(&x)?).map_err(py_err)?.sigma.to_rows())
}

/// Admissible eigenvalue vectors for a fixed eigenbasis.
#[pyclass]
struct Polytope {
    c: PolytopeConstraints,
}

impl Polytope {
    fn wrap(basis: &Eigenbasis) -> Self {
        Self { c: polytope::build_constraints(basis) }
    }
}

#[pymethods]
impl Polytope {
    /// From eigenvector columns (rows of the list are vertices) and their
    /// ordering values; λ = 1 is pinned at the largest value.
    #[new]
    fn new(vectors: Rows, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self::wrap(&Eigenbasis::from_parts(&vectors, values).map_err(py_err)?))
    }

    #[staticmethod]
    fn from_covariance(sigma: Rows) -> PyResult<Self> {
        Ok(Self::wrap(&eig_sym(&matrix(&sigma)?).map_err(py_err)?))
    }

    #[staticmethod]
    fn from_signals(x: Rows) -> PyResult<Self> {
        Ok(Self::wrap(&signals::sample_covariance(&observations(&x)?).map_err(py_err)?.basis))
    }

    #[getter]
    fn n(&self) -> usize {
        self.c.n()
    }

    #[getter]
    fn pinned_index(&self) -> usize {
        self.c.pinned_index()
    }

    #[pyo3(signature = (lam, tol=1e-9))]
    fn is_member(&self, lam: Vec<f64>, tol: f64) -> bool {
        polytope::is_member(&self.c, &EigenvalueVector(lam), tol)
    }

    fn reconstruct(&self, lam: Vec<f64>) -> PyResult<Rows> {
        Ok(polytope::reconstruct(self.c.basis(), &EigenvalueVector(lam)).map_err(py_err)?.to_rows())
    }

    /// Runs the `simple` or `sparse` LP; returns a dict with `lam`,
    /// `objective`, `iterations` and `degenerate`.
    fn solve<'py>(&self, py: Python<'py>, strategy_name: &str) -> PyResult<Bound<'py, PyDict>> {
        let sel = select::solve(&self.c, strategy(strategy_name)?).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("lam", sel.lam.values().to_vec())?;
        d.set_item("objective", sel.objective)?;
        d.set_item("iterations", sel.iterations)?;
        d.set_item("degenerate", sel.is_degenerate())?;
        Ok(d)
    }

    /// Projects a candidate matrix; returns a dict with `lam_hat`, `lam_m`,
    /// `distance` and `converged`.
    fn project<'py>(&self, py: Python<'py>, candidate: Rows) -> PyResult<Bound<'py, PyDict>> {
        let r = select::project_candidate(&self.c, &matrix(&candidate)?).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("lam_hat", r.lam_hat.values().to_vec())?;
        d.set_item("lam_m", r.lam_m.values().to_vec())?;
        d.set_item("distance", r.distance)?;
        d.set_item("converged", r.converged)?;
        Ok(d)
    }
}

#[pyfunction]
fn mepre(t: Rows, t_hat: Rows) -> PyResult<f64> {
    metrics::mepre(&matrix(&t)?, &matrix(&t_hat)?).map_err(py_err)
}

#[pyfunction]
fn repre(lam: Vec<f64>, lam_hat: Vec<f64>) -> PyResult<f64> {
    metrics::repre(&EigenvalueVector(lam), &EigenvalueVector(lam_hat)).map_err(py_err)
}

/// Best-threshold precision, recall and F-measure as a dict.
#[pyfunction]
fn edge_score<'py>(py: Python<'py>, t: Rows, t_hat: Rows) -> PyResult<Bound<'py, PyDict>> {
    let s = metrics::edge_score(&matrix(&t)?, &matrix(&t_hat)?).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("precision", s.precision)?;
    d.set_item("recall", s.recall)?;
    d.set_item("f_measure", s.f_measure)?;
    d.set_item("threshold", s.threshold)?;
    Ok(d)
}

/// `(index, distance)` pairs from best to worst; distance is None when the
/// projection failed.
#[pyfunction]
fn hypothesis_test(candidates: Vec<Rows>, x: Rows) -> PyResult<Vec<(usize, Option<f64>)>> {
    let cands = candidates.iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
    let ranking = select::hypothesis_test(&cands, &observations(&x)?).map_err(py_err)?;
    Ok(ranking.iter().map(|e| (e.index, e.distance())).collect())
}

/// Runs a named experiment with `key = value` overrides and returns the
/// summary CSV text.
#[pyfunction]
#[pyo3(signature = (name, overrides=None))]
fn run_experiment(name: &str, overrides: Option<Vec<(String, String)>>) -> PyResult<String> {
    let kind: ExperimentKind = name.parse().map_err(py_err)?;
    let mut cfg = ExperimentConfig::defaults(kind);
    for (k, v) in overrides.unwrap_or_default() {
        cfg.set(&k, &v).map_err(py_err)?;
    }
    Ok(run(&cfg).map_err(py_err)?.summary_csv())
}

#[pymodule]
fn pydiffpoly(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Polytope>()?;
    m.add_function(wrap_pyfunction!(random_geometric, m)?)?;
    m.add_function(wrap_pyfunction!(erdos_renyi, m)?)?;
    m.add_function(wrap_pyfunction!(ring, m)?)?;
    m.add_function(wrap_pyfunction!(diffusion_operator, m)?)?;
    m.add_function(wrap_pyfunction!(eig, m)?)?;
    m.add_function(wrap_pyfunction!(generate_signals, m)?)?;
    m.add_function(wrap_pyfunction!(sample_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(mepre, m)?)?;
    m.add_function(wrap_pyfunction!(repre, m)?)?;
    m.add_function(wrap_pyfunction!(edge_score, m)?)?;
    m.add_function(wrap_pyfunction!(hypothesis_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
