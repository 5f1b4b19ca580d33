use adversary::adversary::{brute_force_bound as brute_core, LearningProblem, Mode};
use adversary::error::Error;
use adversary::halfmaj::{self, CertMode};
use adversary::theorem4::PGrid;
use adversary::{cgt, johnson, krawtchouk, theorem4, weights};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn mode(name: &str) -> PyResult<CertMode> {
    CertMode::parse(name).map_err(py_err)
}

/// Hamming weights on which the symmetric junta is true.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct WeightSet {
    inner: weights::WeightSet,
}

#[pymethods]
impl WeightSet {
    #[new]
    fn new(k: usize, members: Vec<usize>) -> PyResult<Self> {
        Ok(WeightSet { inner: weights::WeightSet::new(k, members).map_err(py_err)? })
    }

    /// `or`, `exact-half`, `majority` or `custom:<w1,w2,..>`.
    #[staticmethod]
    fn parse(spec: &str, k: usize) -> PyResult<Self> {
        Ok(WeightSet { inner: weights::WeightSet::parse(spec, k).map_err(py_err)? })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn members(&self) -> Vec<usize> {
        self.inner.members()
    }

    fn __contains__(&self, w: usize) -> bool {
        self.inner.contains(w)
    }

    fn __repr__(&self) -> String {
        format!("WeightSet(k={}, members={:?})", self.inner.k, self.inner.members())
    }
}

#[pyclass(frozen, get_all)]
struct BoundReport {
    k: usize,
    weights: Vec<usize>,
    objective: f64,
    upper: f64,
    d: Vec<f64>,
    argmax: usize,
    grid_size: usize,
    iterations: usize,
    cuts: usize,
}

#[pymethods]
impl BoundReport {
    fn __repr__(&self) -> String {
        format!("BoundReport(k={}, objective={}, d={:?})", self.k, self.objective, self.d)
    }
}

#[pyclass(frozen, get_all)]
struct CgtReport {
    n: usize,
    k: usize,
    feasible: bool,
    max_pair_deviation: f64,
    min_pair_value: f64,
    max_diag: f64,
    pi_sqrt_k: f64,
    nodes: usize,
}

#[pymethods]
impl CgtReport {
    fn __repr__(&self) -> String {
        format!(
            "CgtReport(n={}, k={}, feasible={}, max_pair_deviation={:e})",
            self.n, self.k, self.feasible, self.max_pair_deviation
        )
    }
}

#[pyclass(frozen, get_all)]
struct ResidualReport {
    k: usize,
    mode: String,
    first: f64,
    third: Option<f64>,
    second: Vec<(usize, f64)>,
    max_residual: f64,
    feasible: bool,
}

/// Dual feasible point `(Lambda_1, .., Lambda_k)` of the trace-norm program.
#[pyclass(frozen)]
struct LambdaFamily {
    inner: halfmaj::LambdaFamily,
}

#[pymethods]
impl LambdaFamily {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.name()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn seed_trace_norm(&self) -> f64 {
        self.inner.seed_trace_norm
    }

    #[getter]
    fn recursion_bound(&self) -> f64 {
        self.inner.recursion_bound
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients.clone()
    }

    /// `Lambda_m` as rows, or `None` for an all-zero block.
    fn matrix(&self, m: usize) -> PyResult<Option<Vec<Vec<f64>>>> {
        if m == 0 || m > self.inner.k {
            return Err(PyValueError::new_err(format!("level m = {m} outside 1..={}", self.inner.k)));
        }
        Ok(self.inner.matrices[m - 1]
            .as_ref()
            .map(|a| (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()))
    }

    #[pyo3(signature = (tol = 1e-8))]
    fn residuals(&self, tol: f64) -> PyResult<ResidualReport> {
        let r = halfmaj::verify_constraints(&self.inner, tol).map_err(py_err)?;
        Ok(ResidualReport {
            k: r.k,
            mode: r.mode.name().to_string(),
            first: r.first,
            third: r.third,
            second: r.second,
            max_residual: r.max_residual,
            feasible: r.feasible,
        })
    }

    fn __repr__(&self) -> String {
        format!("LambdaFamily(k={}, mode={}, objective={})", self.inner.k, self.inner.mode, self.inner.objective)
    }
}

/// Normalized Krawtchouk basis `(kappa_0, .., kappa_m)` as rows.
#[pyfunction]
fn kraw_basis(m: usize, p: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(krawtchouk::kraw_basis(m, p).map_err(py_err)?.into_iter().map(|v| v.entries).collect())
}

/// Unnormalized weighted Krawtchouk vector `K_t^{(m,p)}`.
#[pyfunction]
fn kraw_vector(m: usize, p: f64, t: usize) -> PyResult<Vec<f64>> {
    Ok(krawtchouk::kraw_vector(m, p, t).map_err(py_err)?.entries)
}

#[pyfunction]
fn gram_deviation(m: usize, p: f64) -> PyResult<f64> {
    Ok(krawtchouk::gram_deviation(&krawtchouk::kraw_basis(m, p).map_err(py_err)?))
}

/// Projector onto the `t`-th eigenspace of the Johnson scheme on `k`-subsets of `[n]`.
#[pyfunction]
fn projector(n: usize, k: usize, t: usize) -> PyResult<Vec<Vec<f64>>> {
    let p = johnson::projector(n, k, t).map_err(py_err)?;
    Ok((0..p.matrix.nrows()).map(|i| p.matrix.row(i).iter().copied().collect()).collect())
}

#[pyfunction]
fn projector_sum_check<'py>(py: Python<'py>, n: usize, k: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = johnson::projector_sum_check(n, k).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("completeness", r.completeness)?;
    out.set_item("cross", r.cross)?;
    out.set_item("idempotence", r.idempotence)?;
    out.set_item("trace", r.trace)?;
    Ok(out)
}

/// Optimum of the limiting program `max_i d_i` over a Chebyshev grid.
#[pyfunction]
#[pyo3(signature = (weights, p_grid = 65, tol = 1e-8))]
fn maximize_bound(py: Python<'_>, weights: &WeightSet, p_grid: usize, tol: f64) -> PyResult<BoundReport> {
    let grid = PGrid::chebyshev(p_grid).map_err(py_err)?;
    let ws = weights.inner.clone();
    let r = py.detach(|| theorem4::maximize_bound(&ws, &grid, tol)).map_err(py_err)?;
    Ok(BoundReport {
        k: r.k,
        weights: r.weights,
        objective: r.objective,
        upper: r.upper,
        d: r.d,
        argmax: r.argmax,
        grid_size: r.grid_size,
        iterations: r.iterations,
        cuts: r.cuts,
    })
}

/// Largest block norm of `d` over the grid; feasible when at most `1 + tol`.
#[pyfunction]
#[pyo3(signature = (d, weights, p_grid = 65, tol = 1e-8))]
fn check_feasible(d: Vec<f64>, weights: &WeightSet, p_grid: usize, tol: f64) -> PyResult<(bool, f64)> {
    let grid = PGrid::chebyshev(p_grid).map_err(py_err)?;
    let d = adversary::adversary::DList::new(d).map_err(py_err)?;
    let r = theorem4::feasible(&d, &weights.inner, &grid, tol).map_err(py_err)?;
    Ok((r.feasible, r.worst_norm))
}

/// Finite-`n` search over trace-free symmetric adversaries; returns `(objective, d)`.
#[pyfunction]
#[pyo3(signature = (n, weights, resolution = 64))]
fn brute_force_bound(py: Python<'_>, n: usize, weights: &WeightSet, resolution: usize) -> PyResult<(f64, Vec<f64>)> {
    let problem = LearningProblem::new(n, weights.inner.k, weights.inner.clone(), Mode::ExactK).map_err(py_err)?;
    let r = py.detach(|| brute_core(&problem, resolution)).map_err(py_err)?;
    Ok((r.objective, r.d.values))
}

/// Builds the group-testing dual family and checks feasibility.
#[pyfunction]
#[pyo3(signature = (n, k, nodes = 64, tol = 1e-8))]
fn verify_cgt(py: Python<'_>, n: usize, k: usize, nodes: usize, tol: f64) -> PyResult<CgtReport> {
    let r = py.detach(|| cgt::verify_cgt(n, k, nodes, tol)).map_err(py_err)?;
    Ok(CgtReport {
        n: r.n,
        k: r.k,
        feasible: r.feasible,
        max_pair_deviation: r.max_pair_deviation,
        min_pair_value: r.min_pair_value,
        max_diag: r.max_diag,
        pi_sqrt_k: r.pi_sqrt_k,
        nodes: r.nodes,
    })
}

/// `mode` is `exact-half`, `majority-even` or `majority-odd-diff`.
#[pyfunction]
fn lambda_family(py: Python<'_>, k: usize, mode: &str) -> PyResult<LambdaFamily> {
    let m = self::mode(mode)?;
    let inner = py.detach(|| halfmaj::lambda_family(k, m)).map_err(py_err)?;
    Ok(LambdaFamily { inner })
}

/// `(k, g(k), g(k) / k^{1/4})` for every admissible `k <= k_max`.
#[pyfunction]
fn growth_table(py: Python<'_>, mode: &str, k_max: usize) -> PyResult<Vec<(usize, f64, f64)>> {
    let m = self::mode(mode)?;
    let table = py.detach(|| halfmaj::growth_check(m, k_max)).map_err(py_err)?;
    Ok(table.rows.into_iter().map(|r| (r.k, r.g, r.ratio)).collect())
}

#[pyfunction]
fn nonadaptive_overlap(n: usize, k: usize, s_size: usize) -> PyResult<f64> {
    halfmaj::nonadaptive_overlap(n, k, s_size).map_err(py_err)
}

/// Positive-weight majority construction; returns `(m_value, min_pair_ratio, window)`.
#[pyfunction]
fn maj_positive_adv(n: usize, k: usize, d: usize) -> PyResult<(f64, f64, (usize, usize))> {
    let r = halfmaj::maj_positive_adv(n, k, d).map_err(py_err)?;
    Ok((r.m_value, r.min_pair_ratio, r.window))
}

#[pymodule]
fn junta_adversary(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<WeightSet>()?;
    m.add_class::<BoundReport>()?;
    m.add_class::<CgtReport>()?;
    m.add_class::<ResidualReport>()?;
    m.add_class::<LambdaFamily>()?;
    m.add_function(wrap_pyfunction!(kraw_basis, m)?)?;
    m.add_function(wrap_pyfunction!(kraw_vector, m)?)?;
    m.add_function(wrap_pyfunction!(gram_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(projector, m)?)?;
    m.add_function(wrap_pyfunction!(projector_sum_check, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify_cgt, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_family, m)?)?;
    m.add_function(wrap_pyfunction!(growth_table, m)?)?;
    m.add_function(wrap_pyfunction!(nonadaptive_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(maj_positive_adv, m)?)?;
    Ok(())
}
