//! Python bindings for the `ctl` toolkit.

use ctl::exploration::{component_sizes, rescale_walk};
use ctl::geometry::TorusPoint;
use ctl::mixing::KernelSpec;
use ctl::model::RevealOracle;
use ctl::rng::{stream, Purpose};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: ctl::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point((x, y): (u32, u32)) -> TorusPoint {
    TorusPoint { x, y }
}

#[pyclass(name = "GraphParams", frozen, skip_from_py_object, module = "ctl_py")]
#[derive(Clone)]
struct PyGraphParams {
    inner: ctl::GraphParams,
}

#[pymethods]
impl PyGraphParams {
    #[new]
    #[pyo3(signature = (side, c=None, alpha=1.0))]
    fn new(side: u32, c: Option<f64>, alpha: f64) -> PyResult<Self> {
        let inner = match c {
            None if alpha == 1.0 => ctl::GraphParams::critical(side),
            None => ctl::GraphParams::new(side, ctl::critical_coupling(), alpha),
            Some(c) => ctl::GraphParams::new(side, c, alpha),
        }
        .map_err(py_err)?;
        Ok(PyGraphParams { inner })
    }

    #[staticmethod]
    fn critical(side: u32) -> PyResult<Self> {
        Ok(PyGraphParams { inner: ctl::GraphParams::critical(side).map_err(py_err)? })
    }

    #[getter]
    fn side(&self) -> u32 {
        self.inner.side
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn ring_probability(&self, r: u32) -> f64 {
        self.inner.ring_probability(r)
    }

    fn expected_degree(&self) -> f64 {
        ctl::expected_degree_sum(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("GraphParams(side={}, c={}, alpha={})", self.inner.side, self.inner.c, self.inner.alpha)
    }
}

#[pyfunction]
fn critical_coupling() -> f64 {
    ctl::critical_coupling()
}

#[pyfunction]
fn torus_distance(u: (u32, u32), v: (u32, u32), side: u32) -> PyResult<u32> {
    ctl::torus_distance(point(u), point(v), side).map_err(py_err)
}

#[pyfunction]
fn ring_size(side: u32, r: u32) -> u64 {
    ctl::ring_size(side, r)
}

#[pyfunction]
fn enumerate_ring(center: (u32, u32), r: u32, side: u32) -> PyResult<Vec<(u32, u32)>> {
    Ok(ctl::enumerate_ring(point(center), r, side).map_err(py_err)?.into_iter().map(|p| (p.x, p.y)).collect())
}

#[pyfunction]
fn edge_probability(side: u32, r: u32, c: f64, alpha: f64) -> PyResult<f64> {
    ctl::edge_probability(side, r, c, alpha).map_err(py_err)
}

/// Lazy exploration; returns `(z, completed_sizes, partial)`.
#[pyfunction]
#[pyo3(signature = (params, budget=None, seed=0, run=0))]
fn explore(py: Python<'_>, params: &PyGraphParams, budget: Option<usize>, seed: u64, run: u64) -> PyResult<(Vec<i64>, Vec<u64>, Option<u64>)> {
    let params = params.inner;
    let budget = budget.unwrap_or(params.vertex_count());
    py.detach(|| {
        let mut rng = stream(seed, Purpose::Exploration, run);
        let trace = ctl::explore(&mut RevealOracle::new(params), &mut rng, budget)?;
        let sizes = component_sizes(&trace)?;
        Ok((trace.z, sizes.completed, sizes.partial))
    })
    .map_err(py_err)
}

/// `(s, z~(s))` pairs of one exploration on the given grid.
#[pyfunction]
#[pyo3(signature = (params, s_grid, seed=0, run=0))]
fn rescaled_walk(py: Python<'_>, params: &PyGraphParams, s_grid: Vec<f64>, seed: u64, run: u64) -> PyResult<Vec<(f64, f64)>> {
    let params = params.inner;
    let n = params.vertex_count();
    let s_max = s_grid.iter().copied().fold(0.0, f64::max);
    let budget = ctl::stats::horizon_budget(&params, s_max).map_err(py_err)?;
    py.detach(|| {
        let mut rng = stream(seed, Purpose::Exploration, run);
        let trace = ctl::explore(&mut RevealOracle::new(params), &mut rng, budget)?;
        rescale_walk(&trace, n, &s_grid)
    })
    .map_err(py_err)
}

/// Rows of the top ordered excursion lengths of `B` on `[0, horizon]`.
#[pyfunction]
#[pyo3(signature = (horizon, paths, top=3, dt=ctl::limit::DEFAULT_DT, seed=0, include_truncated=false))]
fn sample_limit_components(py: Python<'_>, horizon: f64, paths: usize, top: usize, dt: f64, seed: u64, include_truncated: bool) -> PyResult<Vec<Vec<f64>>> {
    py.detach(|| ctl::limit::sample_limit_components(horizon, dt, paths, top, seed, include_truncated))
        .map(|s| s.rows)
        .map_err(py_err)
}

#[pyfunction]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    ctl::stats::ks_two_sample(&a, &b).map_err(py_err)
}

/// `(k, max_tv, bound)` rows from the listed starting points.
#[pyfunction]
#[pyo3(signature = (params, k_max, starts=vec![(0, 0)]))]
fn mixing_profile(py: Python<'_>, params: &PyGraphParams, k_max: usize, starts: Vec<(u32, u32)>) -> PyResult<Vec<(usize, f64, f64)>> {
    let spec = KernelSpec::new(params.inner);
    let starts: Vec<TorusPoint> = starts.into_iter().map(point).collect();
    let report = py.detach(|| ctl::mixing::mixing_profile(&spec, k_max, &starts)).map_err(py_err)?;
    Ok(report.rows.into_iter().map(|r| (r.k, r.max_tv, r.bound)).collect())
}

/// `(K, value, ci_low, ci_high)` with `value = K * P(max generation > K)`.
#[pyfunction]
#[pyo3(signature = (params, thresholds, samples, seed=0))]
fn branching_tail(py: Python<'_>, params: &PyGraphParams, thresholds: Vec<u64>, samples: u64, seed: u64) -> Vec<(u64, f64, f64, f64)> {
    let law = ctl::branching::OffspringLaw::new(params.inner);
    py.detach(|| ctl::branching::max_tail_profile(&law, &thresholds, samples, seed))
        .into_iter()
        .map(|t| (t.threshold, t.value, t.ci_low, t.ci_high))
        .collect()
}

#[pymodule]
fn ctl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraphParams>()?;
    m.add_function(wrap_pyfunction!(critical_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(torus_distance, m)?)?;
    m.add_function(wrap_pyfunction!(ring_size, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_ring, m)?)?;
    m.add_function(wrap_pyfunction!(edge_probability, m)?)?;
    m.add_function(wrap_pyfunction!(explore, m)?)?;
    m.add_function(wrap_pyfunction!(rescaled_walk, m)?)?;
    m.add_function(wrap_pyfunction!(sample_limit_components, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_profile, m)?)?;
    m.add_function(wrap_pyfunction!(branching_tail, m)?)?;
    Ok(())
}
