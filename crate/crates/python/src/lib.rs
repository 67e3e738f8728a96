//! Python bindings. Parameters, event sequences and fits are exposed as
//! classes; the remaining operations are plain functions.

use mmhp_core::decoding::{decode as decode_path, viterbi as viterbi_path, GridSpec};
use mmhp_core::diagnostics;
use mmhp_core::hierarchy::{self, WinLossMatrix};
use mmhp_core::inference::{run_mcmc, summarize, McmcConfig, ModelKind, PriorConfig};
use mmhp_core::rng::stream;
use mmhp_core::simulate::{simulate_mmhp, StopRule};
use mmhp_core::{ApproxLikelihood, EventSequence, LatentTrajectory, MmhpParams, State};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: mmhp_core::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Model parameters.
#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyParams {
    inner: MmhpParams,
}

#[pymethods]
impl PyParams {
    #[new]
    fn new(lambda0: f64, lambda1: f64, alpha: f64, beta: f64, delta0: f64, q0: f64, q1: f64) -> PyResult<Self> {
        MmhpParams::from_array([lambda0, lambda1, alpha, beta, delta0, q0, q1])
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Values in the order lambda0, lambda1, alpha, beta, delta0, q0, q1.
    fn values(&self) -> Vec<f64> {
        self.inner.to_array().to_vec()
    }

    #[getter]
    fn lambda0(&self) -> f64 {
        self.inner.lambda0()
    }

    #[getter]
    fn lambda1(&self) -> f64 {
        self.inner.lambda1()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn __repr__(&self) -> String {
        let [l0, l1, a, b, d, q0, q1] = self.inner.to_array();
        format!("Params(lambda0={l0}, lambda1={l1}, alpha={a}, beta={b}, delta0={d}, q0={q0}, q1={q1})")
    }
}

/// Sorted event times on `(0, horizon]`.
#[pyclass(name = "Events", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyEvents {
    inner: EventSequence,
}

#[pymethods]
impl PyEvents {
    /// The horizon defaults to the last event time.
    #[new]
    #[pyo3(signature = (times, horizon=None))]
    fn new(times: Vec<f64>, horizon: Option<f64>) -> PyResult<Self> {
        EventSequence::from_raw(times, horizon)
            .map(|(inner, _)| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Posterior draws with their summary.
#[pyclass(name = "Fit", frozen)]
pub struct PyFit {
    mean: Vec<f64>,
    rhat_max: f64,
    summary: String,
    chains: Vec<Vec<Vec<f64>>>,
}

#[pymethods]
impl PyFit {
    /// Posterior mean in parameter order.
    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.mean.clone()
    }

    #[getter]
    fn rhat_max(&self) -> f64 {
        self.rhat_max
    }

    /// Post-warmup draws, indexed `[chain][iteration][parameter]`.
    #[getter]
    fn draws(&self) -> Vec<Vec<Vec<f64>>> {
        self.chains.clone()
    }

    /// Summary (means, 95% shortest intervals, R-hat) as JSON.
    fn summary_json(&self) -> String {
        self.summary.clone()
    }
}

/// `(start, end, state)` rows of a latent path.
type Segments = Vec<(f64, f64, u8)>;

fn trajectory_rows(t: &LatentTrajectory) -> Segments {
    t.segments().into_iter().map(|(a, b, z)| (a, b, z.index() as u8)).collect()
}

/// Simulates events; returns the events and the latent path as
/// `(start, end, state)` segments. Give exactly one of `events` and `horizon`.
#[pyfunction]
#[pyo3(signature = (params, seed, events=None, horizon=None))]
fn simulate(
    params: &PyParams,
    seed: u64,
    events: Option<usize>,
    horizon: Option<f64>,
) -> PyResult<(PyEvents, Segments)> {
    let stop = match (events, horizon) {
        (Some(m), None) => StopRule::Count(m),
        (None, Some(t)) => StopRule::Horizon(t),
        _ => return Err(PyValueError::new_err("give exactly one of events and horizon")),
    };
    let sim = simulate_mmhp(&params.inner, stop, &mut stream(seed, 0)).map_err(to_py)?;
    Ok((PyEvents { inner: sim.events }, trajectory_rows(&sim.trajectory)))
}

/// Approximate marginal log-likelihood.
#[pyfunction]
#[pyo3(signature = (params, events, quadrature_nodes=16))]
fn loglik(params: &PyParams, events: &PyEvents, quadrature_nodes: usize) -> PyResult<f64> {
    let lik = ApproxLikelihood::with_nodes(quadrature_nodes).map_err(to_py)?;
    lik.forward_loglik(&params.inner, &events.inner).map_err(to_py)
}

/// Most likely states at `t_0 = 0` and at every event.
#[pyfunction]
fn viterbi(params: &PyParams, events: &PyEvents) -> PyResult<Vec<u8>> {
    let path = viterbi_path(&ApproxLikelihood::default(), &params.inner, &events.inner).map_err(to_py)?;
    Ok(path.states.iter().map(|z| z.index() as u8).collect())
}

/// Decoded trajectory on a grid: `(times, states)`.
#[pyfunction]
#[pyo3(signature = (params, events, points_per_interval=50))]
fn decode(params: &PyParams, events: &PyEvents, points_per_interval: usize) -> PyResult<(Vec<f64>, Vec<u8>)> {
    let d = decode_path(
        &ApproxLikelihood::default(),
        &params.inner,
        &events.inner,
        GridSpec::PerInterval(points_per_interval),
    )
    .map_err(to_py)?;
    Ok((d.times().to_vec(), d.states().iter().map(|z| z.index() as u8).collect()))
}

/// MCMC fit of the MMHP (or, with `mmpp=True`, the MMPP) under the
/// synthetic-data prior.
#[pyfunction]
#[pyo3(signature = (events, seed, chains=4, iters=1000, mmpp=false))]
fn fit(py: Python<'_>, events: &PyEvents, seed: u64, chains: usize, iters: usize, mmpp: bool) -> PyResult<PyFit> {
    let model = if mmpp { ModelKind::Mmpp } else { ModelKind::Mmhp };
    let prior = PriorConfig::synthetic().with_model(model);
    let cfg = McmcConfig {
        chains,
        iters,
        seed,
        ..Default::default()
    };
    let data = [events.inner.clone()];
    let (draws, summary) = py
        .detach(|| run_mcmc(&data, &prior, &cfg).and_then(|d| summarize(&d).map(|s| (d, s))))
        .map_err(to_py)?;
    Ok(PyFit {
        mean: draws.mean().to_vec(),
        rhat_max: summary.rhat_max,
        summary: serde_json::to_string(&summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?,
        chains: draws.chains.iter().map(|c| c.iter().map(|d| d.to_vec()).collect()).collect(),
    })
}

/// Compensators between events under a latent path given as
/// `(start, end, state)` segments, as returned by `simulate`.
#[pyfunction]
fn compensators(params: &PyParams, events: &PyEvents, segments: Segments) -> PyResult<Vec<f64>> {
    let points: Vec<(f64, State)> = segments
        .iter()
        .map(|&(a, _, z)| (a, State::from_index(z as usize)))
        .collect();
    let horizon = segments.last().map_or(events.inner.horizon(), |s| s.1);
    let traj = LatentTrajectory::from_breakpoints(&points, horizon).map_err(to_py)?;
    diagnostics::compensators(&params.inner, &events.inner, &traj).map_err(to_py)
}

/// KS test against Exp(1): `(D, p)`.
#[pyfunction]
fn ks_exp1(values: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = diagnostics::ks_exp1(&values).map_err(to_py)?;
    Ok((r.d, r.p_value))
}

fn matrix(rows: Vec<Vec<u64>>) -> PyResult<WinLossMatrix> {
    WinLossMatrix::from_rows(rows).map_err(to_py)
}

#[pyfunction]
fn directional_consistency(rows: Vec<Vec<u64>>) -> PyResult<f64> {
    hierarchy::directional_consistency(&matrix(rows)?).map_err(to_py)
}

#[pyfunction]
fn triangle_transitivity(rows: Vec<Vec<u64>>) -> PyResult<f64> {
    hierarchy::triangle_transitivity(&matrix(rows)?).map_err(to_py)
}

/// `ranking` lists row indices, most dominant first.
#[pyfunction]
fn ranking_inconsistency(rows: Vec<Vec<u64>>, ranking: Vec<usize>) -> PyResult<u64> {
    hierarchy::ranking_inconsistency(&matrix(rows)?, &ranking).map_err(to_py)
}

#[pymodule]
fn mmhp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyEvents>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(loglik, m)?)?;
    m.add_function(wrap_pyfunction!(viterbi, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(compensators, m)?)?;
    m.add_function(wrap_pyfunction!(ks_exp1, m)?)?;
    m.add_function(wrap_pyfunction!(directional_consistency, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_transitivity, m)?)?;
    m.add_function(wrap_pyfunction!(ranking_inconsistency, m)?)?;
    Ok(())
}
