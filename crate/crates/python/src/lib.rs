//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers; reports come back as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wclt::evolution::{evolve, limit_state, EvolveOptions, DEFAULT_T_MAX};
use wclt::model::ModelSpec;
use wclt::models::{AkvModel, AkvParams, AkvRates, ChannelGammas, KvModel, KvParams};
use wclt::stationary::{
    annihilator_membership, detailed_balance_classify, interaction_free_subspace, is_subharmonic, stationary_kernel,
    WdRoute,
};
use wclt::verify::{verify_akv, verify_kv};
use wclt::{bohr_frequencies, CMatrix, DensityMatrix, HermitianOperator, WcltGenerator};

type Rows = Vec<Vec<Complex64>>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a square matrix"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &CMatrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn to_state(rows: &Rows) -> PyResult<DensityMatrix> {
    DensityMatrix::new(to_matrix(rows)?).map_err(err)
}

fn to_hermitian(rows: &Rows) -> PyResult<HermitianOperator> {
    HermitianOperator::new(to_matrix(rows)?).map_err(err)
}

/// Serializable report to a Python dict via the stdlib json module.
fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_route(route: &str) -> PyResult<WdRoute> {
    match route {
        "kernel_pairs" => Ok(WdRoute::KernelPairs),
        "quadratic" => Ok(WdRoute::Quadratic),
        _ => Err(PyValueError::new_err(format!("unknown route `{route}`"))),
    }
}

/// A WCLT generator built from a JSON model specification.
#[pyclass(name = "Generator", module = "wclt_py", frozen)]
struct PyGenerator {
    inner: WcltGenerator,
}

#[pymethods]
impl PyGenerator {
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        let inner = ModelSpec::from_json(spec).and_then(|s| s.build()).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        ModelSpec::from_generator(&self.inner).to_json().map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Positive Bohr frequencies in increasing order.
    fn frequencies(&self) -> Vec<f64> {
        let sd = self.inner.spectral();
        bohr_frequencies(sd, sd.cluster_tol()).iter().map(|f| f.omega).collect()
    }

    fn kraus(&self, omega: f64) -> PyResult<Rows> {
        let ch = self
            .inner
            .channel(omega)
            .ok_or_else(|| PyValueError::new_err(format!("{omega} is not a Bohr frequency")))?;
        Ok(to_rows(ch.kraus()))
    }

    /// `L_*(ρ)`
    fn apply(&self, rho: Rows) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.apply_predual(&to_matrix(&rho)?).map_err(err)?))
    }

    /// `L(x)`
    fn apply_adjoint(&self, x: Rows) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.apply_adjoint(&to_matrix(&x)?).map_err(err)?))
    }

    /// Column-stacked `d² × d²` matrix of `L_*`.
    fn superoperator(&self) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.superoperator_matrix().map_err(err)?))
    }

    /// Projector onto the interaction-free subspace.
    #[pyo3(signature = (route = "kernel_pairs"))]
    fn wd_projector(&self, route: &str) -> PyResult<Rows> {
        let s = interaction_free_subspace(&self.inner, parse_route(route)?).map_err(err)?;
        Ok(to_rows(s.projector().matrix()))
    }

    /// Kernel dimension, kernel basis and the limit of `I/d`.
    fn stationary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let st = stationary_kernel(&self.inner).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("kernel_dim", st.dim())?;
        d.set_item("kernel", st.operators().iter().map(to_rows).collect::<Vec<_>>())?;
        d.set_item("canonical", to_rows(st.canonical.matrix()))?;
        d.set_item("kernel_residual", st.kernel_residual)?;
        Ok(d)
    }

    /// Long-time limit of `ρ0` (defaults to `I/d`).
    #[pyo3(signature = (rho0 = None, residual_tol = 1e-12, t_max = DEFAULT_T_MAX))]
    fn limit(&self, rho0: Option<Rows>, residual_tol: f64, t_max: f64) -> PyResult<Rows> {
        let rho = match rho0 {
            Some(r) => to_state(&r)?,
            None => DensityMatrix::maximally_mixed(self.inner.dim()),
        };
        let rep = limit_state(&self.inner, &rho, residual_tol, t_max).map_err(err)?;
        if !rep.converged {
            return Err(PyValueError::new_err(format!("no convergence by t = {t_max}")));
        }
        Ok(to_rows(rep.state.matrix()))
    }

    /// Integrates the master equation; returns times, expectation values and final state.
    #[pyo3(signature = (rho0, t, samples = 100, observables = None, tol = 1e-11))]
    fn evolve<'py>(
        &self,
        py: Python<'py>,
        rho0: Rows,
        t: f64,
        samples: usize,
        observables: Option<Vec<(String, Rows)>>,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let rho = to_state(&rho0)?;
        let obs = observables
            .unwrap_or_default()
            .iter()
            .map(|(n, x)| Ok((n.clone(), to_hermitian(x)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let samples = samples.max(1);
        let times = (1..=samples).map(|k| t * k as f64 / samples as f64).collect();
        let opts = EvolveOptions::adaptive(tol).with_samples(times).keep_states(true);
        let traj = evolve(&self.inner, &rho, t, &opts, &obs).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("times", &traj.times)?;
        let values = PyDict::new(py);
        for (name, v) in &traj.observables {
            values.set_item(name, v)?;
        }
        d.set_item("observables", values)?;
        d.set_item("final", traj.final_state().map(|s| to_rows(s.matrix())))?;
        Ok(d)
    }

    /// Annihilator membership and detailed-balance classification of `ρ`.
    #[pyo3(signature = (rho, tol = 1e-9))]
    fn classify<'py>(&self, py: Python<'py>, rho: Rows, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let rho = to_state(&rho)?;
        let d = PyDict::new(py);
        d.set_item("annihilator", to_py(py, &annihilator_membership(&self.inner, &rho, tol).map_err(err)?)?)?;
        d.set_item("balance", to_py(py, &detailed_balance_classify(&self.inner, &rho, tol).map_err(err)?)?)?;
        Ok(d)
    }

    #[pyo3(signature = (projector, times, tol = 1e-8))]
    fn subharmonic<'py>(&self, py: Python<'py>, projector: Rows, times: Vec<f64>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let p = to_hermitian(&projector)?;
        to_py(py, &is_subharmonic(&self.inner, &p, &times, tol).map_err(err)?)
    }
}

/// The modified AKV transport model.
#[pyclass(name = "AkvModel", module = "wclt_py", frozen)]
struct PyAkvModel {
    inner: AkvModel,
}

#[pymethods]
impl PyAkvModel {
    /// `gammas` is twelve values: `Γ_Re,−, Γ_Re,+, Γ_Im,−, Γ_Im,+` for each channel.
    #[new]
    #[pyo3(signature = (n, m, eps = (7.0, 3.0, 1.0), gammas = None))]
    fn new(n: usize, m: usize, eps: (f64, f64, f64), gammas: Option<Vec<f64>>) -> PyResult<Self> {
        let rates = match gammas {
            None => AkvRates::default(),
            Some(g) if g.len() == 12 => {
                let ch = |i: usize| ChannelGammas::new(g[4 * i], g[4 * i + 1], g[4 * i + 2], g[4 * i + 3]);
                AkvRates {
                    omega1: ch(0),
                    omega2: ch(1),
                    omega3: ch(2),
                }
            }
            Some(g) => return Err(PyValueError::new_err(format!("gammas takes twelve values, got {}", g.len()))),
        };
        let params = AkvParams {
            eps: [eps.0, eps.1, eps.2],
            rates,
            ..AkvParams::new(n, m)
        };
        Ok(Self {
            inner: AkvModel::build(params).map_err(err)?,
        })
    }

    fn generator(&self) -> PyGenerator {
        PyGenerator {
            inner: self.inner.generator().clone(),
        }
    }

    /// Block projector `P_k`, `k ∈ 0..4`.
    fn p(&self, k: usize) -> PyResult<Rows> {
        if k > 3 {
            return Err(PyValueError::new_err("k must be 0, 1, 2 or 3"));
        }
        Ok(to_rows(self.inner.p(k).matrix()))
    }

    fn q(&self) -> Rows {
        to_rows(self.inner.q().matrix())
    }

    fn p_wd(&self) -> Rows {
        to_rows(self.inner.p_wd().matrix())
    }

    /// `P0 + P_W_D`: every pure state here is invariant.
    fn p_dark(&self) -> Rows {
        to_rows(self.inner.p_dark().matrix())
    }

    /// Long-time weights on `q` and `ZqZ*`.
    fn block_weights(&self) -> (f64, f64) {
        self.inner.block_weights()
    }

    fn energy_gain(&self) -> f64 {
        self.inner.energy_gain()
    }

    /// Runs every check; returns the report as a dict.
    #[pyo3(signature = (seed = 0))]
    fn verify<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &verify_akv(self.inner.params(), seed).map_err(err)?)
    }
}

/// The KV photosynthesis model.
#[pyclass(name = "KvModel", module = "wclt_py", frozen)]
struct PyKvModel {
    inner: KvModel,
}

#[pymethods]
impl PyKvModel {
    #[new]
    #[pyo3(signature = (n = 5, eps1 = 1.0, eps2 = 2.5, theta = 0.7))]
    fn new(n: usize, eps1: f64, eps2: f64, theta: f64) -> PyResult<Self> {
        let params = KvParams {
            n,
            eps1,
            eps2,
            theta,
            ..KvParams::default()
        };
        Ok(Self {
            inner: KvModel::build(params).map_err(err)?,
        })
    }

    fn generator(&self) -> PyGenerator {
        PyGenerator {
            inner: self.inner.generator().clone(),
        }
    }

    fn wd_projector(&self) -> PyResult<Rows> {
        Ok(to_rows(self.inner.wd_closed_form().map_err(err)?.projector().matrix()))
    }

    #[pyo3(signature = (seed = 0))]
    fn verify<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &verify_kv(self.inner.params(), seed).map_err(err)?)
    }
}

#[pymodule]
fn wclt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyAkvModel>()?;
    m.add_class::<PyKvModel>()?;
    Ok(())
}
