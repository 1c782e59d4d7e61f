//! Python bindings. Structured results come back as plain dicts and lists.

use num_complex::Complex64;
use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use donorgraph_core::budget::{
    loss_success as core_loss_success, monte_carlo_mode_loss, timing_fidelity_budget, BudgetOptions, CavityParams,
    LossCounting, OperationTable,
};
use donorgraph_core::fusion::{self, BellConvention, TargetKind};
use donorgraph_core::graph::{self, GraphSpec};
use donorgraph_core::protocol::{self, ExecuteOptions, ExecutionTrace, ProtocolError};
use donorgraph_core::spin::{
    enumerate_transitions, spectrum as core_spectrum, Device, DoubleSpinParams, SpectatorConvention, SpinParams,
    TransitionKind,
};
use donorgraph_core::statevec::{Register, Role};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn protocol_err(e: ProtocolError) -> PyErr {
    if e.is_cap() {
        PyMemoryError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

/// Weighted graph over `Z_d`.
#[pyclass(name = "Graph", module = "donorgraph", from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: GraphSpec,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (n, d, edges = vec![]))]
    fn new(n: usize, d: u32, edges: Vec<(usize, usize, u32)>) -> PyResult<Self> {
        Ok(Self { inner: GraphSpec::from_edges(n, d, &edges).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d, weight = 1))]
    fn linear(n: usize, d: u32, weight: u32) -> PyResult<Self> {
        Ok(Self { inner: graph::make_linear(n, d, weight).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d, weight = 1))]
    fn ring(n: usize, d: u32, weight: u32) -> PyResult<Self> {
        Ok(Self { inner: graph::make_ring(n, d, weight).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (rows, cols, d, weight = 1))]
    fn ladder(rows: usize, cols: usize, d: u32, weight: u32) -> PyResult<Self> {
        Ok(Self { inner: graph::make_ladder(rows, cols, d, weight).map_err(value_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> u32 {
        self.inner.d()
    }

    fn edges(&self) -> Vec<(usize, usize, u32)> {
        self.inner.edges()
    }

    /// Graph-state amplitudes, first vertex most significant.
    fn state(&self) -> PyResult<Vec<Complex64>> {
        let r = graph::build_graph_state(&self.inner).map_err(value_err)?;
        Ok(r.amplitudes().to_vec())
    }

    /// Stabilizer check of an amplitude vector against this graph.
    fn verify(&self, py: Python<'_>, amplitudes: Vec<Complex64>) -> PyResult<Py<PyAny>> {
        let n = self.inner.n();
        let d = self.inner.d() as usize;
        let r = Register::from_amplitudes(&vec![d; n], &vec![Role::Qudit; n], amplitudes).map_err(value_err)?;
        to_py(py, &graph::stabilizer_verify(&r, &self.inner).map_err(value_err)?)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, d={}, edges={:?})", self.inner.n(), self.inner.d(), self.inner.edges())
    }
}

/// Emission program for one or two donors.
#[pyclass(name = "Program", module = "donorgraph", from_py_object)]
#[derive(Clone)]
struct PyProgram {
    inner: protocol::Program,
}

#[pymethods]
impl PyProgram {
    #[staticmethod]
    fn single_photon(d: usize) -> PyResult<Self> {
        Ok(Self { inner: protocol::compile_single_photon(d).map_err(protocol_err)? })
    }

    #[staticmethod]
    fn linear(d: usize, n: usize) -> PyResult<Self> {
        Ok(Self { inner: protocol::compile_linear(d, n).map_err(protocol_err)? })
    }

    #[staticmethod]
    fn six_ring(d: usize) -> PyResult<Self> {
        Ok(Self { inner: protocol::compile_six_ring(d).map_err(protocol_err)? })
    }

    #[staticmethod]
    fn ladder(d: usize) -> PyResult<Self> {
        Ok(Self { inner: protocol::compile_ladder(d).map_err(protocol_err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner: protocol::Program = serde_json::from_str(s).map_err(value_err)?;
        inner.validate().map_err(protocol_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.header.d
    }

    #[getter]
    fn photons(&self) -> usize {
        self.inner.header.photons
    }

    fn count(&self, tag: &str) -> usize {
        self.inner.count(tag)
    }

    fn __len__(&self) -> usize {
        self.inner.instructions.len()
    }

    /// Runs the program, enumerating every readout outcome or sampling one.
    #[pyo3(signature = (enumerate = true, seed = 7))]
    fn execute(&self, py: Python<'_>, enumerate: bool, seed: u64) -> PyResult<PyTrace> {
        let opts = if enumerate { ExecuteOptions::enumerate() } else { ExecuteOptions::sample(seed) };
        let p = self.inner.clone();
        let inner = py.detach(move || protocol::execute_with(&p, opts)).map_err(protocol_err)?;
        Ok(PyTrace { inner })
    }

    /// Timing and fidelity budget against a bundled table.
    #[pyo3(signature = (table = "table1", hahn_echo = false))]
    fn budget(&self, py: Python<'_>, table: &str, hahn_echo: bool) -> PyResult<Py<PyAny>> {
        let t = bundled_table(table)?;
        let o = BudgetOptions { hahn_echo, ..BudgetOptions::default() };
        to_py(py, &timing_fidelity_budget(&self.inner, &t, &o).map_err(value_err)?)
    }

    fn __repr__(&self) -> String {
        format!("Program(d={}, photons={}, instructions={})", self.inner.header.d, self.inner.header.photons, self.inner.instructions.len())
    }
}

#[pyclass(name = "Trace", module = "donorgraph")]
struct PyTrace {
    inner: ExecutionTrace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn checksums(&self) -> Vec<String> {
        self.inner.checksums.clone()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.branches.iter().map(|b| b.probability).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.branches.len()
    }

    /// Photonic amplitudes of branch `i` after the donors are read out.
    fn photonic_state(&self, i: usize) -> PyResult<Vec<Complex64>> {
        let b = self.inner.branches.get(i).ok_or_else(|| value_err(format!("no branch {i}")))?;
        let r = b.photonic_state(self.inner.program.header.emitters).map_err(protocol_err)?;
        Ok(r.amplitudes().to_vec())
    }

    fn verify(&self, py: Python<'_>, target: &PyGraph) -> PyResult<Py<PyAny>> {
        let rep = protocol::verify_against_target(&self.inner, &target.inner).map_err(protocol_err)?;
        to_py(py, &rep)
    }

    /// W-state check of every branch of a single-photon run.
    fn w_check(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let emitters = self.inner.program.header.emitters;
        let mut out = Vec::new();
        for b in &self.inner.branches {
            let r = b.photonic_state(emitters).map_err(protocol_err)?;
            let w = protocol::w_state_check(&r).map_err(protocol_err)?;
            out.push(serde_json::json!({"z_power": w.z_power, "fidelity": w.fidelity, "pass": w.pass}));
        }
        to_py(py, &out)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.dump()).map_err(value_err)
    }
}

fn bundled_table(name: &str) -> PyResult<OperationTable> {
    match name {
        "table1" | "single-donor" => Ok(OperationTable::single_donor()),
        "table3" | "coupled-donors" => Ok(OperationTable::coupled_donors()),
        json => OperationTable::from_json(json).map_err(value_err),
    }
}

fn device(name: &str) -> PyResult<Device> {
    match name {
        "single" => Ok(Device::Single(SpinParams::default())),
        "double" => Ok(Device::Double(DoubleSpinParams::default())),
        other => Err(value_err(format!("unknown device {other:?}"))),
    }
}

fn convention(name: &str) -> PyResult<SpectatorConvention> {
    match name {
        "unrestricted" => Ok(SpectatorConvention::Unrestricted),
        "weak-fixed" => Ok(SpectatorConvention::weak_fixed()),
        "strong-fixed" => Ok(SpectatorConvention::strong_fixed()),
        other => Err(value_err(format!("unknown spectator convention {other:?}"))),
    }
}

/// Eigenvalues in MHz at default parameters.
#[pyfunction]
#[pyo3(signature = (device_name = "single"))]
fn spectrum(device_name: &str) -> PyResult<Vec<f64>> {
    let h = device(device_name)?.hamiltonian().map_err(value_err)?;
    Ok(core_spectrum(&h).map_err(value_err)?.eigenvalues)
}

/// Allowed transitions as dicts with `from`, `to` and `frequency_mhz`.
#[pyfunction]
#[pyo3(signature = (device_name = "single", kind = "esr", spectator = "unrestricted"))]
fn transitions(py: Python<'_>, device_name: &str, kind: &str, spectator: &str) -> PyResult<Py<PyAny>> {
    let h = device(device_name)?.hamiltonian().map_err(value_err)?;
    let s = core_spectrum(&h).map_err(value_err)?;
    let kind: TransitionKind = kind.parse().map_err(value_err)?;
    let list = enumerate_transitions(&s, kind, convention(spectator)?).map_err(value_err)?;
    let rows: Vec<_> = list
        .entries
        .iter()
        .map(|t| serde_json::json!({"from": t.from.to_string(), "to": t.to.to_string(), "frequency_mhz": t.frequency_mhz}))
        .collect();
    to_py(py, &rows)
}

#[pyfunction]
fn success_probability(d: usize) -> PyResult<f64> {
    fusion::success_probability(d).map_err(value_err)
}

/// Fuses the ends of an `n`-chain and checks the result against the `(n−2)`-ring.
#[pyfunction]
#[pyo3(signature = (d, chain_n = 8))]
fn fuse_chain_into_ring(py: Python<'_>, d: u32, chain_n: usize) -> PyResult<Py<PyAny>> {
    if chain_n < 4 {
        return Err(value_err(format!("chain of {chain_n} has no ring to close")));
    }
    let out = py
        .detach(move || -> Result<_, String> {
            let chain = graph::make_linear(chain_n, d, 1).map_err(|e| e.to_string())?;
            let ring = graph::make_ring(chain_n - 2, d, 1).map_err(|e| e.to_string())?;
            let r = graph::build_graph_state(&chain).map_err(|e| e.to_string())?;
            fusion::fuse_chain_ends(&r, &chain, 0, chain_n - 1, &ring, BellConvention::DEFAULT).map_err(|e| e.to_string())
        })
        .map_err(PyValueError::new_err)?;
    to_py(py, &out)
}

#[pyfunction]
#[pyo3(signature = (d, target = "ring6"))]
fn compare_schemes(py: Python<'_>, d: usize, target: &str) -> PyResult<Py<PyAny>> {
    let kind = match target {
        "ring6" => TargetKind::Ring6,
        "ladder" => TargetKind::Ladder,
        other => return Err(value_err(format!("unknown target {other:?}"))),
    };
    let g = kind.graph(u32::try_from(d).map_err(value_err)?).map_err(value_err)?;
    let c = fusion::compare_schemes(d, &g, &OperationTable::single_donor(), &OperationTable::coupled_donors())
        .map_err(value_err)?;
    to_py(py, &c)
}

/// Cavity loss and extraction success.
#[pyfunction]
#[pyo3(signature = (q_i = 1e6, q_c = 1e4, g_s_mhz = 3.0, omega_c_ghz = 28.41))]
fn loss_success(py: Python<'_>, q_i: f64, q_c: f64, g_s_mhz: f64, omega_c_ghz: f64) -> PyResult<Py<PyAny>> {
    let r = core_loss_success(&CavityParams { omega_c_ghz, g_s_mhz, q_i, q_c }).map_err(value_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (photons, p_loss, trials = 100_000, seed = 7, modes_per_photon = 1, per_mode = false))]
fn monte_carlo_loss(
    py: Python<'_>,
    photons: usize,
    p_loss: f64,
    trials: u64,
    seed: u64,
    modes_per_photon: usize,
    per_mode: bool,
) -> PyResult<Py<PyAny>> {
    let counting = if per_mode { LossCounting::PerMode } else { LossCounting::PerPhoton };
    let s = py
        .detach(move || monte_carlo_mode_loss(photons, modes_per_photon, p_loss, counting, trials, seed))
        .map_err(value_err)?;
    to_py(py, &s)
}

#[pymodule]
fn donorgraph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(transitions, m)?)?;
    m.add_function(wrap_pyfunction!(success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_chain_into_ring, m)?)?;
    m.add_function(wrap_pyfunction!(compare_schemes, m)?)?;
    m.add_function(wrap_pyfunction!(loss_success, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_loss, m)?)?;
    Ok(())
}
