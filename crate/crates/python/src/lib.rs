//! Python bindings. Matrices travel as nested lists of complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pev::doubleslit::{
    default_half_span, grid_scan, normalize_grid, pev_chain_demo, prob_pion, symmetric_axis,
    DoubleSlitConfig, DoubleSlitSpec,
};
use pev::evolution::{self, Channel, ChannelFamily};
use pev::hilbert::{self, DEFAULT_CLUSTER_TOL, DEFAULT_DIM_CAP};
use pev::timeops::temporal_uncertainty_sweep;
use pev::units::{Dimension, SECOND};
use pev::PevError;

fn err(e: PevError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Rows = Vec<Vec<Complex64>>;

fn rows_of(op: &hilbert::Operator) -> Rows {
    let n = op.dim();
    (0..n)
        .map(|i| (0..n).map(|j| op.get(i, j)).collect())
        .collect()
}

#[pyclass(name = "Operator", module = "pev", from_py_object)]
#[derive(Clone)]
struct PyOperator(hilbert::Operator);

#[pymethods]
impl PyOperator {
    #[new]
    fn new(rows: Rows) -> PyResult<Self> {
        hilbert::Operator::from_rows(&rows).map(Self).map_err(err)
    }

    #[staticmethod]
    fn identity(dim: usize) -> Self {
        Self(hilbert::Operator::identity(dim))
    }

    #[staticmethod]
    fn parse_text(text: &str) -> PyResult<Self> {
        hilbert::Operator::parse_text(text, DEFAULT_DIM_CAP)
            .map(Self)
            .map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rows(&self) -> Rows {
        rows_of(&self.0)
    }

    fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    fn hermiticity_residual(&self) -> f64 {
        self.0.hermiticity_residual()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.0.hermitian_eigenvalues()
    }

    fn __matmul__(&self, other: &PyOperator) -> PyResult<Self> {
        self.0.check_same_dim(&other.0).map_err(err)?;
        Ok(Self(&self.0 * &other.0))
    }

    fn __repr__(&self) -> String {
        format!("Operator(dim={})", self.0.dim())
    }
}

#[pyclass(name = "DensityOperator", module = "pev", from_py_object)]
#[derive(Clone)]
struct PyDensity(hilbert::DensityOperator);

#[pymethods]
impl PyDensity {
    #[new]
    fn new(rows: Rows) -> PyResult<Self> {
        let op = hilbert::Operator::from_rows(&rows).map_err(err)?;
        hilbert::DensityOperator::new(op).map(Self).map_err(err)
    }

    #[staticmethod]
    fn diagonal(probs: Vec<f64>) -> PyResult<Self> {
        hilbert::DensityOperator::diagonal(&probs)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rows(&self) -> Rows {
        rows_of(self.0.op())
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn entropy(&self) -> f64 {
        self.0.entropy()
    }

    fn expectation(&self, a: &PyOperator) -> PyResult<f64> {
        a.0.check_same_dim(self.0.op()).map_err(err)?;
        Ok(a.0.expectation(self.0.op()).re)
    }
}

#[pyclass(name = "ChannelFamily", module = "pev", from_py_object)]
#[derive(Clone)]
struct PyFamily(ChannelFamily);

#[pymethods]
impl PyFamily {
    /// Orthogonal resolution from projectors.
    #[staticmethod]
    fn projective(tau: i64, projectors: Vec<PyOperator>) -> PyResult<Self> {
        ChannelFamily::projective(tau, projectors.into_iter().map(|p| p.0).collect())
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn unitary(tau: i64, u: PyOperator) -> PyResult<Self> {
        ChannelFamily::unitary(tau, u.0).map(Self).map_err(err)
    }

    /// General family: one list of Kraus branches per channel.
    #[staticmethod]
    #[pyo3(signature = (tau, channels, probability_conserving = true))]
    fn kraus(
        tau: i64,
        channels: Vec<Vec<PyOperator>>,
        probability_conserving: bool,
    ) -> PyResult<Self> {
        let chans = channels
            .into_iter()
            .enumerate()
            .map(|(i, bs)| {
                Channel::new(
                    i as i64,
                    bs.into_iter()
                        .map(|b| evolution::Branch::Dense(b.0))
                        .collect(),
                )
            })
            .collect::<pev::Result<Vec<_>>>()
            .map_err(err)?;
        ChannelFamily::general(tau, chans, probability_conserving)
            .map(Self)
            .map_err(err)
    }

    /// Every family in a TOML family file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Vec<PyFamily>> {
        evolution::load_family_file(std::path::Path::new(path), DEFAULT_DIM_CAP)
            .map(|v| v.into_iter().map(Self).collect())
            .map_err(err)
    }

    /// Eigenprojector family of a hermitian generator.
    #[staticmethod]
    fn from_generator(w: &PyOperator) -> PyResult<Self> {
        pev::generators::channels_from_generator(&w.0, DEFAULT_CLUSTER_TOL)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn tau(&self) -> i64 {
        self.0.tau
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.as_str()
    }

    fn __len__(&self) -> usize {
        self.0.channels().len()
    }

    fn labels(&self) -> Vec<String> {
        self.0
            .channels()
            .iter()
            .map(|c| c.label.to_string())
            .collect()
    }

    /// Tr(E ρ E†) for every channel.
    fn probabilities(&self, rho: &PyDensity) -> PyResult<Vec<f64>> {
        self.0
            .channels()
            .iter()
            .map(|c| evolution::transition_prob(c, &rho.0))
            .collect::<pev::Result<_>>()
            .map_err(err)
    }

    /// Lüders update through channel `index`.
    fn update(&self, index: usize, rho: &PyDensity) -> PyResult<PyDensity> {
        let c = self
            .0
            .channels()
            .get(index)
            .ok_or_else(|| PyValueError::new_err("channel index out of range"))?;
        evolution::luders_update(c, &rho.0)
            .map(PyDensity)
            .map_err(err)
    }

    /// `{check name: (residual, tolerance, passed)}`.
    fn validate(&self) -> Vec<(String, f64, f64, bool)> {
        evolution::validate_family(&self.0)
            .checks
            .into_iter()
            .map(|c| (c.name, c.residual, c.tolerance, c.passed))
            .collect()
    }
}

fn unwrap_families(fams: Vec<PyFamily>) -> Vec<ChannelFamily> {
    fams.into_iter().map(|f| f.0).collect()
}

/// One sampled path as `(tau, label, pev, purity)` tuples plus the final state.
#[pyfunction]
fn sample_path(
    families: Vec<PyFamily>,
    rho0: &PyDensity,
    seed: u64,
) -> PyResult<(Vec<(i64, String, f64, f64)>, PyDensity)> {
    let rec = evolution::sample_path(&unwrap_families(families), &rho0.0, seed).map_err(err)?;
    let steps = rec
        .steps
        .iter()
        .map(|s| (s.tau, s.label.to_string(), s.pev, s.state.purity()))
        .collect();
    let last = rec.final_state().cloned().unwrap_or_else(|| rho0.0.clone());
    Ok((steps, PyDensity(last)))
}

/// Branch counts `[step][channel]` over `n_paths` paths.
#[pyfunction]
fn branch_counts(
    families: Vec<PyFamily>,
    rho0: &PyDensity,
    n_paths: usize,
    seed: u64,
) -> PyResult<Vec<Vec<u64>>> {
    evolution::branch_statistics(&unwrap_families(families), &rho0.0, n_paths, seed)
        .map(|s| s.counts)
        .map_err(err)
}

/// `(eigenvalues, projectors)` with clustered degenerate eigenvalues.
#[pyfunction]
#[pyo3(signature = (a, cluster_tol = DEFAULT_CLUSTER_TOL))]
fn spectral_decompose(a: &PyOperator, cluster_tol: f64) -> PyResult<(Vec<f64>, Vec<PyOperator>)> {
    let sd = hilbert::spectral_decompose(&a.0, cluster_tol).map_err(err)?;
    Ok((
        sd.eigenvalues,
        sd.projectors
            .iter()
            .map(|p| PyOperator(p.to_operator()))
            .collect(),
    ))
}

#[pyclass(name = "DoubleSlitConfig", module = "pev", from_py_object)]
#[derive(Clone)]
struct PyDoubleSlit(DoubleSlitConfig);

#[pymethods]
impl PyDoubleSlit {
    /// Pion defaults; `epsilon_t` is a unit-suffixed time such as `"1e-10 s"`.
    #[new]
    #[pyo3(signature = (epsilon_t = None))]
    fn new(epsilon_t: Option<String>) -> PyResult<Self> {
        let spec = DoubleSlitSpec {
            epsilon_t,
            ..Default::default()
        };
        DoubleSlitConfig::from_spec(&spec).map(Self).map_err(err)
    }

    /// Opening time in seconds.
    #[getter]
    fn epsilon_t_seconds(&self) -> f64 {
        self.0.epsilon_t / SECOND
    }

    #[getter]
    fn mean_energy_ev(&self) -> f64 {
        self.0.mean_energy()
    }

    fn prob(&self, k1: f64, k2: f64) -> f64 {
        prob_pion(&self.0, k1, k2)
    }

    /// Normalized grid `(k1, k2, values[i1][i2])`; the half-span defaults to
    /// the ε_T-scaled span (eV).
    #[pyo3(signature = (n, half_span = None, which = "pion", factor = "full"))]
    fn grid(
        &self,
        n: usize,
        half_span: Option<f64>,
        which: &str,
        factor: &str,
    ) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
        let half = half_span.unwrap_or_else(|| default_half_span(self.0.epsilon_t));
        let axis = symmetric_axis(n, half).map_err(err)?;
        let g = grid_scan(
            &self.0,
            &axis,
            &axis,
            which.parse().map_err(err)?,
            factor.parse().map_err(err)?,
        )
        .and_then(|g| normalize_grid(&g))
        .map_err(err)?;
        let rows = g.values.chunks(n).map(<[f64]>::to_vec).collect();
        Ok((g.k1, g.k2, rows))
    }

    /// Grid-scale three-step projection chain; returns whether every check
    /// passed and the pass probability.
    fn chain_demo(&self) -> PyResult<(bool, f64)> {
        let r = pev_chain_demo(&self.0).map_err(err)?;
        Ok((r.passed(), r.pass_probability))
    }
}

/// `(sigma_t, product, bound)` rows of a minimal temporal Gaussian sweep.
#[pyfunction]
fn uncertainty_sweep(n_t: usize, dt: f64, sigmas: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    temporal_uncertainty_sweep(n_t, dt, &sigmas)
        .map(|v| {
            v.into_iter()
                .map(|p| (p.sigma_t, p.report.product, p.report.bound))
                .collect()
        })
        .map_err(err)
}

/// Natural-unit value of a unit-suffixed quantity; `kind` is time, length or
/// energy.
#[pyfunction]
fn parse_quantity(text: &str, kind: &str) -> PyResult<f64> {
    let dim = match kind {
        "time" => Dimension::Time,
        "length" => Dimension::Length,
        "energy" => Dimension::Energy,
        _ => return Err(PyValueError::new_err(format!("unknown dimension '{kind}'"))),
    };
    pev::units::parse_quantity(text, dim).map_err(err)
}

#[pymodule]
#[pyo3(name = "pev")]
fn pev_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PyDoubleSlit>()?;
    m.add_function(wrap_pyfunction!(sample_path, m)?)?;
    m.add_function(wrap_pyfunction!(branch_counts, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(uncertainty_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(parse_quantity, m)?)?;
    m.add("ZERO_PROB_TOL", evolution::ZERO_PROB_TOL)?;
    Ok(())
}
