//! Python bindings. Arrays cross the boundary as plain lists of floats or
//! complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use deltascat_core as core;
use core::dynamics::{double_well_demo, evolve_linear, BoxOptions, InitialRecipe, NlsConfig, NlsSign};
use core::potential::weighted_l1_norm;
use core::scattering::{bound_states, double_delta_closed_form, scattering_coeffs, single_delta_closed_form, transfer_matrix_at};
use core::spectral::{decompose, pc_project, SpectralDecomposition};
use core::wave_operators::{apply_wplus, apply_wplus_star, identity_residuals};
use core::{GridFunction, KQuadrature, PotentialSpec, UniformGrid};

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::InvalidArgument(_)
        | core::Error::Config(_)
        | core::Error::Validation(_)
        | core::Error::ZeroWavenumber
        | core::Error::Resonant(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A potential `sum_j c_j delta(x - y_j) + V_reg(x)`.
#[pyclass(name = "Potential", module = "deltascat", frozen)]
struct PyPotential {
    spec: PotentialSpec,
}

#[pymethods]
impl PyPotential {
    /// Pure delta potential from `(c, y)` pairs.
    #[new]
    #[pyo3(signature = (deltas = Vec::new()))]
    fn new(deltas: Vec<(f64, f64)>) -> PyResult<Self> {
        let spec = PotentialSpec::from_deltas(&deltas);
        core::potential::validate(&spec).map_err(err)?;
        Ok(Self { spec })
    }

    /// Parses the TOML config format used by the command line tool.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { spec: core::io::parse_potential(text).map_err(err)? })
    }

    #[getter]
    fn deltas(&self) -> Vec<(f64, f64)> {
        self.spec.deltas.iter().map(|d| (d.c, d.y)).collect()
    }

    fn is_pure_delta(&self) -> bool {
        self.spec.is_pure_delta()
    }

    fn support_radius(&self) -> f64 {
        self.spec.support_radius()
    }

    #[pyo3(signature = (gamma = 1.6))]
    fn weighted_l1_norm(&self, gamma: f64) -> PyResult<f64> {
        weighted_l1_norm(&self.spec, gamma).map_err(err)
    }

    /// `[(kappa, energy), ...]` with energy `-kappa^2`.
    fn bound_states(&self) -> PyResult<Vec<(f64, f64)>> {
        Ok(bound_states(&self.spec).map_err(err)?.iter().map(|b| (b.kappa, b.energy)).collect())
    }

    /// Amplitude transfer matrix at complex `k` (pure delta potentials).
    fn transfer_matrix(&self, k: Complex64) -> PyResult<[[Complex64; 2]; 2]> {
        transfer_matrix_at(&self.spec, k).map_err(err)
    }

    /// Dict with keys `k`, `t`, `r1`, `r2`, `kappas`.
    fn scattering<'py>(&self, py: Python<'py>, k: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let s = scattering_coeffs(&self.spec, &k).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("k", s.k)?;
        d.set_item("t", s.t)?;
        d.set_item("r1", s.r1)?;
        d.set_item("r2", s.r2)?;
        d.set_item("kappas", s.bound_state_kappas)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Potential(deltas={:?}, regular={:?})", self.deltas(), self.spec.regular.kind)
    }
}

/// `(T, R)` of `V = 2q delta(x)`.
#[pyfunction]
fn single_delta(q: f64, k: f64) -> PyResult<(Complex64, Complex64)> {
    single_delta_closed_form(q, k).map_err(err)
}

/// `(T, R)` of the symmetric double delta with strength `q` at `+-l`.
#[pyfunction]
fn double_delta(q: f64, l: f64, k: f64) -> PyResult<(Complex64, Complex64)> {
    double_delta_closed_form(q, l, k).map_err(err)
}

/// Distorted Fourier tables on `[-x_max, x_max]`.
#[pyclass(name = "Spectral", module = "deltascat", frozen)]
struct PySpectral {
    decomp: SpectralDecomposition,
}

impl PySpectral {
    fn grid_fn(&self, values: Vec<Complex64>) -> PyResult<GridFunction> {
        let g = self.decomp.table.x_grid;
        if values.len() != g.len {
            return Err(PyValueError::new_err(format!("expected {} samples, got {}", g.len, values.len())));
        }
        Ok(GridFunction::new(g, values))
    }
}

#[pymethods]
impl PySpectral {
    #[new]
    #[pyo3(signature = (potential, x_max = 16.0, dx = 1.0 / 32.0, k_max = 8.0, dk = 0.25, order = 16))]
    fn new(py: Python<'_>, potential: &PyPotential, x_max: f64, dx: f64, k_max: f64, dk: f64, order: usize) -> PyResult<Self> {
        let spec = potential.spec.clone();
        let decomp = py
            .detach(|| -> core::Result<_> {
                let g = UniformGrid::symmetric(x_max, dx)?;
                decompose(&spec, &KQuadrature::gauss_panels(k_max, dk, order), &g)
            })
            .map_err(err)?;
        Ok(Self { decomp })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.decomp.table.x_grid.points()
    }

    #[getter]
    fn kappas(&self) -> Vec<f64> {
        self.decomp.bound.iter().map(|b| b.kappa).collect()
    }

    fn wplus(&self, f: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(apply_wplus(&self.decomp, &self.grid_fn(f)?).map_err(err)?.values)
    }

    fn wplus_star(&self, f: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(apply_wplus_star(&self.decomp, &self.grid_fn(f)?).map_err(err)?.values)
    }

    /// Projection onto the continuous spectral subspace.
    fn project(&self, f: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(pc_project(&self.decomp, &self.grid_fn(f)?).map_err(err)?.value.values)
    }

    /// `e^{-itH} P_c f`, or `e^{-itH} f` with `with_bound`.
    #[pyo3(signature = (f, t, with_bound = false))]
    fn evolve(&self, f: Vec<Complex64>, t: f64, with_bound: bool) -> PyResult<Vec<Complex64>> {
        Ok(evolve_linear(&self.decomp, &self.grid_fn(f)?, t, with_bound).map_err(err)?.values)
    }

    /// `(||W*W f - f||, ||WW* f - P_c f||)` relative to `||f||`.
    fn identity_residuals(&self, f: Vec<Complex64>) -> PyResult<(f64, f64)> {
        identity_residuals(&self.decomp, &self.grid_fn(f)?).map_err(err)
    }
}

/// NLS double well `-q [delta(x-l) + delta(x+l)]` from the bound pair.
#[pyfunction]
#[pyo3(signature = (q, l, g, dt, t_final, sigma = 1.0, focusing = false))]
fn double_well<'py>(
    py: Python<'py>,
    q: f64,
    l: f64,
    g: f64,
    dt: f64,
    t_final: f64,
    sigma: f64,
    focusing: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let sign = if focusing { NlsSign::Focusing } else { NlsSign::Defocusing };
    let cfg = NlsConfig { sigma, sign, g, dt, t_final, record_every: usize::MAX };
    let r = py
        .detach(|| double_well_demo(q, l, &cfg, InitialRecipe::BoundPair, &BoxOptions::default()))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("beat_period", r.beat_period)?;
    d.set_item("measured_period", r.measured_period)?;
    d.set_item("times", r.trace.times)?;
    d.set_item("mass", r.trace.mass)?;
    d.set_item("left_mass", r.trace.left_mass)?;
    Ok(d)
}

/// Runs one acceptance criterion (1-11) and returns `(passed, summary line)`.
#[pyfunction]
fn run_criterion(py: Python<'_>, id: u8) -> PyResult<(bool, String)> {
    if !(1..=11).contains(&id) {
        return Err(PyValueError::new_err(format!("no criterion {id}")));
    }
    let r = py.detach(|| core::verify::Suite::new(Default::default()).run(id, None));
    Ok((r.passed, r.line()))
}

#[pymodule]
#[pyo3(name = "deltascat")]
fn deltascat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotential>()?;
    m.add_class::<PySpectral>()?;
    m.add_function(wrap_pyfunction!(single_delta, m)?)?;
    m.add_function(wrap_pyfunction!(double_delta, m)?)?;
    m.add_function(wrap_pyfunction!(double_well, m)?)?;
    m.add_function(wrap_pyfunction!(run_criterion, m)?)?;
    Ok(())
}
