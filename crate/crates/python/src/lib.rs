//! Python bindings: scenarios, the moment engine and the statistics helpers.

use eosq as core;
use core::config::THZ;
use core::{Dipoles, Error, Linewidths, SuperopIndex, ValidityWarning};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Validation(_) | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn superop(s: &str) -> PyResult<SuperopIndex> {
    match s {
        "+" => Ok(SuperopIndex::Plus),
        "-" => Ok(SuperopIndex::Minus),
        _ => Err(PyValueError::new_err(format!("superoperator index must be '+' or '-', got '{s}'"))),
    }
}

/// A resolved scenario configuration.
#[pyclass(module = "eosq", frozen)]
struct Scenario {
    cfg: core::ScenarioConfig,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self { cfg: core::load_preset(name).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { cfg: core::load_config(&path).map_err(to_py)? })
    }

    /// Parses TOML text; `env` holds (variable, value) override pairs.
    #[staticmethod]
    #[pyo3(signature = (text, env = Vec::new()))]
    fn parse(text: &str, env: Vec<(String, String)>) -> PyResult<Self> {
        Ok(Self { cfg: core::parse_config(text, env).map_err(to_py)? })
    }

    #[staticmethod]
    fn presets() -> Vec<&'static str> {
        core::preset_names()
    }

    #[getter]
    fn name(&self) -> String {
        self.cfg.name.clone()
    }

    fn hash(&self) -> String {
        self.cfg.hash()
    }

    fn to_toml(&self) -> String {
        self.cfg.to_toml()
    }

    fn thetas(&self) -> Vec<f64> {
        self.cfg.thetas()
    }

    fn engine(&self) -> PyResult<MomentEngine> {
        Ok(MomentEngine { inner: self.cfg.engine().map_err(to_py)? })
    }

    /// Runs one command and returns {"columns", "rows", "meta", "csv"}.
    fn run<'py>(&self, py: Python<'py>, command: &str) -> PyResult<Bound<'py, PyDict>> {
        let cmd: core::Command = command.parse().map_err(to_py)?;
        let table = core::run(cmd, &self.cfg).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("columns", table.columns.clone())?;
        out.set_item("rows", table.rows.clone())?;
        let meta = PyDict::new(py);
        for (k, v) in &table.meta {
            meta.set_item(k, v)?;
        }
        out.set_item("meta", meta)?;
        out.set_item("csv", table.render(&self.cfg))?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?})", self.cfg.name)
    }
}

fn breakdown_dict<'py>(py: Python<'py>, b: &core::MomentBreakdown) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("theta", b.theta)?;
    d.set_item("gamma_i", b.gamma_i)?;
    d.set_item("gamma_ii", b.gamma_ii)?;
    d.set_item("gamma_iii", b.gamma_iii)?;
    d.set_item("gamma_iii_macroscopic", b.gamma_iii_macroscopic)?;
    d.set_item("gamma_iii_microscopic", b.gamma_iii_microscopic)?;
    d.set_item("gamma_total", b.gamma_total)?;
    d.set_item("shot_noise", b.shot_noise)?;
    d.set_item("ratio_ii", b.ratio_ii())?;
    Ok(d)
}

#[pyclass(module = "eosq", frozen)]
struct MomentEngine {
    inner: core::MomentEngine,
}

#[pymethods]
impl MomentEngine {
    #[getter]
    fn photon_number(&self) -> f64 {
        self.inner.photon_number()
    }

    #[getter]
    fn prefactor(&self) -> f64 {
        self.inner.prefactor()
    }

    fn breakdown<'py>(&self, py: Python<'py>, theta: f64) -> PyResult<Bound<'py, PyDict>> {
        let b = self.inner.breakdown(theta).map_err(to_py)?;
        breakdown_dict(py, &b)
    }

    fn sweep<'py>(&self, py: Python<'py>, thetas: Vec<f64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let rows = py.detach(|| self.inner.sweep(&thetas)).map_err(to_py)?;
        rows.iter().map(|b| breakdown_dict(py, b)).collect()
    }

    /// (Γ_I, Γ) at θ = π/2 with the band cut at `omega_tilde` (rad/s).
    fn spectral_cut(&self, omega_tilde: f64) -> PyResult<(f64, f64)> {
        let p = self.inner.spectral_cut(omega_tilde).map_err(to_py)?;
        Ok((p.gamma_classical, p.gamma_full))
    }

    /// (φ, r_full, r_classical, r_shot) per θ, mirrored to φ + π.
    fn contour(&self, thetas: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let pts = core::variance_contour(&self.inner, &thetas).map_err(to_py)?;
        Ok(pts
            .iter()
            .map(|p| (p.phi, p.radius_full, p.radius_classical, p.radius_shot))
            .collect())
    }

    fn e_norm(&self) -> f64 {
        core::e_norm(&self.inner)
    }
}

/// Three-level medium with transition frequencies in THz (ν = ω/2π).
#[pyclass(module = "eosq", frozen)]
struct LevelScheme {
    inner: core::LevelScheme,
}

#[pymethods]
impl LevelScheme {
    #[new]
    #[pyo3(signature = (nu_gprime_g_thz, nu_f_g_thz, gammas_thz, dipoles = (1.0, 1.0, 1.0)))]
    fn new(
        nu_gprime_g_thz: f64,
        nu_f_g_thz: f64,
        gammas_thz: (f64, f64, f64),
        dipoles: (f64, f64, f64),
    ) -> PyResult<Self> {
        let lw = Linewidths::new(gammas_thz.0 * THZ, gammas_thz.1 * THZ, gammas_thz.2 * THZ);
        let mu = Dipoles::new(dipoles.0, dipoles.1, dipoles.2);
        let inner = core::LevelScheme::new(nu_gprime_g_thz * THZ, nu_f_g_thz * THZ, lw, mu)
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Dimensionless χ⁽²⁾₊ᵣₛ(−(ω₂+ω₁); ω₂, ω₁) with r, s in {"+", "-"}; ω in rad/s.
    fn chi2(&self, r: &str, s: &str, omega2: f64, omega1: f64) -> PyResult<Complex64> {
        let consts = core::PhysicalConstants::default();
        Ok(core::chi2(superop(r)?, superop(s)?, omega2, omega1, &self.inner, &consts))
    }
}

#[pyfunction]
fn phase_factor(theta: f64) -> PyResult<Complex64> {
    core::phase_factor(theta).map_err(to_py)
}

#[pyfunction]
fn quadrature_phase(theta: f64) -> PyResult<f64> {
    core::quadrature_phase(theta).map_err(to_py)
}

#[pyfunction]
fn balanced_waveplate_angle(theta: f64) -> PyResult<f64> {
    core::balanced_waveplate_angle(theta).map_err(to_py)
}

#[pyfunction]
fn theta_grid(points: usize) -> Vec<f64> {
    core::theta_grid(points)
}

#[pyfunction]
#[pyo3(signature = (shot_noise, span = 8.0, points = 4001))]
fn signal_grid(shot_noise: f64, span: f64, points: usize) -> Vec<f64> {
    core::signal_grid(shot_noise, span, points)
}

fn warning_text(w: &ValidityWarning) -> String {
    match w {
        ValidityWarning::NotPerturbative { ratio } => format!("|Gamma|/N = {ratio:.3e} is not small"),
        ValidityWarning::NegativeDensity { points, min_factor } => {
            format!("density negative at {points} points (min factor {min_factor:.3e})")
        }
    }
}

fn curve_dict<'py>(py: Python<'py>, c: &core::DistributionCurve) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("s", c.s_grid.clone())?;
    d.set_item("density", c.density.clone())?;
    d.set_item("normalization", c.normalization())?;
    d.set_item("variance", c.moment(2))?;
    let warnings: Vec<String> = c.warnings.iter().map(warning_text).collect();
    d.set_item("warnings", warnings)?;
    Ok(d)
}

/// First-order signal density for shot noise N and normally ordered moment Γ.
#[pyfunction]
fn distribution<'py>(
    py: Python<'py>,
    shot_noise: f64,
    gamma: f64,
    s_grid: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = core::distribution(shot_noise, gamma, &s_grid).map_err(to_py)?;
    curve_dict(py, &c)
}

#[pyfunction]
fn hermite_series<'py>(
    py: Python<'py>,
    shot_noise: f64,
    normal_moments: Vec<f64>,
    s_grid: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = core::hermite_series(shot_noise, &normal_moments, &s_grid).map_err(to_py)?;
    curve_dict(py, &c)
}

#[pymodule]
#[pyo3(name = "eosq")]
fn eosq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("THZ", THZ)?;
    m.add_class::<Scenario>()?;
    m.add_class::<MomentEngine>()?;
    m.add_class::<LevelScheme>()?;
    m.add_function(wrap_pyfunction!(phase_factor, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature_phase, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_waveplate_angle, m)?)?;
    m.add_function(wrap_pyfunction!(theta_grid, m)?)?;
    m.add_function(wrap_pyfunction!(signal_grid, m)?)?;
    m.add_function(wrap_pyfunction!(distribution, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_series, m)?)?;
    Ok(())
}
