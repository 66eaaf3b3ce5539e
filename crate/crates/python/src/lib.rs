//! Python bindings. Inverse temperatures are floats, with `math.inf` or the
//! string `"inf"` for zero temperature.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rotbath_core::bath::{self, log_grid};
use rotbath_core::beta::InverseTemperature;
use rotbath_core::birthdeath::{self, DistributionOptions, GillespieOptions, ModeDistribution, NonlinearParams, TruncationStatus};
use rotbath_core::classical::{self, ShearConfig};
use rotbath_core::kinetics::{self, KineticsOptions, RunStatus};
use rotbath_core::mode::{self, Statistics};
use rotbath_core::rates::{self, BathSpec};
use rotbath_core::{runner, scenario, thermo};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_beta(obj: &Bound<'_, PyAny>) -> PyResult<InverseTemperature> {
    if let Ok(v) = obj.extract::<f64>() {
        return InverseTemperature::finite(v).map_err(value_err);
    }
    let s: String = obj.extract()?;
    s.parse::<InverseTemperature>().map_err(value_err)
}

fn parse_statistics(s: &str) -> PyResult<Statistics> {
    match s {
        "bose" => Ok(Statistics::Bose),
        "fermi" => Ok(Statistics::Fermi),
        other => Err(PyValueError::new_err(format!("statistics must be 'bose' or 'fermi', got {other:?}"))),
    }
}

fn nonlinear(kappa: f64) -> PyResult<NonlinearParams> {
    NonlinearParams::new(kappa).map_err(value_err)
}

#[pyclass(frozen, from_py_object, name = "Mode")]
#[derive(Clone)]
struct PyMode(mode::Mode);

#[pymethods]
impl PyMode {
    #[new]
    #[pyo3(signature = (omega, m = 0, alpha = "0".to_string(), statistics = "bose"))]
    fn new(omega: f64, m: i64, alpha: String, statistics: &str) -> PyResult<Self> {
        Ok(Self(mode::Mode::new(omega, m, alpha, parse_statistics(statistics)?).map_err(value_err)?))
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.0.omega()
    }

    #[getter]
    fn m(&self) -> i64 {
        self.0.m()
    }

    #[getter]
    fn alpha(&self) -> String {
        self.0.alpha().to_string()
    }

    #[getter]
    fn statistics(&self) -> String {
        self.0.statistics().to_string()
    }

    fn comoving_energy(&self, omega_rot: f64) -> f64 {
        self.0.comoving_energy(omega_rot)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mode(omega={}, m={}, alpha={:?}, statistics={:?})",
            self.0.omega(),
            self.0.m(),
            self.0.alpha(),
            self.0.statistics().to_string()
        )
    }
}

#[pyclass(frozen, name = "Bath")]
struct PyBath(BathSpec);

#[pymethods]
impl PyBath {
    #[staticmethod]
    #[pyo3(signature = (beta, omega_rot = 0.0, amplitude = 1.0, exponent = 1.0, cutoff = 10.0))]
    fn ohmic(beta: &Bound<'_, PyAny>, omega_rot: f64, amplitude: f64, exponent: f64, cutoff: f64) -> PyResult<Self> {
        let s = bath::ohmic_spectrum(amplitude, exponent, cutoff, parse_beta(beta)?).map_err(value_err)?;
        Ok(Self(BathSpec::new(s, omega_rot).map_err(value_err)?))
    }

    #[staticmethod]
    #[pyo3(signature = (beta, omega_rot = 0.0, level = 1.0))]
    fn flat(beta: &Bound<'_, PyAny>, omega_rot: f64, level: f64) -> PyResult<Self> {
        let s = bath::flat_spectrum(level, parse_beta(beta)?).map_err(value_err)?;
        Ok(Self(BathSpec::new(s, omega_rot).map_err(value_err)?))
    }

    /// Constant form factor; `beta` is the inverse Hawking temperature.
    #[staticmethod]
    #[pyo3(signature = (beta, omega_rot = 0.0, level = 1.0))]
    fn hawking(beta: &Bound<'_, PyAny>, omega_rot: f64, level: f64) -> PyResult<Self> {
        let s = bath::hawking_constant(level, parse_beta(beta)?).map_err(value_err)?;
        Ok(Self(BathSpec::new(s, omega_rot).map_err(value_err)?))
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta().value()
    }

    #[getter]
    fn omega_rot(&self) -> f64 {
        self.0.omega_rot()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.spectrum().family().name()
    }

    /// `γ⁰(x)`.
    fn spectrum(&self, x: f64) -> f64 {
        self.0.spectrum().eval(x)
    }

    /// KMS residual on a log grid of `points` energies up to `x_max`.
    #[pyo3(signature = (x_max = 30.0, points = 100))]
    fn kms_residual(&self, x_max: f64, points: usize) -> PyResult<f64> {
        let beta = self.0.beta().value();
        bath::kms_check(self.0.spectrum(), beta, &log_grid(1e-3 / beta, x_max, points)).map_err(value_err)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "RateSet")]
#[derive(Clone, Copy)]
struct PyRateSet(rates::RateSet);

#[pymethods]
impl PyRateSet {
    #[staticmethod]
    #[pyo3(signature = (gamma_down, gamma_up, statistics = "bose"))]
    fn from_rates(gamma_down: f64, gamma_up: f64, statistics: &str) -> PyResult<Self> {
        Ok(Self(rates::RateSet::from_rates(gamma_down, gamma_up, parse_statistics(statistics)?)))
    }

    #[getter]
    fn gamma_down(&self) -> f64 {
        self.0.gamma_down
    }

    #[getter]
    fn gamma_up(&self) -> f64 {
        self.0.gamma_up
    }

    #[getter]
    fn beta_loc(&self) -> Option<f64> {
        self.0.beta_loc
    }

    #[getter]
    fn classification(&self) -> &'static str {
        self.0.classification.as_str()
    }

    fn relaxation_rate(&self, statistics: &str) -> PyResult<f64> {
        Ok(self.0.relaxation_rate(parse_statistics(statistics)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "RateSet(gamma_down={}, gamma_up={}, classification={:?})",
            self.0.gamma_down,
            self.0.gamma_up,
            self.0.classification.as_str()
        )
    }
}

#[pyfunction(name = "rates")]
fn py_rates(bath: &PyBath, mode: &PyMode) -> PyRateSet {
    PyRateSet(rates::rates(&bath.0, &mode.0))
}

#[pyfunction]
fn classify(bath: &PyBath, mode: &PyMode) -> &'static str {
    rates::classify(&bath.0, &mode.0).as_str()
}

#[pyfunction]
fn local_beta(bath: &PyBath, mode: &PyMode) -> PyResult<f64> {
    rates::local_beta(&bath.0, &mode.0).map_err(value_err)
}

#[pyfunction]
fn closed_form_mean(rates: &PyRateSet, statistics: &str, n0: f64, t: f64) -> PyResult<f64> {
    Ok(kinetics::closed_form_mean(&rates.0, parse_statistics(statistics)?, n0, t))
}

#[pyfunction]
fn asymptotic_population(bath: &PyBath, mode: &PyMode) -> PyResult<f64> {
    kinetics::asymptotic_population(&bath.0, &mode.0).map_err(value_err)
}

fn run_status(status: RunStatus) -> (String, Option<f64>) {
    match status {
        RunStatus::Complete => ("complete".into(), None),
        RunStatus::ExponentialRunaway { t } => ("exponential_runaway".into(), Some(t)),
    }
}

/// Mean occupation on `times`. Returns a dict with `times`, `nbar`,
/// `status` and `t_runaway`.
#[pyfunction]
#[pyo3(signature = (mode, rates, n0, times, population_ceiling = 1e12))]
fn evolve_mean<'py>(
    py: Python<'py>,
    mode: &PyMode,
    rates: &PyRateSet,
    n0: f64,
    times: Vec<f64>,
    population_ceiling: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = KineticsOptions {
        population_ceiling,
        ..KineticsOptions::default()
    };
    let run = kinetics::evolve_mean(&mode.0, rates.0, n0, &times, opts).map_err(value_err)?;
    let (status, t) = run_status(run.status);
    let d = PyDict::new(py);
    d.set_item("times", run.times)?;
    d.set_item("nbar", run.nbar)?;
    d.set_item("status", status)?;
    d.set_item("t_runaway", t)?;
    Ok(d)
}

/// `[(mode, rate, classification)]` in output order.
#[pyfunction]
fn emission_spectrum(bath: &PyBath, modes: Vec<PyMode>) -> Vec<(PyMode, f64, &'static str)> {
    let mut modes: Vec<mode::Mode> = modes.into_iter().map(|m| m.0).collect();
    modes.sort_by(mode::Mode::output_order);
    kinetics::emission_spectrum(&bath.0, &modes)
        .into_iter()
        .map(|l| (PyMode(l.mode), l.rate, l.classification.as_str()))
        .collect()
}

/// Exact evolution of `P_n` from the number state `n0`.
#[pyfunction]
#[pyo3(signature = (mode, rates, n0, times, kappa = 0.0, tail_tol = 1e-10, max_cutoff = 1 << 20))]
#[allow(clippy::too_many_arguments)]
fn evolve_distribution<'py>(
    py: Python<'py>,
    mode: &PyMode,
    rates: &PyRateSet,
    n0: usize,
    times: Vec<f64>,
    kappa: f64,
    tail_tol: f64,
    max_cutoff: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let nl = nonlinear(kappa)?;
    let p0 = ModeDistribution::number_state(mode.0.clone(), n0).map_err(value_err)?;
    let opts = DistributionOptions {
        tail_tol,
        max_cutoff,
        ..DistributionOptions::default()
    };
    let r = rates.0;
    let run = py
        .detach(|| birthdeath::evolve_distribution(&r, nl, &p0, &times, opts))
        .map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("times", run.snapshots.iter().map(|s| s.time).collect::<Vec<_>>())?;
    d.set_item("mean", run.snapshots.iter().map(|s| s.mean()).collect::<Vec<_>>())?;
    d.set_item("variance", run.snapshots.iter().map(|s| s.variance()).collect::<Vec<_>>())?;
    d.set_item("probs", run.snapshots.into_iter().map(|s| s.probs).collect::<Vec<_>>())?;
    match run.status {
        TruncationStatus::Complete => d.set_item("status", "complete")?,
        TruncationStatus::RunawayTruncation { t, cutoff } => {
            d.set_item("status", "runaway_truncation")?;
            d.set_item("t_runaway", t)?;
            d.set_item("cutoff", cutoff)?;
        }
    }
    d.set_item("largest_cutoff", run.largest_cutoff)?;
    Ok(d)
}

/// Seeded ensemble statistics at `times`.
#[pyfunction]
#[pyo3(signature = (rates, statistics, n0, times, n_traj, seed, kappa = 0.0, sample_paths = 0))]
#[allow(clippy::too_many_arguments)]
fn gillespie<'py>(
    py: Python<'py>,
    rates: &PyRateSet,
    statistics: &str,
    n0: u64,
    times: Vec<f64>,
    n_traj: usize,
    seed: u64,
    kappa: f64,
    sample_paths: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let stats = parse_statistics(statistics)?;
    let nl = nonlinear(kappa)?;
    let opts = GillespieOptions {
        sample_paths,
        ..GillespieOptions::default()
    };
    let r = rates.0;
    let g = py
        .detach(|| birthdeath::gillespie(&r, stats, nl, n0, &times, n_traj, seed, opts))
        .map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("std_error", g.std_error())?;
    d.set_item("times", g.times)?;
    d.set_item("mean", g.mean)?;
    d.set_item("variance", g.variance)?;
    d.set_item("n_traj", g.n_traj)?;
    d.set_item("sample_paths", g.sample_paths)?;
    d.set_item("seed", g.seed)?;
    Ok(d)
}

#[pyfunction]
fn saturation_fixed_point(rates: &PyRateSet, kappa: f64) -> PyResult<f64> {
    birthdeath::saturation_fixed_point(&rates.0, nonlinear(kappa)?).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (rates, kappa, n0, times, population_ceiling = 1e12))]
fn meanfield_evolve<'py>(
    py: Python<'py>,
    rates: &PyRateSet,
    kappa: f64,
    n0: f64,
    times: Vec<f64>,
    population_ceiling: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = KineticsOptions {
        population_ceiling,
        ..KineticsOptions::default()
    };
    let run = birthdeath::meanfield_evolve(&rates.0, nonlinear(kappa)?, n0, &times, opts).map_err(value_err)?;
    let (status, t) = run_status(run.status);
    let d = PyDict::new(py);
    d.set_item("times", run.times)?;
    d.set_item("n", run.n)?;
    d.set_item("status", status)?;
    d.set_item("t_runaway", t)?;
    Ok(d)
}

/// Thermodynamic ledger for modes started in number states `n0`. One dict
/// per time.
#[pyfunction]
#[pyo3(signature = (bath, modes, n0, times, kappa = 0.0))]
fn thermo_ledger<'py>(
    py: Python<'py>,
    bath: &PyBath,
    modes: Vec<PyMode>,
    n0: Vec<usize>,
    times: Vec<f64>,
    kappa: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let modes: Vec<mode::Mode> = modes.into_iter().map(|m| m.0).collect();
    let initial = modes
        .iter()
        .zip(&n0)
        .map(|(m, &n)| ModeDistribution::number_state(m.clone(), n).map_err(value_err))
        .collect::<PyResult<Vec<_>>>()?;
    let nl = nonlinear(kappa)?;
    let ledger = py
        .detach(|| thermo::build_ledger(&bath.0, &modes, nl, &initial, &times, DistributionOptions::default()))
        .map_err(value_err)?;
    ledger
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("time", r.time)?;
            d.set_item("S", r.entropy)?;
            d.set_item("dS_dt", r.entropy_rate)?;
            d.set_item("sigma", r.sigma)?;
            d.set_item("J", r.heat_current)?;
            d.set_item("U", r.energy)?;
            d.set_item("Lz", r.lz)?;
            d.set_item("res1", r.residual_first_law)?;
            d.set_item("res2", r.residual_second_law)?;
            d.set_item("regularized", r.regularized)?;
            Ok(d)
        })
        .collect()
}

/// `(dM, dL, dA)` for quanta `[(omega, m, count)]`.
#[pyfunction]
fn bh_ledger(quanta: Vec<(f64, i64, f64)>, omega_h: f64, t_h: f64) -> PyResult<(f64, f64, f64)> {
    let quanta: Vec<thermo::Quantum> = quanta
        .into_iter()
        .map(|(omega, m, count)| thermo::Quantum { omega, m, count })
        .collect();
    let e = thermo::bh_ledger(&quanta, omega_h, t_h).map_err(value_err)?;
    Ok((e.d_mass, e.d_angular_momentum, e.d_area))
}

#[pyfunction]
#[pyo3(signature = (upper_speed, phase_velocity, wavenumber = 1.0))]
fn shear_classify(upper_speed: f64, phase_velocity: f64, wavenumber: f64) -> PyResult<&'static str> {
    let cfg = ShearConfig::new(upper_speed, phase_velocity, wavenumber).map_err(value_err)?;
    Ok(classical::shear_classify(&cfg).as_str())
}

#[pyfunction]
fn energy_split(upper_speed: f64, phase_velocity: f64) -> PyResult<(f64, f64)> {
    let cfg = ShearConfig::new(upper_speed, phase_velocity, 1.0).map_err(value_err)?;
    Ok(classical::energy_split(&cfg))
}

#[pyfunction]
fn comoving_frequency(omega: f64, upper_speed: f64, phase_velocity: f64) -> PyResult<f64> {
    classical::comoving_frequency(omega, upper_speed, phase_velocity).map_err(value_err)
}

/// Validates scenario text and returns its normalised form.
#[pyfunction]
fn check_scenario(text: &str) -> PyResult<String> {
    Ok(scenario::print_scenario(&scenario::parse_scenario(text).map_err(value_err)?))
}

/// Runs a scenario file. Returns `(outcome, files)`, outcome being
/// `"complete"` or `"runaway"`.
#[pyfunction]
#[pyo3(signature = (path, out = None, seed = None, threads = None))]
fn run_scenario(
    py: Python<'_>,
    path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> PyResult<(&'static str, Vec<PathBuf>)> {
    let text = std::fs::read_to_string(&path).map_err(value_err)?;
    let s = scenario::parse_scenario(&text).map_err(value_err)?;
    let opts = runner::RunOptions {
        out_dir: out,
        seed,
        threads,
        base_dir: path.parent().map(PathBuf::from).unwrap_or_default(),
    };
    let report = py.detach(|| runner::run_scenario(&s, &opts)).map_err(runtime_err)?;
    let outcome = match report.outcome {
        runner::RunOutcome::Complete => "complete",
        runner::RunOutcome::Runaway => "runaway",
    };
    Ok((outcome, report.files))
}

#[pymodule]
pub fn rotbath(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMode>()?;
    m.add_class::<PyBath>()?;
    m.add_class::<PyRateSet>()?;
    m.add_function(wrap_pyfunction!(py_rates, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(local_beta, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_mean, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_population, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_mean, m)?)?;
    m.add_function(wrap_pyfunction!(emission_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(gillespie, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(meanfield_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(thermo_ledger, m)?)?;
    m.add_function(wrap_pyfunction!(bh_ledger, m)?)?;
    m.add_function(wrap_pyfunction!(shear_classify, m)?)?;
    m.add_function(wrap_pyfunction!(energy_split, m)?)?;
    m.add_function(wrap_pyfunction!(comoving_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(check_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
