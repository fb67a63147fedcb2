//! Python bindings for the `peridyn` core crate.

use std::path::PathBuf;

use peridyn::classical_wave::{cone_leak as core_cone_leak, DalembertSolution};
use peridyn::config::parse_config;
use peridyn::evolution::{evolve_grid, evolve_point as core_evolve_point, PointOptions};
use peridyn::kernel_b::{solve_via_kernels, KernelB};
use peridyn::nonlocal_operator::apply_d as core_apply_d;
use peridyn::ray_probe::{fit_exponent, geometric_times, sample_ray};
use peridyn::run::{run as core_run, Command};
use peridyn::{DispersionProfile, FieldState, GaussianPulse, Grid, InitialDataSpec, MicromodulusKernel};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: peridyn::Error) -> PyErr {
    match e {
        peridyn::Error::InvalidInput(_) | peridyn::Error::Config(_) | peridyn::Error::Precondition(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A micromodulus kernel `J`.
#[pyclass(name = "Kernel", frozen)]
struct PyKernel(MicromodulusKernel);

#[pymethods]
impl PyKernel {
    #[staticmethod]
    #[pyo3(signature = (width = 1.0, amplitude = 1.0))]
    fn gaussian(width: f64, amplitude: f64) -> PyResult<Self> {
        MicromodulusKernel::gaussian(width, amplitude).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (width = 1.0, amplitude = 1.0))]
    fn exponential(width: f64, amplitude: f64) -> PyResult<Self> {
        MicromodulusKernel::exponential(width, amplitude).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (half_width = 1.0, amplitude = 1.0))]
    fn top_hat(half_width: f64, amplitude: f64) -> PyResult<Self> {
        MicromodulusKernel::top_hat(half_width, amplitude)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (xs, values, max_moment_order = None))]
    fn tabulated(xs: Vec<f64>, values: Vec<f64>, max_moment_order: Option<u32>) -> PyResult<Self> {
        MicromodulusKernel::tabulated(xs, values, max_moment_order)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, max_moment_order = None))]
    fn from_csv(path: PathBuf, max_moment_order: Option<u32>) -> PyResult<Self> {
        MicromodulusKernel::from_csv(&path, max_moment_order)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn fourier(&self, xi: f64) -> f64 {
        self.0.fourier(xi)
    }

    #[pyo3(signature = (k, absolute = false))]
    fn moment(&self, k: u32, absolute: bool) -> PyResult<f64> {
        self.0.moment(k, absolute).map_err(err)
    }

    /// List of `(check, passed, residual, detail)` tuples.
    fn validate(&self) -> Vec<(String, bool, f64, String)> {
        self.0
            .validate()
            .checks
            .into_iter()
            .map(|c| (c.name.to_string(), c.passed, c.residual, c.detail))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Kernel({})", self.0.name())
    }
}

/// Dispersion data `φ`, `ψ`, `c` derived from a kernel.
#[pyclass(name = "Dispersion", frozen)]
struct PyDispersion(DispersionProfile);

#[pymethods]
impl PyDispersion {
    #[new]
    fn new(kernel: &PyKernel) -> PyResult<Self> {
        DispersionProfile::build(&kernel.0).map(Self).map_err(err)
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    #[getter]
    fn mu0(&self) -> f64 {
        self.0.mu0
    }

    #[getter]
    fn mu2(&self) -> f64 {
        self.0.mu2
    }

    fn phi(&self, xi: f64) -> f64 {
        self.0.phi(xi)
    }

    fn omega(&self, xi: f64) -> f64 {
        self.0.omega(xi)
    }

    fn psi(&self, xi: f64) -> f64 {
        self.0.psi(xi)
    }

    fn psi_prime(&self, xi: f64) -> f64 {
        self.0.psi_prime(xi)
    }

    /// `Df` for `f` sampled on `x0 + j·dx`, `len(f)` a power of two.
    fn apply_d(&self, x0: f64, dx: f64, f: Vec<f64>) -> PyResult<Vec<f64>> {
        let grid = Grid::new(x0, dx, f.len()).map_err(err)?;
        Ok(core_apply_d(&self.0, &grid, &f).map_err(err)?.values)
    }

    /// Evolves gridded `(u, ut)` to time `t`; returns the new pair.
    fn evolve_grid(&self, x0: f64, dx: f64, u: Vec<f64>, ut: Vec<f64>, t: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let grid = Grid::new(x0, dx, u.len()).map_err(err)?;
        let state = FieldState::new(grid, u, ut).map_err(err)?;
        let out = evolve_grid(&self.0, &state, t).map_err(err)?;
        Ok((out.u, out.ut))
    }

    /// `(u, ∂ₜu, cDu)` at `(t, x)` without a grid.
    fn evolve_point(&self, data: &PyData, t: f64, x: f64) -> PyResult<(f64, f64, f64)> {
        let v = core_evolve_point(&self.0, &data.0, t, x, &PointOptions::default()).map_err(err)?;
        Ok((v.u, v.p, v.q))
    }

    /// Energy density along `x0 + v·t` at geometric times, and the fitted
    /// power-law exponent (None if too few samples clear the noise floor).
    #[pyo3(signature = (data, v, t_min = 10.0, t_max = 100.0, ratio = 1.02, x0 = 0.0))]
    fn ray_scan(
        &self,
        data: &PyData,
        v: f64,
        t_min: f64,
        t_max: f64,
        ratio: f64,
        x0: f64,
    ) -> PyResult<(Vec<f64>, Vec<f64>, Option<f64>)> {
        let times = geometric_times(t_min, t_max, ratio).map_err(err)?;
        let s = sample_ray(&self.0, &data.0, v, x0, &times, &PointOptions::default()).map_err(err)?;
        let slope = fit_exponent(&s, (t_min, t_max)).ok().map(|f| f.slope);
        Ok((s.times(), s.energies(), slope))
    }

    /// `b_j(t, z)` with regularisation parameter `a`.
    #[pyo3(signature = (j, t, z, a = 1.0))]
    fn b(&self, j: i32, t: f64, z: f64, a: f64) -> PyResult<f64> {
        let kb = KernelB::new(&self.0, a).map_err(err)?;
        Ok(kb.eval(j, t, z).map_err(err)?.value)
    }

    /// `∂ₜʲu(t, x)` through the kernel representation.
    #[pyo3(signature = (data, t, x, j = 0, a = 1.0))]
    fn solve_via_kernels(&self, data: &PyData, t: f64, x: f64, j: i32, a: f64) -> PyResult<f64> {
        let kb = KernelB::new(&self.0, a).map_err(err)?;
        Ok(solve_via_kernels(&kb, &data.0, t, x, j, 0).map_err(err)?.value)
    }

    /// `(classical, nonlocal, nonlocal_error, probe, peak)` outside the cone.
    #[pyo3(signature = (data, t, offset = 3.0))]
    fn cone_leak(&self, data: &PyData, t: f64, offset: f64) -> PyResult<(f64, f64, f64, f64, f64)> {
        let l = core_cone_leak(&self.0, &data.0, t, offset, 10.0, 200, &PointOptions::default()).map_err(err)?;
        Ok((l.classical, l.nonlocal, l.nonlocal_error, l.probe, l.peak))
    }

    /// `(u, ∂ₜu)` of the classical wave equation with the same speed `c`.
    fn dalembert(&self, data: &PyData, t: f64, x: f64) -> PyResult<(f64, f64)> {
        Ok(DalembertSolution::new(self.0.c, data.0.clone())
            .map_err(err)?
            .eval(t, x))
    }
}

/// Initial data: sums of Gaussian pulses `(amplitude, center, width)` for
/// `u(0)` and `∂ₜu(0)`.
#[pyclass(name = "InitialData", frozen)]
struct PyData(InitialDataSpec);

fn pulses(terms: Vec<(f64, f64, f64)>) -> PyResult<Vec<GaussianPulse>> {
    terms
        .into_iter()
        .map(|(a, c, s)| GaussianPulse::new(a, c, s).map_err(err))
        .collect()
}

#[pymethods]
impl PyData {
    #[new]
    #[pyo3(signature = (u = vec![], ut = vec![]))]
    fn new(u: Vec<(f64, f64, f64)>, ut: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        Ok(Self(InitialDataSpec::new(pulses(u)?, pulses(ut)?)))
    }

    fn u(&self, x: f64) -> f64 {
        self.0.u(x)
    }

    fn ut(&self, x: f64) -> f64 {
        self.0.ut(x)
    }
}

/// Runs a CLI subcommand with configuration text; returns the summary JSON.
#[pyfunction]
#[pyo3(signature = (command, out, config = ""))]
fn run(command: &str, out: PathBuf, config: &str) -> PyResult<String> {
    let cmd = Command::ALL
        .into_iter()
        .find(|c| c.name() == command)
        .ok_or_else(|| PyValueError::new_err(format!("unknown command {command:?}")))?;
    let cfg = parse_config(config).map_err(err)?;
    core_run(cmd, &cfg, &out).map_err(err)?;
    std::fs::read_to_string(out.join("summary.json")).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn peridyn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyDispersion>()?;
    m.add_class::<PyData>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
