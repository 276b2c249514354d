use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use implosion::profile::{dampen, find_profile, profile_at, ProfileConfig, ProfileCurve};
use implosion::simulate::{init, physical_rates, run, sim_grid, Perturbation, RunConfig, TimeConvention};
use implosion::spectral::{shifted_root, spectral_study, SpectralConfig};
use implosion::{Error, Regime};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidStateLaw(_) | Error::DegenerateTriplePoint { .. } | Error::InvalidParameter(_) | Error::Input(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn regime(name: &str) -> PyResult<Regime> {
    match name {
        "euler" => Ok(Regime::Euler),
        "navier-stokes" | "ns" => Ok(Regime::NavierStokes),
        _ => Err(PyValueError::new_err(format!("unknown regime {name:?}"))),
    }
}

#[pyclass(frozen)]
struct Parameters {
    inner: implosion::Parameters,
}

#[pymethods]
impl Parameters {
    #[new]
    #[pyo3(signature = (d, gamma, mu = 0.0, mu_prime = 0.0, regime = "euler"))]
    fn new(d: u32, gamma: f64, mu: f64, mu_prime: f64, regime: &str) -> PyResult<Self> {
        let inner = implosion::derive(d, gamma, mu, mu_prime, self::regime(regime)?).map_err(to_py)?;
        Ok(Parameters { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (d, ell, mu = 0.0, mu_prime = 0.0, regime = "euler"))]
    fn from_ell(d: u32, ell: f64, mu: f64, mu_prime: f64, regime: &str) -> PyResult<Self> {
        let inner = implosion::params::derive_from_ell(d, ell, mu, mu_prime, self::regime(regime)?).map_err(to_py)?;
        Ok(Parameters { inner })
    }

    #[getter]
    fn d(&self) -> u32 {
        self.inner.d
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn ell(&self) -> f64 {
        self.inner.ell
    }
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }
    #[getter]
    fn r_star(&self) -> f64 {
        self.inner.r_star
    }
    #[getter]
    fn r_plus(&self) -> f64 {
        self.inner.r_plus
    }
    #[getter]
    fn r_eye(&self) -> f64 {
        self.inner.r_eye
    }

    fn __repr__(&self) -> String {
        format!("Parameters(d={}, gamma={}, ell={})", self.inner.d, self.inner.gamma, self.inner.ell)
    }
}

#[pyclass(frozen)]
struct Profile {
    params: implosion::Parameters,
    curve: ProfileCurve,
}

#[pymethods]
impl Profile {
    #[staticmethod]
    fn find(params: &Parameters) -> PyResult<Self> {
        let sol = find_profile(&params.inner, &ProfileConfig::default()).map_err(to_py)?;
        let params = params.inner.with_speed(sol.curve.r).map_err(to_py)?;
        Ok(Profile { params, curve: sol.curve })
    }

    #[getter]
    fn r(&self) -> f64 {
        self.curve.r
    }
    #[getter]
    fn e(&self) -> f64 {
        self.params.e.unwrap_or(f64::NAN)
    }
    #[getter]
    fn z2(&self) -> f64 {
        self.curve.z2
    }
    #[getter]
    fn c_w(&self) -> f64 {
        self.curve.c_w
    }
    #[getter]
    fn z(&self) -> Vec<f64> {
        self.curve.z.clone()
    }
    #[getter]
    fn w(&self) -> Vec<f64> {
        self.curve.w.clone()
    }
    #[getter]
    fn sigma(&self) -> Vec<f64> {
        self.curve.sigma.clone()
    }

    /// `(rho, u, psi)` at radius `z`.
    fn at(&self, z: f64) -> (f64, f64, f64) {
        profile_at(&self.curve, z)
    }

    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = implosion::repulsivity::margins(&self.curve, &self.params);
        let out = PyDict::new(py);
        out.set_item("inside_1", rep.margins.inside_1.min)?;
        out.set_item("inside_2", rep.margins.inside_2.min)?;
        out.set_item("outside_1", rep.margins.outside_1.min)?;
        out.set_item("outside", rep.margins.outside.min)?;
        out.set_item("kappa", rep.kappa.from_derivatives)?;
        out.set_item("identity_error", rep.identity_error)?;
        out.set_item("halving_drift", rep.halving_drift())?;
        out.set_item("passes", rep.passes())?;
        Ok(out)
    }

    fn shifted_root(&self, a: f64) -> PyResult<f64> {
        shifted_root(&self.curve, a).map_err(to_py)
    }

    #[pyo3(signature = (n = 128, a = 0.02))]
    fn spectrum<'py>(&self, py: Python<'py>, n: usize, a: f64) -> PyResult<Bound<'py, PyDict>> {
        let cfg = SpectralConfig { a, ..SpectralConfig::default() };
        let study = py.detach(|| spectral_study(&self.curve, n, &cfg)).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("count_n", study.count_n)?;
        out.set_item("count_2n", study.count_2n)?;
        out.set_item("consistent", study.consistent)?;
        out.set_item("drift", study.drift)?;
        out.set_item("lambda_max", study.report.lambda_max())?;
        let eig: Vec<(f64, f64)> = study.report.unstable().map(|e| (e.re, e.im)).collect();
        out.set_item("unstable", eig)?;
        Ok(out)
    }

    /// Renormalized run from dampened data; returns deviation samples on `Z <= Z2`.
    #[pyo3(signature = (h = 0.02, tau_span = 1.0, amplitude = 0.0, seed = None, n_p = 2.0))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        h: f64,
        tau_span: f64,
        amplitude: f64,
        seed: Option<u64>,
        n_p: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let z = sim_grid(h, 20.0);
        let damp = dampen(&self.curve, n_p, 0.0, &z).map_err(to_py)?;
        let pert = match seed {
            Some(s) => Perturbation::random(s, 4, amplitude, self.curve.z2),
            None => Perturbation::single(amplitude, amplitude, 1.0, 0.5),
        };
        let mut state = init(&damp, &self.curve, &self.params, &pert).map_err(to_py)?;
        let traj = py.detach(|| run(&mut state, tau_span, &RunConfig::default(), self.curve.z2));
        let out = PyDict::new(py);
        out.set_item("stop", format!("{:?}", traj.stop).to_lowercase())?;
        out.set_item("tau", traj.diagnostics.samples.iter().map(|s| s.tau).collect::<Vec<_>>())?;
        out.set_item("deviation", traj.diagnostics.samples.iter().map(|s| s.deviation[0].max(s.deviation[1])).collect::<Vec<_>>())?;
        out.set_item("residual", traj.diagnostics.samples.iter().map(|s| s.residual[0].max(s.residual[1])).collect::<Vec<_>>())?;
        Ok(out)
    }

    /// Fitted blow-up exponents `(rho, u)` of the exact solution at times `ts` before `t_blowup`.
    #[pyo3(signature = (ts, t_blowup = 1.0))]
    fn rates(&self, ts: Vec<f64>, t_blowup: f64) -> (f64, f64) {
        let rc = physical_rates(&self.curve, t_blowup, &ts, TimeConvention::Log, 0.5);
        (rc.exponent_rho, rc.exponent_u)
    }
}

#[pymodule]
fn implosion_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Parameters>()?;
    m.add_class::<Profile>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
