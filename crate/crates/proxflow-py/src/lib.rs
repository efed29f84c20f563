//! Python bindings: problem presets, simulation of the constant-gain
//! projection flow and the time-varying flow, the discrete reference solver,
//! proximal operators, and settling-time certificates.

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use proxflow::certificates;
use proxflow::dynamics::{
    residual, residual_norm, rhs_disturbed, rhs_time_varying, Disturbance, DisturbanceSpec,
    GainSchedule,
};
use proxflow::integrator::{integrate, IntegratorConfig, Method};
use proxflow::oracle;
use proxflow::presets;
use proxflow::prox::{prox_apply, ProxKind};

fn to_py_err(e: proxflow::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A variational-inequality problem instance.
#[pyclass(name = "Problem")]
struct PyProblem {
    inner: proxflow::problem::MviProblem,
    name: String,
    default_gains: (f64, f64, f64),
    default_rho: (f64, f64),
    oracle_step: f64,
}

#[pymethods]
impl PyProblem {
    /// Load a shipped preset: "example1-ncp", "linear-sym", "lasso-cop",
    /// or "quadratic-minimax".
    #[staticmethod]
    fn from_preset(name: &str) -> PyResult<Self> {
        let preset = presets::by_name(name).map_err(to_py_err)?;
        let value = |k: &proxflow::dynamics::ScheduleKind| k.value(0.0);
        let default_gains = (
            value(&preset.schedule.gamma1),
            value(&preset.schedule.gamma2),
            value(&preset.schedule.gamma3),
        );
        Ok(PyProblem {
            inner: preset.problem,
            name: preset.name.to_string(),
            default_gains,
            default_rho: (preset.schedule.rho1, preset.schedule.rho2),
            oracle_step: preset.oracle_step,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.name.clone()
    }

    /// Gain coefficients of the preset's default schedule, evaluated at t0.
    #[getter]
    fn default_gains(&self) -> (f64, f64, f64) {
        self.default_gains
    }

    #[getter]
    fn default_rho(&self) -> (f64, f64) {
        self.default_rho
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn known_solution(&self) -> Option<Vec<f64>> {
        self.inner.known_solution().map(|w| w.to_vec())
    }

    /// Evaluate the problem operator.
    fn operator(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.evaluate(&w).map_err(to_py_err)
    }

    /// Natural residual `w - prox(w - mu F(w))`.
    fn residual(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        residual(&self.inner, &w).map_err(to_py_err)
    }

    fn residual_norm(&self, w: Vec<f64>) -> PyResult<f64> {
        residual_norm(&self.inner, &w).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(name='{}', dim={}, mu={})",
            self.name,
            self.inner.dim(),
            self.inner.mu()
        )
    }
}

/// Recorded integration run.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    states: Vec<Vec<f64>>,
    #[pyo3(get)]
    residual_norms: Vec<f64>,
    #[pyo3(get)]
    error_norms: Option<Vec<f64>>,
    #[pyo3(get)]
    settled_at: Option<f64>,
    #[pyo3(get)]
    terminated: String,
}

#[pymethods]
impl PyTrajectory {
    fn final_state(&self) -> Vec<f64> {
        self.states.last().cloned().unwrap_or_default()
    }

    fn final_error(&self) -> Option<f64> {
        self.error_norms.as_ref().and_then(|e| e.last().copied())
    }

    fn to_csv(&self) -> String {
        self.as_native().to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(samples={}, terminated='{}', settled_at={:?})",
            self.times.len(),
            self.terminated,
            self.settled_at
        )
    }
}

impl PyTrajectory {
    fn from_native(t: proxflow::integrator::Trajectory) -> Self {
        PyTrajectory {
            terminated: t.terminated.to_string(),
            times: t.times,
            states: t.states,
            residual_norms: t.residual_norms,
            error_norms: t.error_norms,
            settled_at: t.settled_at,
        }
    }

    fn as_native(&self) -> proxflow::integrator::Trajectory {
        proxflow::integrator::Trajectory {
            times: self.times.clone(),
            states: self.states.clone(),
            residual_norms: self.residual_norms.clone(),
            error_norms: self.error_norms.clone(),
            settled_at: self.settled_at,
            terminated: proxflow::integrator::TerminationReason::TEnd,
        }
    }
}

/// Integrate the gain-scheduled flow from `w0`. With the default constant
/// gains this is the constant-gain projection model; pass `disturbance_q`
/// to add a norm-bounded rotated disturbance.
#[pyfunction]
#[pyo3(signature = (
    problem,
    w0,
    beta=(50.0, 50.0, 20.0),
    rho=(0.5, 1.6),
    dt=1e-4,
    t_end=2.0,
    stop_residual=1e-8,
    record_stride=10,
    max_steps=2_000_000,
    disturbance_q=None,
    disturbance_seed=7,
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    problem: &PyProblem,
    w0: Vec<f64>,
    beta: (f64, f64, f64),
    rho: (f64, f64),
    dt: f64,
    t_end: f64,
    stop_residual: f64,
    record_stride: usize,
    max_steps: usize,
    disturbance_q: Option<f64>,
    disturbance_seed: u64,
) -> PyResult<PyTrajectory> {
    let schedule =
        GainSchedule::constant(beta.0, beta.1, beta.2, rho.0, rho.1).map_err(to_py_err)?;
    let cfg = IntegratorConfig {
        method: Method::Rk4AdaptiveClip,
        dt,
        t0: 0.0,
        t_end,
        stop_residual,
        max_steps,
        record_stride,
    };
    let p = &problem.inner;
    let traj = match disturbance_q {
        Some(q) => {
            let spec = DisturbanceSpec::Proportional {
                q,
                direction_seed: disturbance_seed,
            };
            let d = Disturbance::build(&spec, p, 0.0).map_err(to_py_err)?;
            integrate(
                |t, w| rhs_disturbed(p, &schedule, &d, t, w),
                |w| residual_norm(p, w),
                &w0,
                p.known_solution(),
                &cfg,
            )
        }
        None => integrate(
            |t, w| rhs_time_varying(p, &schedule, t, w),
            |w| residual_norm(p, w),
            &w0,
            p.known_solution(),
            &cfg,
        ),
    }
    .map_err(to_py_err)?;
    Ok(PyTrajectory::from_native(traj))
}

/// Discrete forward-backward reference iteration `w <- prox(w - step F(w))`.
/// Returns `(solution, iterations, converged)`.
#[pyfunction]
#[pyo3(signature = (problem, w0, step=None, tol=1e-10, max_iter=200_000))]
fn forward_backward_solve(
    problem: &PyProblem,
    w0: Vec<f64>,
    step: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<f64>, usize, bool)> {
    let step = step.unwrap_or(problem.oracle_step);
    let out = oracle::forward_backward_solve(&problem.inner, &w0, step, tol, max_iter)
        .map_err(to_py_err)?;
    Ok((out.solution, out.iterations, out.converged))
}

/// First time the monitored norm falls to `tol` (linear interpolation).
#[pyfunction]
fn detect_settling(traj: &PyTrajectory, tol: f64) -> PyResult<Option<f64>> {
    proxflow::integrator::detect_settling(&traj.as_native(), tol).map_err(to_py_err)
}

/// Contraction factor `1 / sqrt(1 + 2 mu zeta - mu^2 L^2)`.
#[pyfunction]
fn contraction_factor(mu: f64, zeta: f64, lipschitz: f64) -> PyResult<f64> {
    certificates::contraction_factor(mu, zeta, lipschitz).map_err(to_py_err)
}

fn certificate_to_dict(cert: &certificates::SettlingCertificate) -> HashMap<String, f64> {
    let mut map = HashMap::new();
    map.insert("xi".into(), cert.xi);
    map.insert("lambda_cap".into(), cert.lambda_cap);
    map.insert("p1".into(), cert.p1);
    map.insert("p2".into(), cert.p2);
    map.insert("theta1".into(), cert.theta1);
    map.insert("theta2".into(), cert.theta2);
    map.insert("feasible".into(), if cert.feasible { 1.0 } else { 0.0 });
    if let Some(b) = cert.bound_t {
        map.insert("bound_t".into(), b);
    }
    if let Some(b) = cert.optimistic_bound_t {
        map.insert("optimistic_bound_t".into(), b);
    }
    map
}

/// Settling-time bound of the constant-gain projection model.
#[pyfunction]
#[pyo3(signature = (beta1, beta2, beta3, rho1, rho2, mu, zeta, lipschitz, phi0_norm=0.0))]
#[allow(clippy::too_many_arguments)]
fn settling_bound_const(
    beta1: f64,
    beta2: f64,
    beta3: f64,
    rho1: f64,
    rho2: f64,
    mu: f64,
    zeta: f64,
    lipschitz: f64,
    phi0_norm: f64,
) -> PyResult<HashMap<String, f64>> {
    let xi = certificates::contraction_factor(mu, zeta, lipschitz).map_err(to_py_err)?;
    let cert = certificates::settling_bound_const(
        beta1, beta2, beta3, rho1, rho2, xi, mu, zeta, lipschitz, phi0_norm,
    )
    .map_err(to_py_err)?;
    Ok(certificate_to_dict(&cert))
}

/// Settling-time bound of the time-varying model. Each gain is a
/// `(kind, params...)` tuple: `("constant", beta)`, `("power", c, a)`, or
/// `("exponential", c, a)`.
#[pyfunction]
#[pyo3(signature = (gamma1, gamma2, rho1, rho2, mu, zeta, lipschitz, horizon=1e6))]
#[allow(clippy::too_many_arguments)]
fn settling_bound_tv(
    gamma1: Vec<f64>,
    gamma2: Vec<f64>,
    rho1: f64,
    rho2: f64,
    mu: f64,
    zeta: f64,
    lipschitz: f64,
    horizon: f64,
) -> PyResult<HashMap<String, f64>> {
    // Numeric encoding of the schedule: [0, beta] constant,
    // [1, c, a] power, [2, c, a] exponential.
    let decode = |v: &[f64]| -> PyResult<proxflow::dynamics::ScheduleKind> {
        match v {
            [tag, beta] if *tag == 0.0 => {
                Ok(proxflow::dynamics::ScheduleKind::Constant { beta: *beta })
            }
            [tag, c, a] if *tag == 1.0 => {
                Ok(proxflow::dynamics::ScheduleKind::Power { c: *c, a: *a })
            }
            [tag, c, a] if *tag == 2.0 => {
                Ok(proxflow::dynamics::ScheduleKind::Exponential { c: *c, a: *a })
            }
            _ => Err(PyValueError::new_err(
                "schedule must be [0, beta], [1, c, a], or [2, c, a]",
            )),
        }
    };
    let g = GainSchedule {
        gamma1: decode(&gamma1)?,
        gamma2: decode(&gamma2)?,
        gamma3: proxflow::dynamics::ScheduleKind::Constant { beta: 0.0 },
        rho1,
        rho2,
        deadzone: proxflow::dynamics::DEFAULT_DEADZONE,
        t0: 0.0,
    };
    let cert =
        certificates::settling_bound_tv(&g, mu, zeta, lipschitz, horizon).map_err(to_py_err)?;
    Ok(certificate_to_dict(&cert))
}

fn parse_kind(
    kind: &str,
    weight: Option<f64>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    center: Option<Vec<f64>>,
    radius: Option<f64>,
) -> PyResult<ProxKind> {
    match kind {
        "zero" => Ok(ProxKind::Zero),
        "indicator_nonneg" => Ok(ProxKind::IndicatorNonneg),
        "indicator_box" => match (lo, hi) {
            (Some(lo), Some(hi)) => Ok(ProxKind::IndicatorBox { lo, hi }),
            _ => Err(PyValueError::new_err("indicator_box needs lo and hi")),
        },
        "indicator_ball" => match (center, radius) {
            (Some(center), Some(radius)) => Ok(ProxKind::IndicatorBall { center, radius }),
            _ => Err(PyValueError::new_err(
                "indicator_ball needs center and radius",
            )),
        },
        "l1" => Ok(ProxKind::L1 {
            weight: weight.unwrap_or(1.0),
        }),
        other => Err(PyValueError::new_err(format!(
            "unknown prox kind '{other}'"
        ))),
    }
}

/// Apply a proximal operator: the minimizer of `psi(z) + ||v - z||^2 / (2 mu)`.
#[pyfunction]
#[pyo3(signature = (kind, v, mu, weight=None, lo=None, hi=None, center=None, radius=None))]
#[allow(clippy::too_many_arguments)]
fn prox(
    kind: &str,
    v: Vec<f64>,
    mu: f64,
    weight: Option<f64>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    center: Option<Vec<f64>>,
    radius: Option<f64>,
) -> PyResult<Vec<f64>> {
    let k = parse_kind(kind, weight, lo, hi, center, radius)?;
    prox_apply(&k, &v, mu).map_err(to_py_err)
}

/// Run the full benchmark reproduction into `output_dir`; returns a summary
/// dict with per-trajectory settling times.
#[pyfunction]
fn run_example1(output_dir: &str) -> PyResult<HashMap<String, f64>> {
    let report =
        proxflow::harness::run_example1(std::path::Path::new(output_dir)).map_err(to_py_err)?;
    let mut out = HashMap::new();
    out.insert(
        "all_settled".into(),
        if report.all_settled { 1.0 } else { 0.0 },
    );
    for o in &report.outcomes {
        if let Some(t) = o.settled_at {
            out.insert(format!("{}_settled_at", o.label), t);
        }
        if let Some(e) = o.final_error {
            out.insert(format!("{}_final_error", o.label), e);
        }
    }
    Ok(out)
}

#[pymodule]
fn proxflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(forward_backward_solve, m)?)?;
    m.add_function(wrap_pyfunction!(detect_settling, m)?)?;
    m.add_function(wrap_pyfunction!(contraction_factor, m)?)?;
    m.add_function(wrap_pyfunction!(settling_bound_const, m)?)?;
    m.add_function(wrap_pyfunction!(settling_bound_tv, m)?)?;
    m.add_function(wrap_pyfunction!(prox, m)?)?;
    m.add_function(wrap_pyfunction!(run_example1, m)?)?;
    Ok(())
}
