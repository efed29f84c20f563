//! Problem container and sampling-based probes for the standing regularity
//! assumptions (strong monotonicity modulus, Lipschitz constant, and the
//! step-size condition `mu L^2 < 2 zeta` that makes the prox step a
//! contraction).

use std::fmt;
use std::sync::Arc;

use crate::linalg;
use crate::prox::ProxOp;
use crate::rng::Rng;
use crate::{Error, Result};

pub type OperatorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Mixed variational inequality data: find `w*` with
/// `<F(w*), y - w*> + psi(y) - psi(w*) >= 0` for all `y`, where `F` is the
/// operator and `psi` is carried through its proximal map.
///
/// Immutable after construction and cheap to clone (the operator is shared).
#[derive(Clone)]
pub struct MviProblem {
    dim: usize,
    operator: OperatorFn,
    prox: ProxOp,
    mu: f64,
    zeta: Option<f64>,
    lipschitz: Option<f64>,
    known_solution: Option<Vec<f64>>,
}

impl fmt::Debug for MviProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MviProblem")
            .field("dim", &self.dim)
            .field("prox", &self.prox)
            .field("mu", &self.mu)
            .field("zeta", &self.zeta)
            .field("lipschitz", &self.lipschitz)
            .field("known_solution", &self.known_solution)
            .finish_non_exhaustive()
    }
}

impl MviProblem {
    pub fn new(dim: usize, operator: OperatorFn, prox: impl Into<ProxOp>, mu: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be positive".into()));
        }
        let prox = prox.into();
        prox.validate(dim)?;
        Ok(MviProblem {
            dim,
            operator,
            prox,
            mu,
            zeta: None,
            lipschitz: None,
            known_solution: None,
        })
    }

    pub fn with_constants(mut self, zeta: Option<f64>, lipschitz: Option<f64>) -> Result<Self> {
        if let Some(z) = zeta {
            if !(z > 0.0) {
                return Err(Error::InvalidParameter("zeta must be positive".into()));
            }
        }
        if let Some(l) = lipschitz {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter("lipschitz must be positive".into()));
            }
        }
        self.zeta = zeta;
        self.lipschitz = lipschitz;
        Ok(self)
    }

    pub fn with_known_solution(mut self, w_star: Vec<f64>) -> Result<Self> {
        if w_star.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: w_star.len(),
            });
        }
        self.known_solution = Some(w_star);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn zeta(&self) -> Option<f64> {
        self.zeta
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn known_solution(&self) -> Option<&[f64]> {
        self.known_solution.as_deref()
    }

    pub fn prox(&self) -> &ProxOp {
        &self.prox
    }

    /// Evaluate the operator. Deterministic for identical inputs; rejects
    /// dimension mismatches and non-finite outputs.
    pub fn evaluate(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: w.len(),
            });
        }
        let out = (self.operator)(w);
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: out.len(),
            });
        }
        if !linalg::all_finite(&out) {
            return Err(Error::NonFinite {
                context: "operator output",
            });
        }
        Ok(out)
    }

    /// Apply the attached proximal map with the problem's own step.
    pub fn prox_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.prox.apply(v, self.mu)
    }

    /// Apply the attached proximal map with an explicit step.
    pub fn prox_apply_with(&self, v: &[f64], mu: f64) -> Result<Vec<f64>> {
        self.prox.apply(v, mu)
    }
}

/// Probe results and the derived assumption flags.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Sampled lower estimate of the strong-monotonicity modulus.
    pub zeta_estimate: f64,
    /// Sampled lower estimate of the Lipschitz constant.
    pub lipschitz_estimate: f64,
    /// mu L^2 < 2 zeta with the effective constants.
    pub a3_satisfied: bool,
    /// 1 + 2 mu zeta - mu^2 L^2 > 0 with the effective constants.
    pub xi_real: bool,
    pub samples_used: usize,
    /// Set when the probes witness a violation of user-supplied constants.
    pub contradicts_supplied: bool,
}

const RESAMPLE_LIMIT: usize = 100;

fn sample_pair(rng: &mut Rng, dim: usize, radius: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let origin = vec![0.0; dim];
    for _ in 0..RESAMPLE_LIMIT {
        let w = rng.in_ball(&origin, radius);
        let y = rng.in_ball(&origin, radius);
        if linalg::distance(&w, &y) > 1e-12 {
            return Ok((w, y));
        }
    }
    Err(Error::DegenerateSampling)
}

fn validate_probe_args(n_samples: usize, radius: f64) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter(
            "probes need at least 2 sample pairs".into(),
        ));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(
            "probe radius must be positive".into(),
        ));
    }
    Ok(())
}

/// Sampled lower estimate of the monotonicity modulus:
/// min over pairs of `<F(w) - F(y), w - y> / ||w - y||^2`.
pub fn probe_strong_monotonicity(
    p: &MviProblem,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    validate_probe_args(n_samples, radius)?;
    let mut rng = Rng::new(seed);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..n_samples {
        let (w, y) = sample_pair(&mut rng, p.dim, radius)?;
        let fw = p.evaluate(&w)?;
        let fy = p.evaluate(&y)?;
        let diff = linalg::sub(&w, &y);
        let ratio = linalg::dot(&linalg::sub(&fw, &fy), &diff) / linalg::dot(&diff, &diff);
        min_ratio = min_ratio.min(ratio);
    }
    Ok(min_ratio)
}

/// Sampled estimate of the Lipschitz constant:
/// max over pairs of `||F(w) - F(y)|| / ||w - y||`.
pub fn probe_lipschitz(p: &MviProblem, n_samples: usize, radius: f64, seed: u64) -> Result<f64> {
    validate_probe_args(n_samples, radius)?;
    let mut rng = Rng::new(seed);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..n_samples {
        let (w, y) = sample_pair(&mut rng, p.dim, radius)?;
        let fw = p.evaluate(&w)?;
        let fy = p.evaluate(&y)?;
        let ratio = linalg::distance(&fw, &fy) / linalg::distance(&w, &y);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(max_ratio)
}

/// Tolerance used when comparing probe estimates against supplied constants.
const CONTRADICTION_TOL: f64 = 1e-6;

/// Fill the assumption flags of a report. Supplied constants win over probe
/// estimates for the flag computation; a probe that witnesses a violation of
/// the supplied constants sets `contradicts_supplied` instead of overriding
/// them. Never fails: simulation is allowed even with both flags false, but
/// certificate emission refuses separately.
pub fn validate_assumptions(p: &MviProblem, mut report: AssumptionReport) -> AssumptionReport {
    let zeta = p.zeta.unwrap_or(report.zeta_estimate);
    let lipschitz = p.lipschitz.unwrap_or(report.lipschitz_estimate);
    let mu = p.mu;
    report.a3_satisfied = zeta > 0.0 && lipschitz > 0.0 && mu * lipschitz * lipschitz < 2.0 * zeta;
    report.xi_real = 1.0 + 2.0 * mu * zeta - mu * mu * lipschitz * lipschitz > 0.0;
    let zeta_contradicted = match p.zeta {
        Some(z) => report.zeta_estimate < z - CONTRADICTION_TOL,
        None => false,
    };
    let lipschitz_contradicted = match p.lipschitz {
        Some(l) => report.lipschitz_estimate > l + CONTRADICTION_TOL,
        None => false,
    };
    report.contradicts_supplied = zeta_contradicted || lipschitz_contradicted;
    report
}

/// Run both probes and derive the flags in one call.
pub fn assumption_report(
    p: &MviProblem,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<AssumptionReport> {
    let zeta_estimate = probe_strong_monotonicity(p, n_samples, radius, seed)?;
    let lipschitz_estimate = probe_lipschitz(p, n_samples, radius, seed ^ 0x9e3779b97f4a7c15)?;
    let report = AssumptionReport {
        zeta_estimate,
        lipschitz_estimate,
        a3_satisfied: false,
        xi_real: false,
        samples_used: n_samples,
        contradicts_supplied: false,
    };
    Ok(validate_assumptions(p, report))
}

/// Problem with a linear operator `w -> A w + b`; the workhorse for synthetic
/// instances and inline configuration.
pub fn linear_problem(
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
    prox: impl Into<ProxOp>,
    mu: f64,
) -> Result<MviProblem> {
    let dim = offset.len();
    if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: matrix.len(),
        });
    }
    let operator: OperatorFn = Arc::new(move |w: &[f64]| {
        let mut out = linalg::matvec(&matrix, w);
        for (o, b) in out.iter_mut().zip(&offset) {
            *o += b;
        }
        out
    });
    MviProblem::new(dim, operator, prox, mu)
}
