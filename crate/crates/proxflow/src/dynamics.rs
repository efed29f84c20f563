//! Right-hand sides of the proximal dynamical systems.
//!
//! All models share the natural residual `phi(w) = w - prox(w - mu F(w))` and
//! differ only in the scalar gain applied to it:
//!
//! ```text
//! dw/dt = -e(t, w) phi(w),
//! e = gamma1(t) / ||phi||^(1-rho1) + gamma2(t) / ||phi||^(1-rho2) + gamma3(t) / ||phi||
//! ```
//!
//! with `rho1 in (0, 1)` and `rho2 > 1`. The gain is singular at the solution
//! set, so a dead zone of radius `deadzone` on `||phi||` clamps the right-hand
//! side to zero near the equilibrium; this makes the ODE well posed at the cost
//! of an O(deadzone) accuracy floor.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::problem::MviProblem;
use crate::rng::{random_orthogonal, Rng};
use crate::{Error, Result};

/// Default residual-norm radius below which the dynamics are clamped to zero.
pub const DEFAULT_DEADZONE: f64 = 1e-9;

/// Scalar time profile for a gain coefficient. Elapsed time is measured from
/// the schedule's `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleKind {
    Constant {
        beta: f64,
    },
    /// c * (1 + elapsed)^a
    Power {
        c: f64,
        a: f64,
    },
    /// c * exp(a * elapsed)
    Exponential {
        c: f64,
        a: f64,
    },
}

impl ScheduleKind {
    pub fn constant(beta: f64) -> Self {
        ScheduleKind::Constant { beta }
    }

    pub fn value(&self, elapsed: f64) -> f64 {
        match self {
            ScheduleKind::Constant { beta } => *beta,
            ScheduleKind::Power { c, a } => c * (1.0 + elapsed).powf(*a),
            ScheduleKind::Exponential { c, a } => c * (a * elapsed).exp(),
        }
    }

    /// Closed-form integral over [0, elapsed].
    pub fn integral(&self, elapsed: f64) -> f64 {
        match self {
            ScheduleKind::Constant { beta } => beta * elapsed,
            ScheduleKind::Power { c, a } => {
                if (a + 1.0).abs() < 1e-14 {
                    c * (1.0 + elapsed).ln()
                } else {
                    c * ((1.0 + elapsed).powf(a + 1.0) - 1.0) / (a + 1.0)
                }
            }
            ScheduleKind::Exponential { c, a } => {
                if a.abs() < 1e-14 {
                    c * elapsed
                } else {
                    c * ((a * elapsed).exp() - 1.0) / a
                }
            }
        }
    }

    /// `strict` requires positivity on all of [t0, inf), as certificates do.
    pub fn validate(&self, strict: bool) -> Result<()> {
        let lead = match self {
            ScheduleKind::Constant { beta } => *beta,
            ScheduleKind::Power { c, .. } | ScheduleKind::Exponential { c, .. } => *c,
        };
        if !lead.is_finite() || lead < 0.0 || (strict && lead == 0.0) {
            return Err(Error::InvalidParameter(
                "schedule coefficient must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Time-varying gain coefficients and exponents of the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    /// Coefficient of the fractional-power term (drives extinction near the solution).
    pub gamma1: ScheduleKind,
    /// Coefficient of the superlinear term (crushes large residuals).
    pub gamma2: ScheduleKind,
    /// Coefficient of the normalized (unit-direction) term; may be zero.
    pub gamma3: ScheduleKind,
    /// Exponent in (0, 1) of the fractional term.
    pub rho1: f64,
    /// Exponent > 1 of the superlinear term.
    pub rho2: f64,
    /// Residual-norm dead-zone radius.
    pub deadzone: f64,
    /// Time origin of the schedules.
    pub t0: f64,
}

impl GainSchedule {
    /// Constant coefficients, the projection-model parameterization.
    pub fn constant(b1: f64, b2: f64, b3: f64, rho1: f64, rho2: f64) -> Result<Self> {
        let g = GainSchedule {
            gamma1: ScheduleKind::constant(b1),
            gamma2: ScheduleKind::constant(b2),
            gamma3: ScheduleKind::constant(b3),
            rho1,
            rho2,
            deadzone: DEFAULT_DEADZONE,
            t0: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_deadzone(mut self, deadzone: f64) -> Result<Self> {
        if !(deadzone > 0.0) {
            return Err(Error::InvalidParameter("deadzone must be positive".into()));
        }
        self.deadzone = deadzone;
        self.validate()?;
        Ok(self)
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho1 > 0.0 && self.rho1 < 1.0) {
            return Err(Error::InvalidParameter("rho1 must lie in (0, 1)".into()));
        }
        if !(self.rho2 > 1.0) {
            return Err(Error::InvalidParameter("rho2 must exceed 1".into()));
        }
        if !(self.deadzone > 0.0) {
            return Err(Error::InvalidParameter("deadzone must be positive".into()));
        }
        self.gamma1.validate(false)?;
        self.gamma2.validate(false)?;
        self.gamma3.validate(false)?;
        Ok(())
    }

    pub fn values_at(&self, t: f64) -> (f64, f64, f64) {
        let elapsed = t - self.t0;
        (
            self.gamma1.value(elapsed),
            self.gamma2.value(elapsed),
            self.gamma3.value(elapsed),
        )
    }
}

/// Which gain terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// All three terms.
    Full,
    /// Only the normalized term (gamma1 = gamma2 = 0).
    Normalized,
    /// Only the fractional-power term (gamma2 = gamma3 = 0).
    FractionalOnly,
}

/// Norm-bounded disturbance models; all satisfy
/// `||D(t, w)|| <= q ||w - w*||` by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    None,
    /// q times a fixed random rotation of (w - w*); the bound holds with equality.
    Proportional {
        q: f64,
        direction_seed: u64,
    },
    /// amplitude * sin(frequency * (t - t0)) * (w - w*); growth constant = amplitude.
    SinusoidalBounded {
        amplitude: f64,
        frequency: f64,
    },
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Proportional { q, .. } => {
                if !(*q > 0.0) {
                    return Err(Error::InvalidParameter(
                        "disturbance growth constant q must be positive".into(),
                    ));
                }
                Ok(())
            }
            DisturbanceSpec::SinusoidalBounded {
                amplitude,
                frequency,
            } => {
                if !(*amplitude > 0.0) || !frequency.is_finite() {
                    return Err(Error::InvalidParameter(
                        "sinusoidal disturbance needs positive amplitude and finite frequency"
                            .into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The constant q in `||D|| <= q ||w - w*||`.
    pub fn growth_constant(&self) -> f64 {
        match self {
            DisturbanceSpec::None => 0.0,
            DisturbanceSpec::Proportional { q, .. } => *q,
            DisturbanceSpec::SinusoidalBounded { amplitude, .. } => *amplitude,
        }
    }
}

enum DisturbanceModel {
    None,
    Rotated {
        q: f64,
        rotation: Vec<Vec<f64>>,
    },
    Sinusoidal {
        amplitude: f64,
        frequency: f64,
        t0: f64,
    },
}

/// Realized disturbance, anchored at the problem's known solution.
pub struct Disturbance {
    model: DisturbanceModel,
    w_star: Vec<f64>,
}

impl Disturbance {
    pub fn build(spec: &DisturbanceSpec, p: &MviProblem, t0: f64) -> Result<Self> {
        spec.validate()?;
        let w_star = match spec {
            DisturbanceSpec::None => vec![0.0; p.dim()],
            _ => p
                .known_solution()
                .ok_or(Error::MissingKnownSolution)?
                .to_vec(),
        };
        let model = match spec {
            DisturbanceSpec::None => DisturbanceModel::None,
            DisturbanceSpec::Proportional { q, direction_seed } => {
                let mut rng = Rng::new(*direction_seed);
                DisturbanceModel::Rotated {
                    q: *q,
                    rotation: random_orthogonal(&mut rng, p.dim()),
                }
            }
            DisturbanceSpec::SinusoidalBounded {
                amplitude,
                frequency,
            } => DisturbanceModel::Sinusoidal {
                amplitude: *amplitude,
                frequency: *frequency,
                t0,
            },
        };
        Ok(Disturbance { model, w_star })
    }

    pub fn is_none(&self) -> bool {
        matches!(self.model, DisturbanceModel::None)
    }

    pub fn eval(&self, t: f64, w: &[f64]) -> Vec<f64> {
        match &self.model {
            DisturbanceModel::None => vec![0.0; w.len()],
            DisturbanceModel::Rotated { q, rotation } => {
                let delta = linalg::sub(w, &self.w_star);
                linalg::scaled(*q, &linalg::matvec(rotation, &delta))
            }
            DisturbanceModel::Sinusoidal {
                amplitude,
                frequency,
                t0,
            } => {
                let s = amplitude * (frequency * (t - t0)).sin();
                w.iter()
                    .zip(&self.w_star)
                    .map(|(wi, si)| s * (wi - si))
                    .collect()
            }
        }
    }
}

/// Natural residual `phi(w) = w - prox(w - mu F(w))`.
pub fn residual(p: &MviProblem, w: &[f64]) -> Result<Vec<f64>> {
    let fw = p.evaluate(w)?;
    let mut inner = w.to_vec();
    linalg::axpy(-p.mu(), &fw, &mut inner);
    let h = p.prox_apply(&inner)?;
    Ok(linalg::sub(w, &h))
}

pub fn residual_norm(p: &MviProblem, w: &[f64]) -> Result<f64> {
    Ok(linalg::norm(&residual(p, w)?))
}

/// Unit direction of the residual; only defined outside the dead zone.
pub fn unit_direction(phi: &[f64], deadzone: f64) -> Result<Vec<f64>> {
    let n = linalg::norm(phi);
    if n <= deadzone {
        return Err(Error::InsideDeadzone);
    }
    Ok(linalg::scaled(1.0 / n, phi))
}

/// Scalar gain at residual norm `phi_norm`; zero inside the dead zone.
pub fn gain(g: &GainSchedule, t: f64, phi_norm: f64) -> f64 {
    if phi_norm <= g.deadzone {
        return 0.0;
    }
    let (g1, g2, g3) = g.values_at(t);
    gain_from_values(phi_norm, g1, g2, g3, g.rho1, g.rho2)
}

fn gain_from_values(n: f64, g1: f64, g2: f64, g3: f64, rho1: f64, rho2: f64) -> f64 {
    g1 * n.powf(rho1 - 1.0) + g2 * n.powf(rho2 - 1.0) + g3 / n
}

#[allow(clippy::too_many_arguments)]
fn rhs_from_values(
    p: &MviProblem,
    w: &[f64],
    deadzone: f64,
    g1: f64,
    g2: f64,
    g3: f64,
    rho1: f64,
    rho2: f64,
) -> Result<Vec<f64>> {
    let phi = residual(p, w)?;
    let n = linalg::norm(&phi);
    if n <= deadzone {
        return Ok(vec![0.0; w.len()]);
    }
    let e = gain_from_values(n, g1, g2, g3, rho1, rho2);
    Ok(linalg::scaled(-e, &phi))
}

/// Full time-varying model: `dw/dt = -e(t, w) phi(w)`.
pub fn rhs_time_varying(p: &MviProblem, g: &GainSchedule, t: f64, w: &[f64]) -> Result<Vec<f64>> {
    let (g1, g2, g3) = g.values_at(t);
    rhs_from_values(p, w, g.deadzone, g1, g2, g3, g.rho1, g.rho2)
}

/// Reduced models obtained by zeroing gain terms.
pub fn rhs_variant(
    variant: Variant,
    p: &MviProblem,
    g: &GainSchedule,
    t: f64,
    w: &[f64],
) -> Result<Vec<f64>> {
    let (g1, g2, g3) = g.values_at(t);
    let (g1, g2, g3) = match variant {
        Variant::Full => (g1, g2, g3),
        Variant::Normalized => (0.0, 0.0, g3),
        Variant::FractionalOnly => (g1, 0.0, 0.0),
    };
    rhs_from_values(p, w, g.deadzone, g1, g2, g3, g.rho1, g.rho2)
}

/// Constant-gain projection model. Requires the prox to be an indicator
/// (metric projection); other kinds signal misuse of the special case.
pub fn rhs_constant_gain(
    p: &MviProblem,
    beta1: f64,
    beta2: f64,
    beta3: f64,
    rho1: f64,
    rho2: f64,
    w: &[f64],
) -> Result<Vec<f64>> {
    if !p.prox().is_indicator() {
        return Err(Error::NonIndicatorProx);
    }
    rhs_from_values(p, w, DEFAULT_DEADZONE, beta1, beta2, beta3, rho1, rho2)
}

/// Disturbed model: time-varying right-hand side plus `D(t, w)`.
pub fn rhs_disturbed(
    p: &MviProblem,
    g: &GainSchedule,
    d: &Disturbance,
    t: f64,
    w: &[f64],
) -> Result<Vec<f64>> {
    let base = rhs_time_varying(p, g, t, w)?;
    if d.is_none() {
        return Ok(base);
    }
    Ok(linalg::add(&base, &d.eval(t, w)))
}

/// The same dynamics written as a unit search direction scaled by an adaptive
/// stepsize:
///
/// ```text
/// dw/dt = -lambda(t, w) kappa(w),
/// lambda = gamma1 [ ||phi||^rho1 (1 + (gamma2/gamma1) ||phi||^(rho2-rho1)) + gamma3/gamma1 ]
/// ```
///
/// Must agree with [`rhs_time_varying`] to roundoff; kept as an independent
/// algebraic route for cross-checks. Requires `gamma1(t) > 0`.
pub fn rhs_via_stepsize(p: &MviProblem, g: &GainSchedule, t: f64, w: &[f64]) -> Result<Vec<f64>> {
    let phi = residual(p, w)?;
    let n = linalg::norm(&phi);
    if n <= g.deadzone {
        return Ok(vec![0.0; w.len()]);
    }
    let (g1, g2, g3) = g.values_at(t);
    if !(g1 > 0.0) {
        return Err(Error::InvalidParameter(
            "stepsize decomposition requires gamma1 > 0".into(),
        ));
    }
    let kappa = linalg::scaled(1.0 / n, &phi);
    let lambda = g1 * (n.powf(g.rho1) * (1.0 + (g2 / g1) * n.powf(g.rho2 - g.rho1)) + g3 / g1);
    Ok(linalg::scaled(-lambda, &kappa))
}
