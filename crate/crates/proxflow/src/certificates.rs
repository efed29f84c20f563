//! Contraction constants and settling-time certificates.
//!
//! All bounds rest on the contraction factor of the prox step,
//! `xi = 1 / sqrt(1 + 2 mu zeta - mu^2 L^2)`, which lies in (0, 1) exactly
//! when the step condition `mu L^2 < 2 zeta` holds. When that fails the
//! certificate functions refuse with a typed error rather than emitting a
//! number; simulation remains allowed, certification does not.
//!
//! Three certificate kinds are produced:
//! - time-varying: invert the gain integrals `F_i(t) = int gamma_i` to bound
//!   the settling time of the full model;
//! - constant-gain: the closed-form bound of the projection model, reported
//!   at the initial-condition-independent lower endpoint of the `N2` interval
//!   (a certificate must not depend on a favorable reading), with the upper
//!   endpoint kept as an optimistic diagnostic;
//! - robust: a-posteriori bound along a realized disturbed trajectory, since
//!   the disturbed integrand depends on the residual along the run.

use std::fmt;

use crate::dynamics::GainSchedule;
use crate::integrator::Trajectory;
use crate::{Error, Result};

/// Horizon used to stand in for infinite gain integrals.
pub const DEFAULT_HORIZON: f64 = 1e6;

/// Bounds larger than this are reported as infeasible rather than as numbers.
pub const BOUND_CAP: f64 = 1e12;

const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    TimeVarying,
    ConstantGain,
    Robust,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CertificateKind::TimeVarying => "time_varying",
            CertificateKind::ConstantGain => "constant_gain",
            CertificateKind::Robust => "robust",
        };
        f.write_str(s)
    }
}

/// Settling-time certificate. `bound_t` is present exactly when `feasible`.
#[derive(Debug, Clone)]
pub struct SettlingCertificate {
    pub kind: CertificateKind,
    /// Contraction factor of the prox step, in (0, 1).
    pub xi: f64,
    /// Cap on the residual-to-error ratio, `4 zeta / (4 zeta - mu L^2)` in (1, 2).
    pub lambda_cap: f64,
    /// Lyapunov exponent of the fractional term, (1 + rho1) / 2 in (0.5, 1).
    pub p1: f64,
    /// Lyapunov exponent of the superlinear term, (1 + rho2) / 2 > 1.
    pub p2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub feasible: bool,
    /// Absolute settling time bound (measured from the schedule's t0).
    pub bound_t: Option<f64>,
    /// Constant-gain kind only: bound at the upper endpoint of the N2
    /// interval, which uses the initial residual.
    pub optimistic_bound_t: Option<f64>,
    /// Constant-gain kind only: (N1, lower N2, upper N2).
    pub n_constants: Option<(f64, f64, f64)>,
    /// Set when infeasibility may stem from truncating the gain integrals at
    /// the horizon rather than from the schedule itself.
    pub horizon_limited: bool,
    /// Robust kind only: the bound is valid for the audited trajectory, not
    /// globally (its integrand depends on the realized residuals).
    pub trajectory_conditional: bool,
}

impl fmt::Display for SettlingCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind={}", self.kind)?;
        writeln!(f, "xi={:.12}", self.xi)?;
        writeln!(f, "lambda_cap={:.12}", self.lambda_cap)?;
        writeln!(f, "p1={:.12}", self.p1)?;
        writeln!(f, "p2={:.12}", self.p2)?;
        writeln!(f, "theta1={:.12}", self.theta1)?;
        writeln!(f, "theta2={:.12}", self.theta2)?;
        writeln!(f, "feasible={}", self.feasible)?;
        match self.bound_t {
            Some(b) => writeln!(f, "bound_t={b:.12}")?,
            None => writeln!(f, "bound_t=none")?,
        }
        if let Some(b) = self.optimistic_bound_t {
            writeln!(f, "optimistic_bound_t={b:.12}")?;
        }
        if let Some((n1, n2_lo, n2_hi)) = self.n_constants {
            writeln!(f, "n1={n1:.12}")?;
            writeln!(f, "n2_lower={n2_lo:.12}")?;
            writeln!(f, "n2_upper={n2_hi:.12}")?;
        }
        writeln!(f, "horizon_limited={}", self.horizon_limited)?;
        write!(f, "trajectory_conditional={}", self.trajectory_conditional)
    }
}

fn validate_constants(mu: f64, zeta: f64, lipschitz: f64) -> Result<()> {
    if !(mu > 0.0) || !(zeta > 0.0) || !(lipschitz > 0.0) {
        return Err(Error::InvalidParameter(
            "mu, zeta, lipschitz must all be positive".into(),
        ));
    }
    Ok(())
}

/// Contraction factor `1 / sqrt(1 + 2 mu zeta - mu^2 L^2)`. Refuses when the
/// radicand is nonpositive (the step condition fails badly enough that the
/// factor is not even real).
pub fn contraction_factor(mu: f64, zeta: f64, lipschitz: f64) -> Result<f64> {
    validate_constants(mu, zeta, lipschitz)?;
    let radicand = 1.0 + 2.0 * mu * zeta - mu * mu * lipschitz * lipschitz;
    if !(radicand > 0.0) {
        return Err(Error::ContractionUnavailable {
            detail: format!("radicand 1 + 2*mu*zeta - mu^2*L^2 = {radicand:.6e} is not positive"),
        });
    }
    Ok(1.0 / radicand.sqrt())
}

/// Residual amplification cap `4 zeta / (4 zeta - mu L^2)`; lies in (1, 2)
/// under the step condition `mu L^2 < 2 zeta`.
pub fn residual_cap(mu: f64, zeta: f64, lipschitz: f64) -> Result<f64> {
    validate_constants(mu, zeta, lipschitz)?;
    let denom = 4.0 * zeta - mu * lipschitz * lipschitz;
    if !(denom > 0.0) {
        return Err(Error::ContractionUnavailable {
            detail: format!("4*zeta - mu*L^2 = {denom:.6e} is not positive"),
        });
    }
    Ok(4.0 * zeta / denom)
}

#[derive(Debug, Clone, Copy)]
pub struct ThetaConstants {
    pub theta1: f64,
    pub theta2: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Lyapunov decrease constants of the undisturbed analysis:
/// `p1 = (1+rho1)/2`, `p2 = (1+rho2)/2`, `theta1 = 2^p1 (1-xi)`,
/// `theta2 = 2^p2 (1-xi)^rho2`.
pub fn theta_constants(rho1: f64, rho2: f64, xi: f64) -> Result<ThetaConstants> {
    if !(rho1 > 0.0 && rho1 < 1.0) {
        return Err(Error::InvalidParameter("rho1 must lie in (0, 1)".into()));
    }
    if !(rho2 > 1.0) {
        return Err(Error::InvalidParameter("rho2 must exceed 1".into()));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::ContractionUnavailable {
            detail: format!("xi = {xi:.6e} outside (0, 1)"),
        });
    }
    let p1 = 0.5 * (1.0 + rho1);
    let p2 = 0.5 * (1.0 + rho2);
    Ok(ThetaConstants {
        theta1: 2f64.powf(p1) * (1.0 - xi),
        theta2: 2f64.powf(p2) * (1.0 - xi).powf(rho2),
        p1,
        p2,
    })
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, frm, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, 48)
}

/// Invert a nondecreasing function by bisection, refined to machine precision.
/// Requires `f(lo) <= target <= f(hi)`.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, target: f64) -> f64 {
    let mut lo = lo;
    let mut hi = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct TvBoundInputs {
    xi: f64,
    lambda_cap: f64,
    theta: ThetaConstants,
}

fn tv_bound_from_integrals<F1, F2>(
    inputs: TvBoundInputs,
    f1: F1,
    f2: F2,
    t0: f64,
    horizon: f64,
) -> Result<SettlingCertificate>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    if !(horizon > t0) {
        return Err(Error::InvalidParameter("horizon must exceed t0".into()));
    }
    let th = inputs.theta;
    let mut cert = SettlingCertificate {
        kind: CertificateKind::TimeVarying,
        xi: inputs.xi,
        lambda_cap: inputs.lambda_cap,
        p1: th.p1,
        p2: th.p2,
        theta1: th.theta1,
        theta2: th.theta2,
        feasible: false,
        bound_t: None,
        optimistic_bound_t: None,
        n_constants: None,
        horizon_limited: false,
        trajectory_conditional: false,
    };
    if 1.0 - th.p1 < DEGENERACY_EPS || th.p2 - 1.0 < DEGENERACY_EPS {
        return Ok(cert);
    }
    let c2 = 1.0 / (th.theta2 * (th.p2 - 1.0));
    let c1 = 1.0 / (th.theta1 * (1.0 - th.p1));
    if !c1.is_finite() || !c2.is_finite() {
        return Ok(cert);
    }
    // First feasibility condition: the superlinear mass must exceed c2.
    if !(f2(horizon) > c2) {
        cert.horizon_limited = true;
        return Ok(cert);
    }
    let t_a = invert_increasing(&f2, t0, horizon, c2);
    // Second condition: enough fractional-term mass after t_a.
    let target = f1(t_a) + c1;
    if !(f1(horizon) > target) {
        cert.horizon_limited = true;
        return Ok(cert);
    }
    let bound = invert_increasing(&f1, t0, horizon, target);
    cert.feasible = true;
    cert.bound_t = Some(bound);
    Ok(cert)
}

/// Settling-time bound of the time-varying model. The gain integrals use the
/// closed-form antiderivatives of the schedule kinds; infinite integrals are
/// approximated at `horizon`, and infeasibility that may be due to that
/// truncation is flagged as horizon-limited.
pub fn settling_bound_tv(
    g: &GainSchedule,
    mu: f64,
    zeta: f64,
    lipschitz: f64,
    horizon: f64,
) -> Result<SettlingCertificate> {
    g.validate()?;
    g.gamma1.validate(true)?;
    g.gamma2.validate(true)?;
    let xi = contraction_factor(mu, zeta, lipschitz)?;
    let lambda_cap = residual_cap(mu, zeta, lipschitz)?;
    let theta = theta_constants(g.rho1, g.rho2, xi)?;
    let t0 = g.t0;
    let f1 = |t: f64| g.gamma1.integral(t - t0);
    let f2 = |t: f64| g.gamma2.integral(t - t0);
    tv_bound_from_integrals(
        TvBoundInputs {
            xi,
            lambda_cap,
            theta,
        },
        f1,
        f2,
        t0,
        horizon,
    )
}

/// Quadrature-backed variant of [`settling_bound_tv`] for arbitrary gain
/// profiles: the integrals are computed by adaptive Simpson (absolute
/// tolerance 1e-12) instead of closed forms.
#[allow(clippy::too_many_arguments)]
pub fn settling_bound_tv_fn<G1, G2>(
    gamma1: G1,
    gamma2: G2,
    rho1: f64,
    rho2: f64,
    mu: f64,
    zeta: f64,
    lipschitz: f64,
    t0: f64,
    horizon: f64,
) -> Result<SettlingCertificate>
where
    G1: Fn(f64) -> f64,
    G2: Fn(f64) -> f64,
{
    let xi = contraction_factor(mu, zeta, lipschitz)?;
    let lambda_cap = residual_cap(mu, zeta, lipschitz)?;
    let theta = theta_constants(rho1, rho2, xi)?;
    let f1 = |t: f64| adaptive_simpson(&gamma1, t0, t, 1e-12);
    let f2 = |t: f64| adaptive_simpson(&gamma2, t0, t, 1e-12);
    tv_bound_from_integrals(
        TvBoundInputs {
            xi,
            lambda_cap,
            theta,
        },
        f1,
        f2,
        t0,
        horizon,
    )
}

/// Closed-form settling bound of the constant-gain projection model:
/// `T <= 1/(N1 (1-p1)) + 1/(N2 (p2-1))` with
/// `N1 = 2^p1 beta1 (1-xi) ((4 zeta - mu L^2) / (4 zeta))^(1-rho1)` and `N2`
/// in an interval whose lower endpoint `2^p2 (1-xi)^rho2 beta2` is reported
/// as the certified bound; the upper endpoint (which adds
/// `beta3 ||phi(w0)||^rho2`) gives the optimistic diagnostic.
#[allow(clippy::too_many_arguments)]
pub fn settling_bound_const(
    beta1: f64,
    beta2: f64,
    beta3: f64,
    rho1: f64,
    rho2: f64,
    xi: f64,
    mu: f64,
    zeta: f64,
    lipschitz: f64,
    phi0_norm: f64,
) -> Result<SettlingCertificate> {
    if !(beta1 > 0.0) || !(beta2 > 0.0) || !(beta3 >= 0.0) {
        return Err(Error::InvalidParameter(
            "beta1, beta2 must be positive and beta3 nonnegative".into(),
        ));
    }
    if !(phi0_norm >= 0.0) {
        return Err(Error::InvalidParameter(
            "phi0_norm must be nonnegative".into(),
        ));
    }
    validate_constants(mu, zeta, lipschitz)?;
    let theta = theta_constants(rho1, rho2, xi)?;
    let lambda_cap = residual_cap(mu, zeta, lipschitz)?;
    let step_margin = (4.0 * zeta - mu * lipschitz * lipschitz) / (4.0 * zeta);
    if !(step_margin > 0.0) {
        return Err(Error::ContractionUnavailable {
            detail: "constant-gain bound needs mu L^2 < 4 zeta".into(),
        });
    }
    let n1 = 2f64.powf(theta.p1) * beta1 * (1.0 - xi) * step_margin.powf(1.0 - rho1);
    let n2_scale = 2f64.powf(theta.p2) * (1.0 - xi).powf(rho2);
    let n2_lower = n2_scale * beta2;
    let n2_upper = n2_scale * (beta2 + beta3 * phi0_norm.powf(rho2));
    let mut cert = SettlingCertificate {
        kind: CertificateKind::ConstantGain,
        xi,
        lambda_cap,
        p1: theta.p1,
        p2: theta.p2,
        theta1: theta.theta1,
        theta2: theta.theta2,
        feasible: false,
        bound_t: None,
        optimistic_bound_t: None,
        n_constants: Some((n1, n2_lower, n2_upper)),
        horizon_limited: false,
        trajectory_conditional: false,
    };
    if 1.0 - theta.p1 < DEGENERACY_EPS || theta.p2 - 1.0 < DEGENERACY_EPS {
        return Ok(cert);
    }
    let term1 = 1.0 / (n1 * (1.0 - theta.p1));
    let term2 = 1.0 / (n2_lower * (theta.p2 - 1.0));
    let bound = term1 + term2;
    if !bound.is_finite() || bound > BOUND_CAP {
        return Ok(cert);
    }
    cert.feasible = true;
    cert.bound_t = Some(bound);
    cert.optimistic_bound_t = Some(term1 + 1.0 / (n2_upper * (theta.p2 - 1.0)));
    Ok(cert)
}

/// Per-sample evaluation of the disturbed-gain condition
/// `min(gamma1(t) / lambda^(1-rho1), gamma2(t) + gamma3(t) ||phi||^rho2) > q`.
#[derive(Debug, Clone)]
pub struct RobustFeasibility {
    pub per_sample: Vec<bool>,
    pub all_hold: bool,
    /// Smallest margin `min(..) - q` over the samples.
    pub min_margin: f64,
}

pub fn robust_feasibility(
    g: &GainSchedule,
    q: f64,
    lambda_cap: f64,
    traj: &Trajectory,
) -> RobustFeasibility {
    let mut per_sample = Vec::with_capacity(traj.len());
    let mut min_margin = f64::INFINITY;
    for (t, r) in traj.times.iter().zip(&traj.residual_norms) {
        let (g1, g2, g3) = g.values_at(*t);
        let branch1 = g1 / lambda_cap.powf(1.0 - g.rho1);
        let branch2 = g2 + g3 * r.powf(g.rho2);
        let margin = branch1.min(branch2) - q;
        min_margin = min_margin.min(margin);
        per_sample.push(margin > 0.0);
    }
    let all_hold = !per_sample.is_empty() && per_sample.iter().all(|b| *b);
    RobustFeasibility {
        per_sample,
        all_hold,
        min_margin,
    }
}

/// A-posteriori settling bound for the disturbed model along a realized
/// trajectory. The disturbed analysis replaces the gain integrands with
/// `(1-xi) gamma1 / lambda^(1-rho1) - q` and
/// `gamma2 + gamma3 ||phi(w(t))||^rho2 - q`, and drops the `(1-xi)` factor
/// from `theta1` (it moved into the first integrand); both are evaluated on
/// the recorded samples by trapezoid, so the certificate is conditional on
/// this trajectory.
pub fn settling_bound_robust(
    g: &GainSchedule,
    q: f64,
    mu: f64,
    zeta: f64,
    lipschitz: f64,
    traj: &Trajectory,
) -> Result<SettlingCertificate> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter("q must be nonnegative".into()));
    }
    g.validate()?;
    let xi = contraction_factor(mu, zeta, lipschitz)?;
    let lambda_cap = residual_cap(mu, zeta, lipschitz)?;
    let base = theta_constants(g.rho1, g.rho2, xi)?;
    // Disturbed-analysis theta1 = 2^p1 (no (1-xi) factor).
    let theta1 = 2f64.powf(base.p1);
    let theta2 = base.theta2;
    let mut cert = SettlingCertificate {
        kind: CertificateKind::Robust,
        xi,
        lambda_cap,
        p1: base.p1,
        p2: base.p2,
        theta1,
        theta2,
        feasible: false,
        bound_t: None,
        optimistic_bound_t: None,
        n_constants: None,
        horizon_limited: false,
        trajectory_conditional: true,
    };
    if 1.0 - base.p1 < DEGENERACY_EPS || base.p2 - 1.0 < DEGENERACY_EPS {
        return Ok(cert);
    }
    let feas = robust_feasibility(g, q, lambda_cap, traj);
    if !feas.all_hold {
        return Ok(cert);
    }
    // Cumulative trapezoid integrals of the disturbed integrands.
    let n = traj.len();
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    let integrands = |i: usize| -> (f64, f64) {
        let t = traj.times[i];
        let r = traj.residual_norms[i];
        let (g1, g2, g3) = g.values_at(t);
        (
            (1.0 - xi) * g1 / lambda_cap.powf(1.0 - g.rho1) - q,
            g2 + g3 * r.powf(g.rho2) - q,
        )
    };
    let (mut prev1, mut prev2) = integrands(0);
    if prev1 <= 0.0 {
        // The disturbed fractional integrand is not positive; no bound.
        return Ok(cert);
    }
    for i in 1..n {
        let (cur1, cur2) = integrands(i);
        if cur1 <= 0.0 || cur2 <= 0.0 {
            return Ok(cert);
        }
        let dt = traj.times[i] - traj.times[i - 1];
        f1[i] = f1[i - 1] + 0.5 * (prev1 + cur1) * dt;
        f2[i] = f2[i - 1] + 0.5 * (prev2 + cur2) * dt;
        prev1 = cur1;
        prev2 = cur2;
    }
    let c2 = 1.0 / (theta2 * (base.p2 - 1.0));
    let c1 = 1.0 / (theta1 * (1.0 - base.p1));
    let invert_pl = |ys: &[f64], target: f64| -> Option<f64> {
        if *ys.last().unwrap() <= target {
            return None;
        }
        let i = ys.iter().position(|y| *y >= target)?;
        if i == 0 {
            return Some(traj.times[0]);
        }
        let (y0, y1) = (ys[i - 1], ys[i]);
        let (t0, t1) = (traj.times[i - 1], traj.times[i]);
        let frac = if y1 > y0 {
            (target - y0) / (y1 - y0)
        } else {
            1.0
        };
        Some(t0 + frac * (t1 - t0))
    };
    let Some(t_a) = invert_pl(&f2, c2) else {
        cert.horizon_limited = true;
        return Ok(cert);
    };
    let f1_at_ta = {
        let i = traj.times.iter().position(|t| *t >= t_a).unwrap_or(n - 1);
        if i == 0 {
            f1[0]
        } else {
            let (t0, t1) = (traj.times[i - 1], traj.times[i]);
            let frac = if t1 > t0 { (t_a - t0) / (t1 - t0) } else { 1.0 };
            f1[i - 1] + frac * (f1[i] - f1[i - 1])
        }
    };
    let Some(bound) = invert_pl(&f1, f1_at_ta + c1) else {
        cert.horizon_limited = true;
        return Ok(cert);
    };
    cert.feasible = true;
    cert.bound_t = Some(bound);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ScheduleKind;
    use crate::integrator::TerminationReason;

    #[test]
    fn contraction_factor_values() {
        // mu = 0.1, zeta = 1, L = 1 -> 1/sqrt(1.19)
        let xi = contraction_factor(0.1, 1.0, 1.0).unwrap();
        assert!((xi - 1.0 / 1.19_f64.sqrt()).abs() < 1e-15);
        assert!((xi - 0.91670).abs() < 1e-5);
        // mu -> 0 gives xi -> 1.
        let xi0 = contraction_factor(1e-12, 1.0, 1.0).unwrap();
        assert!((xi0 - 1.0).abs() < 1e-9);
        // The example-scale violating constants refuse.
        assert!(matches!(
            contraction_factor(0.5, 1.2679, 5.7321),
            Err(Error::ContractionUnavailable { .. })
        ));
    }

    #[test]
    fn residual_cap_values() {
        let lam = residual_cap(0.1, 1.0, 1.0).unwrap();
        assert!((lam - 4.0 / 3.9).abs() < 1e-15);
        let lam0 = residual_cap(1e-12, 1.0, 1.0).unwrap();
        assert!((lam0 - 1.0).abs() < 1e-9);
        // Boundary 2 zeta = mu L^2 gives exactly 2.
        let lam2 = residual_cap(1.0, 1.0, std::f64::consts::SQRT_2).unwrap();
        assert!((lam2 - 2.0).abs() < 1e-12);
        assert!(residual_cap(4.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn theta_constants_values() {
        let th = theta_constants(0.5, 1.6, 0.5).unwrap();
        assert!((th.p1 - 0.75).abs() < 1e-15);
        assert!((th.p2 - 1.3).abs() < 1e-15);
        assert!((th.theta1 - 2f64.powf(0.75) * 0.5).abs() < 1e-14);
        assert!((th.theta1 - 0.8409).abs() < 1e-4);
        assert!((th.theta2 - 2f64.powf(1.3) * 0.5_f64.powf(1.6)).abs() < 1e-14);
        assert!((th.theta2 - 0.8123).abs() < 1e-4);
        // xi near 1 sends both constants to zero.
        let th1 = theta_constants(0.5, 1.6, 1.0 - 1e-12).unwrap();
        assert!(th1.theta1 < 1e-11 && th1.theta2 < 1e-11);
        // Range violations refuse.
        assert!(theta_constants(1.5, 1.6, 0.5).is_err());
        assert!(theta_constants(0.5, 0.9, 0.5).is_err());
        assert!(theta_constants(0.5, 1.6, 1.0).is_err());
    }

    #[test]
    fn simpson_matches_closed_forms() {
        let f = |t: f64| t * t;
        let val = adaptive_simpson(&f, 0.0, 3.0, 1e-12);
        assert!((val - 9.0).abs() < 1e-10);
        let g = |t: f64| (-t).exp();
        let val = adaptive_simpson(&g, 0.0, 10.0, 1e-12);
        assert!((val - (1.0 - (-10.0_f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn inversion_hits_target_value() {
        let schedules = [
            ScheduleKind::constant(3.0),
            ScheduleKind::Power { c: 2.0, a: -0.5 },
            ScheduleKind::Power { c: 1.0, a: 1.5 },
            ScheduleKind::Exponential { c: 0.5, a: 0.2 },
        ];
        for s in schedules {
            let f = |t: f64| s.integral(t);
            for y in [0.1, 1.0, 7.5] {
                let t = invert_increasing(&f, 0.0, 1e4, y);
                assert!(
                    (f(t) - y).abs() <= 1e-10 * y.max(1.0),
                    "{s:?}: f({t}) = {} vs {y}",
                    f(t)
                );
            }
        }
    }

    fn tv_inputs() -> (f64, f64, f64) {
        // mu = 0.4, zeta = 1, L = 2: xi = 1/sqrt(1.16).
        (0.4, 1.0, 2.0)
    }

    #[test]
    fn tv_bound_constant_schedule_matches_linear_inversion() {
        let (mu, zeta, lip) = tv_inputs();
        let (b1, b2) = (50.0, 30.0);
        let g = GainSchedule::constant(b1, b2, 20.0, 0.5, 1.6).unwrap();
        let cert = settling_bound_tv(&g, mu, zeta, lip, DEFAULT_HORIZON).unwrap();
        assert!(cert.feasible);
        let xi = contraction_factor(mu, zeta, lip).unwrap();
        let th = theta_constants(0.5, 1.6, xi).unwrap();
        // Linear integrals invert by hand: T = c2/b2 + c1/b1.
        let expected =
            1.0 / (th.theta2 * (th.p2 - 1.0)) / b2 + 1.0 / (th.theta1 * (1.0 - th.p1)) / b1;
        let got = cert.bound_t.unwrap();
        assert!(
            (got - expected).abs() <= 1e-9 * expected,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn tv_bound_power_schedule_matches_antiderivative_inversion() {
        let (mu, zeta, lip) = tv_inputs();
        let (c1p, a1) = (4.0, -0.5);
        let (c2p, a2) = (3.0, 1.0);
        let g = GainSchedule {
            gamma1: ScheduleKind::Power { c: c1p, a: a1 },
            gamma2: ScheduleKind::Power { c: c2p, a: a2 },
            gamma3: ScheduleKind::constant(0.0),
            rho1: 0.5,
            rho2: 1.6,
            deadzone: 1e-9,
            t0: 0.0,
        };
        let cert = settling_bound_tv(&g, mu, zeta, lip, DEFAULT_HORIZON).unwrap();
        assert!(cert.feasible);
        let xi = contraction_factor(mu, zeta, lip).unwrap();
        let th = theta_constants(0.5, 1.6, xi).unwrap();
        // Independent route: closed-form antiderivative inverses.
        // F(t) = c ((1+t)^(a+1) - 1)/(a+1)  =>  F^{-1}(y) = (y (a+1)/c + 1)^(1/(a+1)) - 1.
        let f_inv = |c: f64, a: f64, y: f64| (y * (a + 1.0) / c + 1.0).powf(1.0 / (a + 1.0)) - 1.0;
        let f_fwd = |c: f64, a: f64, t: f64| c * ((1.0 + t).powf(a + 1.0) - 1.0) / (a + 1.0);
        let c2 = 1.0 / (th.theta2 * (th.p2 - 1.0));
        let c1 = 1.0 / (th.theta1 * (1.0 - th.p1));
        let t_a = f_inv(c2p, a2, c2);
        let expected = f_inv(c1p, a1, f_fwd(c1p, a1, t_a) + c1);
        let got = cert.bound_t.unwrap();
        assert!(
            (got - expected).abs() <= 1e-9 * expected.max(1.0),
            "{got} vs {expected}"
        );
    }

    #[test]
    fn tv_bound_quadrature_path_agrees_with_closed_forms() {
        let (mu, zeta, lip) = tv_inputs();
        let cases: Vec<(ScheduleKind, ScheduleKind)> = vec![
            (ScheduleKind::constant(50.0), ScheduleKind::constant(30.0)),
            (
                ScheduleKind::Power { c: 4.0, a: -0.5 },
                ScheduleKind::Power { c: 3.0, a: 1.0 },
            ),
            (
                ScheduleKind::Exponential { c: 2.0, a: 0.05 },
                ScheduleKind::Exponential { c: 1.0, a: 0.1 },
            ),
        ];
        for (s1, s2) in cases {
            let g = GainSchedule {
                gamma1: s1.clone(),
                gamma2: s2.clone(),
                gamma3: ScheduleKind::constant(0.0),
                rho1: 0.5,
                rho2: 1.6,
                deadzone: 1e-9,
                t0: 0.0,
            };
            // A modest horizon keeps the quadrature cheap; both paths see the same one.
            let horizon = 100.0;
            let a = settling_bound_tv(&g, mu, zeta, lip, horizon).unwrap();
            let b = settling_bound_tv_fn(
                |t| s1.value(t),
                |t| s2.value(t),
                0.5,
                1.6,
                mu,
                zeta,
                lip,
                0.0,
                horizon,
            )
            .unwrap();
            assert_eq!(a.feasible, b.feasible, "{s1:?}/{s2:?}");
            let (ba, bb) = (a.bound_t.unwrap(), b.bound_t.unwrap());
            assert!(
                (ba - bb).abs() <= 1e-9 * ba.max(1.0),
                "{s1:?}/{s2:?}: {ba} vs {bb}"
            );
        }
    }

    #[test]
    fn tv_bound_infeasible_when_superlinear_mass_too_small() {
        let (mu, zeta, lip) = tv_inputs();
        let g = GainSchedule {
            gamma1: ScheduleKind::constant(50.0),
            // Integral over [0, inf) is 0.001, far below the required mass.
            gamma2: ScheduleKind::Exponential { c: 0.01, a: -10.0 },
            gamma3: ScheduleKind::constant(0.0),
            rho1: 0.5,
            rho2: 1.6,
            deadzone: 1e-9,
            t0: 0.0,
        };
        let cert = settling_bound_tv(&g, mu, zeta, lip, DEFAULT_HORIZON).unwrap();
        assert!(!cert.feasible);
        assert!(cert.bound_t.is_none());
        assert!(cert.horizon_limited);
    }

    #[test]
    fn const_bound_hand_computed_example() {
        // beta1 = beta2 = 1, beta3 = 0, rho = (0.5, 1.6), xi = 0.5 and
        // (4 zeta - mu L^2)/(4 zeta) = 0.9: mu = 0.4, zeta = 1, L = 1
        // gives exactly that margin.
        let (mu, zeta, lip): (f64, f64, f64) = (0.4, 1.0, 1.0);
        assert!(((4.0 * zeta - mu * lip * lip) / (4.0 * zeta) - 0.9).abs() < 1e-15);
        let cert = settling_bound_const(1.0, 1.0, 0.0, 0.5, 1.6, 0.5, mu, zeta, lip, 0.0).unwrap();
        let n1 = 2f64.powf(0.75) * 0.5 * 0.9_f64.powf(0.5);
        let n2 = 2f64.powf(1.3) * 0.5_f64.powf(1.6);
        let expected = 1.0 / (n1 * 0.25) + 1.0 / (n2 * 0.3);
        assert!((n1 - 0.7977).abs() < 1e-4);
        assert!((n2 - 0.8123).abs() < 1e-4);
        let got = cert.bound_t.unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!((got - 9.1179).abs() < 1e-3, "bound {got}");
        // beta3 = 0 collapses the interval: both bounds coincide.
        assert_eq!(cert.bound_t, cert.optimistic_bound_t);
    }

    #[test]
    fn const_bound_interval_endpoints_with_beta3() {
        let (mu, zeta, lip) = tv_inputs();
        let xi = contraction_factor(mu, zeta, lip).unwrap();
        let cert =
            settling_bound_const(50.0, 50.0, 20.0, 0.5, 1.6, xi, mu, zeta, lip, 4.0).unwrap();
        assert!(cert.feasible);
        let (b, ob) = (cert.bound_t.unwrap(), cert.optimistic_bound_t.unwrap());
        // The optimistic bound uses the larger N2, so it is strictly smaller.
        assert!(ob < b);
    }

    #[test]
    fn degenerate_exponents_yield_infeasible() {
        // rho1 within 1e-13 of 1 passes the range check but makes the
        // fractional bound term blow up; the guard reports infeasible.
        let (mu, zeta, lip) = tv_inputs();
        let xi = contraction_factor(mu, zeta, lip).unwrap();
        let cert =
            settling_bound_const(1.0, 1.0, 0.0, 1.0 - 1e-13, 1.6, xi, mu, zeta, lip, 0.0).unwrap();
        assert!(!cert.feasible);
        assert!(cert.bound_t.is_none());
        let g = GainSchedule {
            gamma1: ScheduleKind::constant(1.0),
            gamma2: ScheduleKind::constant(1.0),
            gamma3: ScheduleKind::constant(0.0),
            rho1: 1.0 - 1e-13,
            rho2: 1.6,
            deadzone: 1e-9,
            t0: 0.0,
        };
        let cert = settling_bound_tv(&g, mu, zeta, lip, DEFAULT_HORIZON).unwrap();
        assert!(!cert.feasible);
    }

    #[test]
    fn const_bound_degenerates_as_xi_approaches_one() {
        let (mu, zeta, lip) = tv_inputs();
        let cert =
            settling_bound_const(1.0, 1.0, 0.0, 0.5, 1.6, 1.0 - 1e-14, mu, zeta, lip, 0.0).unwrap();
        assert!(!cert.feasible);
        assert!(cert.bound_t.is_none());
    }

    fn fake_trajectory(times: Vec<f64>, residuals: Vec<f64>) -> Trajectory {
        let n = times.len();
        Trajectory {
            times,
            states: vec![vec![0.0]; n],
            residual_norms: residuals,
            error_norms: None,
            settled_at: None,
            terminated: TerminationReason::TEnd,
        }
    }

    #[test]
    fn robust_condition_trivial_and_boundary() {
        let g = GainSchedule::constant(1.0, 1.0, 1.0, 0.5, 1.6).unwrap();
        let traj = fake_trajectory(vec![0.0, 1.0, 2.0], vec![3.0, 1.0, 0.1]);
        // q = 0 with positive gains holds everywhere.
        let feas = robust_feasibility(&g, 0.0, 1.5, &traj);
        assert!(feas.all_hold);
        // gamma1 exactly equal to lambda^(1-rho1) q fails the strict inequality.
        let lambda: f64 = 1.5;
        let q = 0.4;
        let g_boundary =
            GainSchedule::constant(lambda.powf(0.5) * q, 10.0, 10.0, 0.5, 1.6).unwrap();
        let feas = robust_feasibility(&g_boundary, q, lambda, &traj);
        assert!(!feas.all_hold);
        assert!(feas.min_margin <= 0.0);
    }

    #[test]
    fn robust_bound_on_synthetic_trajectory() {
        let (mu, zeta, lip) = tv_inputs();
        let g = GainSchedule::constant(50.0, 50.0, 20.0, 0.5, 1.6).unwrap();
        // A decaying residual profile sampled densely enough for trapezoid,
        // long enough to carry the required superlinear integral mass.
        let times: Vec<f64> = (0..=3000).map(|i| i as f64 * 1e-3).collect();
        let residuals: Vec<f64> = times.iter().map(|t| 5.0 * (-8.0 * t).exp()).collect();
        let traj = fake_trajectory(times, residuals);
        let cert = settling_bound_robust(&g, 0.3, mu, zeta, lip, &traj).unwrap();
        assert!(cert.trajectory_conditional);
        assert!(cert.feasible, "certificate: {cert}");
        assert!(cert.bound_t.unwrap() > 0.0);
        // theta1 carries no (1 - xi) factor in the disturbed analysis.
        assert!((cert.theta1 - 2f64.powf(cert.p1)).abs() < 1e-14);
    }
}
