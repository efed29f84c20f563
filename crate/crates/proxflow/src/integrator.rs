//! Explicit RK4 time stepping with a residual-scaled step clip.
//!
//! The dynamics are nonsmooth and carry an unbounded gain near the solution
//! set, so the adaptive mode clips the step to `min(dt, c ||phi|| / ||rhs||)`
//! with `c = 0.5`: no single step can move the state by more than about half
//! the current residual scale, which keeps explicit stepping stable all the
//! way into the dead zone while leaving the nominal step untouched elsewhere.

use std::fmt;

use crate::linalg;
use crate::{Error, Result};

/// Fraction of the residual scale a clipped step may traverse.
pub const CLIP_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
    Rk4AdaptiveClip,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Base (maximum) step.
    pub dt: f64,
    pub t0: f64,
    pub t_end: f64,
    /// Residual norm at which the run counts as settled.
    pub stop_residual: f64,
    pub max_steps: usize,
    /// Record every this many accepted steps (the initial and final states are
    /// always recorded).
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::InvalidParameter("t_end must exceed t0".into()));
        }
        if !(self.stop_residual > 0.0) {
            return Err(Error::InvalidParameter(
                "stop_residual must be positive".into(),
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter(
                "record_stride must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4AdaptiveClip,
            dt: 1e-4,
            t0: 0.0,
            t_end: 2.0,
            stop_residual: 1e-8,
            max_steps: 2_000_000,
            record_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    Settled,
    TEnd,
    MaxSteps,
    NonFinite,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TerminationReason::Settled => "settled",
            TerminationReason::TEnd => "t_end",
            TerminationReason::MaxSteps => "max_steps",
            TerminationReason::NonFinite => "nonfinite",
        };
        f.write_str(s)
    }
}

/// Recorded samples of one integration run. All lists share length and times
/// are strictly increasing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    /// Distance to the known solution per sample, when one was supplied.
    pub error_norms: Option<Vec<f64>>,
    /// First recorded time with residual at or below the stop tolerance.
    pub settled_at: Option<f64>,
    pub terminated: TerminationReason,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn final_residual(&self) -> f64 {
        *self
            .residual_norms
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn final_error(&self) -> Option<f64> {
        self.error_norms
            .as_ref()
            .map(|e| *e.last().expect("nonempty"))
    }

    /// CSV with header `t,w1..wl,residual,error`; floats carry 17 significant
    /// digits so round-trips are exact. The error column is `nan` when no
    /// known solution was attached.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map(|s| s.len()).unwrap_or(0);
        let mut out = String::from("t");
        for i in 1..=dim {
            out.push_str(&format!(",w{i}"));
        }
        out.push_str(",residual,error\n");
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.16e}"));
            for v in &self.states[i] {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push_str(&format!(",{:.16e}", self.residual_norms[i]));
            match &self.error_norms {
                Some(errs) => out.push_str(&format!(",{:.16e}\n", errs[i])),
                None => out.push_str(",nan\n"),
            }
        }
        out
    }
}

/// Integrate `dw/dt = rhs(t, w)` from `w0`, recording residual norms from the
/// supplied map (the same residual the dynamics are built on) and stopping as
/// soon as it falls to `cfg.stop_residual`.
pub fn integrate<F, R>(
    mut rhs: F,
    residual_norm: R,
    w0: &[f64],
    known_solution: Option<&[f64]>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    R: Fn(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    if !linalg::all_finite(w0) {
        return Err(Error::NonFinite {
            context: "initial state",
        });
    }
    if let Some(ws) = known_solution {
        if ws.len() != w0.len() {
            return Err(Error::DimensionMismatch {
                expected: w0.len(),
                got: ws.len(),
            });
        }
    }

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut residuals = Vec::new();

    let record = |t: f64,
                  w: &[f64],
                  r: f64,
                  times: &mut Vec<f64>,
                  states: &mut Vec<Vec<f64>>,
                  residuals: &mut Vec<f64>| {
        if times.last().is_none_or(|last| t > *last) {
            times.push(t);
            states.push(w.to_vec());
            residuals.push(r);
        }
    };

    let mut w = w0.to_vec();
    let mut t = cfg.t0;
    let mut r_current = residual_norm(&w)?;
    record(t, &w, r_current, &mut times, &mut states, &mut residuals);

    let reason;
    if r_current <= cfg.stop_residual {
        reason = TerminationReason::Settled;
    } else {
        let mut steps = 0usize;
        loop {
            if steps >= cfg.max_steps {
                reason = TerminationReason::MaxSteps;
                break;
            }
            let k1 = rhs(t, &w)?;
            let mut h = cfg.dt;
            if cfg.method == Method::Rk4AdaptiveClip {
                let k1_norm = linalg::norm(&k1);
                if k1_norm > 0.0 {
                    h = h.min(CLIP_FACTOR * r_current / k1_norm);
                }
            }
            let remaining = cfg.t_end - t;
            if remaining <= 0.0 {
                reason = TerminationReason::TEnd;
                break;
            }
            h = h.min(remaining);
            if !(h > 0.0) || !h.is_finite() {
                reason = TerminationReason::TEnd;
                break;
            }

            let mut stage = w.clone();
            linalg::axpy(0.5 * h, &k1, &mut stage);
            let k2 = rhs(t + 0.5 * h, &stage)?;
            stage.copy_from_slice(&w);
            linalg::axpy(0.5 * h, &k2, &mut stage);
            let k3 = rhs(t + 0.5 * h, &stage)?;
            stage.copy_from_slice(&w);
            linalg::axpy(h, &k3, &mut stage);
            let k4 = rhs(t + h, &stage)?;

            let mut w_new = w.clone();
            let sixth = h / 6.0;
            linalg::axpy(sixth, &k1, &mut w_new);
            linalg::axpy(2.0 * sixth, &k2, &mut w_new);
            linalg::axpy(2.0 * sixth, &k3, &mut w_new);
            linalg::axpy(sixth, &k4, &mut w_new);

            steps += 1;
            if !linalg::all_finite(&w_new) {
                reason = TerminationReason::NonFinite;
                break;
            }
            w = w_new;
            t += h;
            r_current = residual_norm(&w)?;

            if steps.is_multiple_of(cfg.record_stride) {
                record(t, &w, r_current, &mut times, &mut states, &mut residuals);
            }
            if r_current <= cfg.stop_residual {
                reason = TerminationReason::Settled;
                break;
            }
            if t >= cfg.t_end {
                reason = TerminationReason::TEnd;
                break;
            }
        }
        // Always include the final state.
        record(t, &w, r_current, &mut times, &mut states, &mut residuals);
    }

    let error_norms = known_solution.map(|ws| {
        states
            .iter()
            .map(|s| linalg::distance(s, ws))
            .collect::<Vec<f64>>()
    });
    let settled_at = times
        .iter()
        .zip(&residuals)
        .find(|(_, r)| **r <= cfg.stop_residual)
        .map(|(t, _)| *t);

    Ok(Trajectory {
        times,
        states,
        residual_norms: residuals,
        error_norms,
        settled_at,
        terminated: reason,
    })
}

/// First time the monitored norm (error when available, residual otherwise)
/// falls to `tol`, linearly interpolated between the straddling samples.
pub fn detect_settling(traj: &Trajectory, tol: f64) -> Result<Option<f64>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "settling tolerance must be positive".into(),
        ));
    }
    let series: &[f64] = match &traj.error_norms {
        Some(errs) => errs,
        None => &traj.residual_norms,
    };
    let hit = series.iter().position(|v| *v <= tol);
    let Some(i) = hit else {
        return Ok(None);
    };
    if i == 0 {
        return Ok(Some(traj.times[0]));
    }
    let (t0, v0) = (traj.times[i - 1], series[i - 1]);
    let (t1, v1) = (traj.times[i], series[i]);
    // v0 > tol >= v1 here; interpolate on the monitored norm.
    let frac = if v0 > v1 { (v0 - tol) / (v0 - v1) } else { 1.0 };
    Ok(Some(t0 + frac * (t1 - t0)))
}

/// Half squared distance to the given point per sample.
pub fn lyapunov_series(traj: &Trajectory, w_star: &[f64]) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if traj.states[0].len() != w_star.len() {
        return Err(Error::DimensionMismatch {
            expected: traj.states[0].len(),
            got: w_star.len(),
        });
    }
    Ok(traj
        .states
        .iter()
        .map(|s| {
            let d = linalg::distance(s, w_star);
            0.5 * d * d
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dt: f64, t_end: f64, stop: f64, stride: usize, method: Method) -> IntegratorConfig {
        IntegratorConfig {
            method,
            dt,
            t0: 0.0,
            t_end,
            stop_residual: stop,
            max_steps: 10_000_000,
            record_stride: stride,
        }
    }

    #[test]
    fn zero_rhs_constant_trajectory() {
        let c = cfg(0.01, 1.0, 1e-8, 10, Method::Rk4AdaptiveClip);
        let traj = integrate(
            |_t, w| Ok(vec![0.0; w.len()]),
            |_w| Ok(0.5),
            &[1.0, 1.0],
            None,
            &c,
        )
        .unwrap();
        assert_eq!(traj.terminated, TerminationReason::TEnd);
        assert!(traj.states.iter().all(|s| s == &vec![1.0, 1.0]));
        assert!(traj.settled_at.is_none());
        // With the residual already below tolerance the run settles immediately.
        let traj = integrate(
            |_t, w| Ok(vec![0.0; w.len()]),
            |_w| Ok(0.0),
            &[1.0, 1.0],
            None,
            &c,
        )
        .unwrap();
        assert_eq!(traj.terminated, TerminationReason::Settled);
        assert_eq!(traj.settled_at, Some(0.0));
    }

    #[test]
    fn exponential_decay_accuracy() {
        let c = cfg(1e-3, 1.0, 1e-14, 10, Method::Rk4Fixed);
        let traj = integrate(
            |_t, w| Ok(vec![-w[0]]),
            |w| Ok(w[0].abs()),
            &[1.0],
            None,
            &c,
        )
        .unwrap();
        assert_eq!(traj.terminated, TerminationReason::TEnd);
        let w_end = traj.final_state()[0];
        assert!((traj.final_time() - 1.0).abs() < 1e-12);
        assert!((w_end - (-1.0_f64).exp()).abs() <= 1e-6, "w(1) = {w_end}");
    }

    #[test]
    fn finite_time_extinction_benchmark() {
        // dw/dt = -sign(w) |w|^0.5 from w0 = 1 dies exactly at t = 2:
        // w(t) = (1 - t/2)^2. The measured crossing of 1e-6 sits at
        // t = 2 (1 - 1e-3) = 1.998.
        for method in [Method::Rk4Fixed, Method::Rk4AdaptiveClip] {
            let c = cfg(1e-4, 3.0, 1e-7, 1, method);
            let traj = integrate(
                |_t, w| Ok(vec![-w[0].signum() * w[0].abs().sqrt()]),
                |w| Ok(w[0].abs()),
                &[1.0],
                None,
                &c,
            )
            .unwrap();
            assert_eq!(traj.terminated, TerminationReason::Settled);
            let t_ext = detect_settling(&traj, 1e-6).unwrap().unwrap();
            assert!(
                (t_ext - 2.0).abs() <= 0.02,
                "{method:?}: extinction at {t_ext}"
            );
        }
    }

    #[test]
    fn determinism_bitwise() {
        let run = || {
            integrate(
                |t, w| Ok(vec![-w[0] + 0.1 * (3.0 * t).sin(), -2.0 * w[1]]),
                |w| Ok(crate::linalg::norm(w)),
                &[1.0, -2.0],
                Some(&[0.0, 0.0]),
                &cfg(1e-3, 2.0, 1e-10, 7, Method::Rk4AdaptiveClip),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.times, b.times);
        assert_eq!(a.states, b.states);
        assert_eq!(a.residual_norms, b.residual_norms);
        assert_eq!(a.error_norms, b.error_norms);
    }

    #[test]
    fn settling_interpolation() {
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![0.0], vec![0.0]],
            residual_norms: vec![1.0, 0.0],
            error_norms: Some(vec![1.0, 0.0]),
            settled_at: None,
            terminated: TerminationReason::TEnd,
        };
        let t = detect_settling(&traj, 0.5).unwrap().unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        // Hitting the tolerance exactly at a sample returns that sample time.
        let traj2 = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![vec![0.0]; 3],
            residual_norms: vec![1.0, 0.5, 0.1],
            error_norms: None,
            settled_at: None,
            terminated: TerminationReason::TEnd,
        };
        let t2 = detect_settling(&traj2, 0.5).unwrap().unwrap();
        assert_eq!(t2, 1.0);
        // Never reaching the tolerance yields none.
        assert_eq!(detect_settling(&traj2, 1e-3).unwrap(), None);
    }

    #[test]
    fn lyapunov_series_values() {
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![2.0, 0.0], vec![0.0, 0.0]],
            residual_norms: vec![1.0, 0.0],
            error_norms: None,
            settled_at: None,
            terminated: TerminationReason::TEnd,
        };
        let series = lyapunov_series(&traj, &[0.0, 0.0]).unwrap();
        assert_eq!(series, vec![2.0, 0.0]);
        assert!(lyapunov_series(&traj, &[0.0]).is_err());
    }

    #[test]
    fn nonfinite_rhs_aborts() {
        // dw/dt = w^2 blows up in finite time; the overflow must surface as a
        // nonfinite termination, never a silent bad trajectory.
        let c = cfg(0.5, 1e6, 1e-10, 1, Method::Rk4Fixed);
        let traj = integrate(
            |_t, w| Ok(vec![w[0] * w[0]]),
            |w| Ok(w[0].abs() + 1.0),
            &[2.0],
            None,
            &c,
        )
        .unwrap();
        assert_eq!(traj.terminated, TerminationReason::NonFinite);
        // Recorded samples stay finite.
        assert!(traj.states.iter().all(|s| crate::linalg::all_finite(s)));
    }

    #[test]
    fn times_strictly_increasing_and_step_bounded() {
        let c = cfg(1e-3, 1.0, 1e-9, 1, Method::Rk4AdaptiveClip);
        let traj = integrate(
            |_t, w| Ok(vec![-50.0 * w[0].signum() * w[0].abs().sqrt()]),
            |w| Ok(w[0].abs()),
            &[4.0],
            None,
            &c,
        )
        .unwrap();
        for pair in traj.times.windows(2) {
            assert!(pair[1] > pair[0]);
            assert!(pair[1] - pair[0] <= 1e-3 + 1e-12);
        }
        // With stride 1 every accepted step is recorded: the clip keeps each
        // displacement below the pre-step residual scale.
        for i in 1..traj.len() {
            let step = (traj.states[i][0] - traj.states[i - 1][0]).abs();
            assert!(
                step <= traj.residual_norms[i - 1] + 1e-12,
                "step {step} exceeds residual {}",
                traj.residual_norms[i - 1]
            );
        }
        assert_eq!(traj.terminated, TerminationReason::Settled);
    }

    #[test]
    fn max_steps_terminates() {
        let mut c = cfg(1e-3, 1.0, 1e-12, 10, Method::Rk4Fixed);
        c.max_steps = 17;
        let traj = integrate(
            |_t, w| Ok(vec![-w[0]]),
            |w| Ok(w[0].abs()),
            &[1.0],
            None,
            &c,
        )
        .unwrap();
        assert_eq!(traj.terminated, TerminationReason::MaxSteps);
    }

    #[test]
    fn csv_format() {
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            residual_norms: vec![0.5, 0.25],
            error_norms: Some(vec![0.1, 0.05]),
            settled_at: None,
            terminated: TerminationReason::TEnd,
        };
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,w1,w2,residual,error");
        let first = lines.next().unwrap();
        assert!(first.starts_with("0.0000000000000000e0,1.0000000000000000e0"));
    }
}
