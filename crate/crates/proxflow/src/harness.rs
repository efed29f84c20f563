//! Configuration-driven experiment runner: integrates the batch of initial
//! conditions, writes one CSV per trajectory plus a long-format error-curve
//! CSV and a plotting script, probes the standing assumptions, and attaches a
//! settling certificate (or the reason it was refused).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::certificates::{
    self, robust_feasibility, settling_bound_const, settling_bound_tv, SettlingCertificate,
};
use crate::config::{ExperimentConfig, IntegratorSpec, ModelSpec, ProblemSpec, ResolvedExperiment};
use crate::dynamics::{
    residual, residual_norm, rhs_disturbed, rhs_time_varying, Disturbance, DisturbanceSpec,
    GainSchedule, ScheduleKind, Variant,
};
use crate::integrator::{integrate, TerminationReason, Trajectory};
use crate::linalg;
use crate::presets;
use crate::problem::{assumption_report, AssumptionReport};
use crate::{Error, Result};

/// Sample count for the assumption probes run as part of every report.
const PROBE_SAMPLES: usize = 20_000;
const PROBE_RADIUS: f64 = 10.0;

/// When the contraction constants are unavailable, the disturbed-gain
/// condition is evaluated at the conservative end of the admissible
/// amplification interval (1, 2).
const WORST_CASE_LAMBDA: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct TrajectoryOutcome {
    pub label: String,
    pub disturbed: bool,
    pub settled_at: Option<f64>,
    pub final_time: f64,
    pub final_residual: f64,
    pub final_error: Option<f64>,
    pub terminated: TerminationReason,
    pub csv_file: String,
    /// Disturbed runs only: whether the disturbed-gain condition held at
    /// every recorded sample, and its smallest margin.
    pub robust_all_hold: Option<bool>,
    pub robust_min_margin: Option<f64>,
}

#[derive(Debug)]
pub struct RunReport {
    pub problem: String,
    pub outcomes: Vec<TrajectoryOutcome>,
    pub assumptions: AssumptionReport,
    /// Certificate, or the reason its emission was refused.
    pub certificate: std::result::Result<SettlingCertificate, String>,
    pub all_settled: bool,
    pub output_dir: PathBuf,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem={}", self.problem);
        let _ = writeln!(s, "all_settled={}", self.all_settled);
        let _ = writeln!(s, "trajectories={}", self.outcomes.len());
        for o in &self.outcomes {
            let _ = writeln!(s, "\n[trajectory {}]", o.label);
            let _ = writeln!(s, "disturbed={}", o.disturbed);
            let _ = writeln!(s, "terminated={}", o.terminated);
            match o.settled_at {
                Some(t) => {
                    let _ = writeln!(s, "settled_at={t:.12e}");
                }
                None => {
                    let _ = writeln!(s, "settled_at=none");
                }
            }
            let _ = writeln!(s, "final_time={:.12e}", o.final_time);
            let _ = writeln!(s, "final_residual={:.12e}", o.final_residual);
            match o.final_error {
                Some(e) => {
                    let _ = writeln!(s, "final_error={e:.12e}");
                }
                None => {
                    let _ = writeln!(s, "final_error=none");
                }
            }
            if let Some(hold) = o.robust_all_hold {
                let _ = writeln!(s, "robust_gain_condition={hold}");
            }
            if let Some(margin) = o.robust_min_margin {
                let _ = writeln!(s, "robust_min_margin={margin:.12e}");
            }
            let _ = writeln!(s, "csv={}", o.csv_file);
        }
        let _ = writeln!(s, "\n[assumptions]");
        let _ = writeln!(s, "zeta_estimate={:.12e}", self.assumptions.zeta_estimate);
        let _ = writeln!(
            s,
            "lipschitz_estimate={:.12e}",
            self.assumptions.lipschitz_estimate
        );
        let _ = writeln!(s, "a3_satisfied={}", self.assumptions.a3_satisfied);
        let _ = writeln!(s, "xi_real={}", self.assumptions.xi_real);
        let _ = writeln!(s, "samples_used={}", self.assumptions.samples_used);
        let _ = writeln!(
            s,
            "contradicts_supplied={}",
            self.assumptions.contradicts_supplied
        );
        let _ = writeln!(s, "\n[certificate]");
        match &self.certificate {
            Ok(cert) => {
                let _ = writeln!(s, "{cert}");
            }
            Err(reason) => {
                let _ = writeln!(s, "refused={reason}");
            }
        }
        s
    }
}

/// Zero out the gain terms the variant disables, keeping one rhs code path.
fn masked_schedule(g: &GainSchedule, variant: Variant) -> GainSchedule {
    let zero = ScheduleKind::constant(0.0);
    let mut out = g.clone();
    match variant {
        Variant::Full => {}
        Variant::Normalized => {
            out.gamma1 = zero.clone();
            out.gamma2 = zero;
        }
        Variant::FractionalOnly => {
            out.gamma2 = zero.clone();
            out.gamma3 = zero;
        }
    }
    out
}

fn effective_constants(
    problem: &crate::problem::MviProblem,
    assumptions: &AssumptionReport,
) -> (f64, f64) {
    (
        problem.zeta().unwrap_or(assumptions.zeta_estimate),
        problem
            .lipschitz()
            .unwrap_or(assumptions.lipschitz_estimate),
    )
}

fn certificate_for(
    r: &ResolvedExperiment,
    assumptions: &AssumptionReport,
    phi0_norm: f64,
) -> std::result::Result<SettlingCertificate, String> {
    let (zeta, lipschitz) = effective_constants(&r.problem, assumptions);
    let mu = r.problem.mu();
    let result = if r.constant_gain_model {
        let xi = match certificates::contraction_factor(mu, zeta, lipschitz) {
            Ok(v) => v,
            Err(e) => return Err(e.to_string()),
        };
        let beta = |k: &ScheduleKind| match k {
            ScheduleKind::Constant { beta } => *beta,
            _ => unreachable!("pdm variant validated to constant schedules"),
        };
        settling_bound_const(
            beta(&r.schedule.gamma1),
            beta(&r.schedule.gamma2),
            beta(&r.schedule.gamma3),
            r.schedule.rho1,
            r.schedule.rho2,
            xi,
            mu,
            zeta,
            lipschitz,
            phi0_norm,
        )
    } else {
        settling_bound_tv(
            &r.schedule,
            mu,
            zeta,
            lipschitz,
            certificates::DEFAULT_HORIZON,
        )
    };
    result.map_err(|e| e.to_string())
}

fn run_one(
    r: &ResolvedExperiment,
    schedule: &GainSchedule,
    disturbance: Option<&Disturbance>,
    w0: &[f64],
) -> Result<Trajectory> {
    let p = &r.problem;
    match disturbance {
        Some(d) => integrate(
            |t, w| rhs_disturbed(p, schedule, d, t, w),
            |w| residual_norm(p, w),
            w0,
            p.known_solution(),
            &r.integrator,
        ),
        None => integrate(
            |t, w| rhs_time_varying(p, schedule, t, w),
            |w| residual_norm(p, w),
            w0,
            p.known_solution(),
            &r.integrator,
        ),
    }
}

/// Execute the experiment, writing all artifacts under `output_dir`.
pub fn run_resolved(r: &ResolvedExperiment, output_dir: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(output_dir)?;
    let schedule = masked_schedule(&r.schedule, r.variant);

    let assumptions = assumption_report(&r.problem, PROBE_SAMPLES, PROBE_RADIUS, r.seed)?;
    let phi0_norm = linalg::norm(&residual(&r.problem, &r.initial_conditions[0])?);
    let certificate = certificate_for(r, &assumptions, phi0_norm);
    let lambda_for_robust = certificate
        .as_ref()
        .map(|c| c.lambda_cap)
        .unwrap_or(WORST_CASE_LAMBDA);

    let mut outcomes = Vec::new();
    let mut error_curves = String::from("trajectory,t,log10_error_sq\n");

    let record_outcome = |label: String,
                          disturbed: bool,
                          traj: &Trajectory,
                          error_curves: &mut String|
     -> Result<TrajectoryOutcome> {
        let csv_file = format!("{label}.csv");
        std::fs::write(output_dir.join(&csv_file), traj.to_csv())?;
        if let Some(errors) = &traj.error_norms {
            for (t, e) in traj.times.iter().zip(errors) {
                let log_err_sq = 2.0 * e.max(1e-300).log10();
                let _ = writeln!(error_curves, "{label},{t:.16e},{log_err_sq:.16e}");
            }
        }
        let (robust_all_hold, robust_min_margin) = if disturbed {
            let q = r
                .disturbance
                .as_ref()
                .map(|d| d.growth_constant())
                .unwrap_or(0.0);
            let feas = robust_feasibility(&schedule, q, lambda_for_robust, traj);
            (Some(feas.all_hold), Some(feas.min_margin))
        } else {
            (None, None)
        };
        Ok(TrajectoryOutcome {
            label,
            disturbed,
            settled_at: traj.settled_at,
            final_time: traj.final_time(),
            final_residual: traj.final_residual(),
            final_error: traj.final_error(),
            terminated: traj.terminated,
            csv_file,
            robust_all_hold,
            robust_min_margin,
        })
    };

    if r.run_clean {
        for (i, w0) in r.initial_conditions.iter().enumerate() {
            let traj = run_one(r, &schedule, None, w0)?;
            outcomes.push(record_outcome(
                format!("traj_{}", i + 1),
                false,
                &traj,
                &mut error_curves,
            )?);
        }
    }
    if r.run_disturbed {
        let spec = r.disturbance.clone().unwrap_or(DisturbanceSpec::None);
        let disturbance = Disturbance::build(&spec, &r.problem, r.integrator.t0)?;
        for (i, w0) in r.initial_conditions.iter().enumerate() {
            let traj = run_one(r, &schedule, Some(&disturbance), w0)?;
            outcomes.push(record_outcome(
                format!("traj_{}_disturbed", i + 1),
                true,
                &traj,
                &mut error_curves,
            )?);
        }
    }

    std::fs::write(output_dir.join("error_curves.csv"), error_curves)?;

    let all_settled = outcomes
        .iter()
        .all(|o| o.terminated == TerminationReason::Settled);
    let report = RunReport {
        problem: r.name.clone(),
        outcomes,
        assumptions,
        certificate,
        all_settled,
        output_dir: output_dir.to_path_buf(),
    };
    std::fs::write(output_dir.join("report.txt"), report.to_text())?;
    emit_plot_script(&report, output_dir)?;
    Ok(report)
}

/// Run a config, honoring its own `output_dir` unless an override is given.
pub fn run_config(cfg: &ExperimentConfig, output_override: Option<&Path>) -> Result<RunReport> {
    let resolved = cfg.resolve()?;
    let out = match output_override {
        Some(p) => p.to_path_buf(),
        None => resolved
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out")),
    };
    run_resolved(&resolved, &out)
}

/// The benchmark configuration: constant-gain projection dynamics on the
/// complementarity preset, five fixed starts, plus the proportionally
/// disturbed batch with growth constant 0.3.
pub fn example1_config() -> ExperimentConfig {
    ExperimentConfig {
        schema: 1,
        problem: ProblemSpec {
            preset: Some("example1-ncp".into()),
            linear: None,
        },
        model: ModelSpec {
            variant: "pdm".into(),
            rho1: 0.5,
            rho2: 1.6,
            gamma1: ScheduleKind::constant(50.0),
            gamma2: ScheduleKind::constant(50.0),
            gamma3: ScheduleKind::constant(20.0),
            deadzone: None,
        },
        disturbance: Some(DisturbanceSpec::Proportional {
            q: 0.3,
            direction_seed: 7,
        }),
        integrator: IntegratorSpec {
            method: "rk4_adaptive_clip".into(),
            dt: 1e-4,
            t0: 0.0,
            t_end: 2.0,
            stop_residual: 1e-8,
            max_steps: 2_000_000,
            record_stride: 10,
        },
        initial_conditions: presets::example1_initial_conditions(),
        output_dir: None,
        seed: 42,
    }
}

/// Reproduce the benchmark end to end. Fails (after writing all artifacts)
/// if any trajectory does not settle.
pub fn run_example1(output_dir: &Path) -> Result<RunReport> {
    let cfg = example1_config();
    let report = run_config(&cfg, Some(output_dir))?;
    if !report.all_settled {
        return Err(Error::Config(
            "benchmark run did not settle on every trajectory".into(),
        ));
    }
    Ok(report)
}

/// Write a standalone matplotlib script that renders the run's figures from
/// the CSVs by relative path.
pub fn emit_plot_script(report: &RunReport, output_dir: &Path) -> Result<PathBuf> {
    if report.outcomes.is_empty() {
        return Err(Error::Config(
            "nothing to plot: report has no trajectories".into(),
        ));
    }
    let clean: Vec<String> = report
        .outcomes
        .iter()
        .filter(|o| !o.disturbed)
        .map(|o| o.csv_file.clone())
        .collect();
    let disturbed: Vec<String> = report
        .outcomes
        .iter()
        .filter(|o| o.disturbed)
        .map(|o| o.csv_file.clone())
        .collect();
    let list = |files: &[String]| {
        files
            .iter()
            .map(|f| format!("\"{f}\""))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let script = format!(
        r#"#!/usr/bin/env python3
"""Render state trajectories and error curves from the run CSVs."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CLEAN = [{clean_list}]
DISTURBED = [{disturbed_list}]


def read_csv(name):
    with open(os.path.join(HERE, name)) as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    cols = {{h: [float(r[i]) for r in data] for i, h in enumerate(header)}}
    return header, cols


def plot_states(files, title, outfile):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in files:
        header, cols = read_csv(name)
        state_cols = [h for h in header if h.startswith("w")]
        for h in state_cols:
            ax.plot(cols["t"], cols[h], linewidth=0.9)
    ax.set_xlabel("t")
    ax.set_ylabel("state components")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, outfile), dpi=150)
    plt.close(fig)


def plot_log_errors(files, title, outfile):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    import math
    for name in files:
        _, cols = read_csv(name)
        logs = [2.0 * math.log10(max(e, 1e-300)) for e in cols["error"]]
        ax.plot(cols["t"], logs, linewidth=1.1, label=name.replace(".csv", ""))
    ax.set_xlabel("t")
    ax.set_ylabel("log10 ||w(t) - w*||^2")
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, outfile), dpi=150)
    plt.close(fig)


if CLEAN:
    plot_states(CLEAN, "State trajectories", "state_trajectories.png")
    plot_log_errors(CLEAN, "Error convergence", "error_curves.png")
if DISTURBED:
    plot_log_errors(DISTURBED, "Error convergence under disturbance", "error_curves_disturbed.png")
print("figures written to", HERE)
"#,
        clean_list = list(&clean),
        disturbed_list = list(&disturbed),
    );
    let path = output_dir.join("plot.py");
    std::fs::write(&path, script)?;
    Ok(path)
}
