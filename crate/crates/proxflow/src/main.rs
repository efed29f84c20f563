use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use proxflow::certificates;
use proxflow::config::ExperimentConfig;
use proxflow::harness::{self, RunReport};
use proxflow::oracle::contraction_audit;
use proxflow::problem::assumption_report;

/// Continuous-time proximal dynamics for mixed variational inequalities:
/// simulate the flows, certify settling times, audit the assumptions.
#[derive(Parser)]
#[command(name = "proxflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the complementarity benchmark: five starts of the
    /// constant-gain projection flow plus the disturbed batch.
    RunExample1 {
        #[arg(long, default_value = "out/example1")]
        output_dir: PathBuf,
    },
    /// Run an experiment described by a TOML config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Compute the settling-time certificate for a configured experiment.
    Certify {
        config: PathBuf,
        #[arg(long, default_value_t = certificates::DEFAULT_HORIZON)]
        horizon: f64,
    },
    /// Probe the problem's regularity constants and report the flags.
    Audit {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
}

/// Exit codes: 0 success, 1 at least one trajectory did not settle,
/// 2 configuration or IO error.
fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    seed: Option<u64>,
    t_end: Option<f64>,
    dt: Option<f64>,
) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = t_end {
        cfg.integrator.t_end = t;
    }
    if let Some(d) = dt {
        cfg.integrator.dt = d;
    }
}

fn settle_code(report: &RunReport) -> ExitCode {
    print!("{}", report.to_text());
    if report.all_settled {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "error: {} trajectories did not settle",
            report
                .outcomes
                .iter()
                .filter(|o| o.terminated != proxflow::integrator::TerminationReason::Settled)
                .count()
        );
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> proxflow::Result<ExitCode> {
    match cli.command {
        Command::RunExample1 { output_dir } => {
            let cfg = harness::example1_config();
            let report = harness::run_config(&cfg, Some(&output_dir))?;
            Ok(settle_code(&report))
        }
        Command::Run {
            config,
            output_dir,
            seed,
            t_end,
            dt,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            apply_overrides(&mut cfg, seed, t_end, dt);
            let report = harness::run_config(&cfg, output_dir.as_deref())?;
            Ok(settle_code(&report))
        }
        Command::Certify { config, horizon } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let resolved = cfg.resolve()?;
            let assumptions = assumption_report(&resolved.problem, 20_000, 10.0, resolved.seed)?;
            let zeta = resolved.problem.zeta().unwrap_or(assumptions.zeta_estimate);
            let lipschitz = resolved
                .problem
                .lipschitz()
                .unwrap_or(assumptions.lipschitz_estimate);
            let mu = resolved.problem.mu();
            println!("problem={}", resolved.name);
            println!("zeta={zeta:.12e}");
            println!("lipschitz={lipschitz:.12e}");
            let result = if resolved.constant_gain_model {
                certificates::contraction_factor(mu, zeta, lipschitz).and_then(|xi| {
                    let beta = |k: &proxflow::dynamics::ScheduleKind| match k {
                        proxflow::dynamics::ScheduleKind::Constant { beta } => *beta,
                        _ => 0.0,
                    };
                    certificates::settling_bound_const(
                        beta(&resolved.schedule.gamma1),
                        beta(&resolved.schedule.gamma2),
                        beta(&resolved.schedule.gamma3),
                        resolved.schedule.rho1,
                        resolved.schedule.rho2,
                        xi,
                        mu,
                        zeta,
                        lipschitz,
                        0.0,
                    )
                })
            } else {
                certificates::settling_bound_tv(&resolved.schedule, mu, zeta, lipschitz, horizon)
            };
            match result {
                Ok(cert) => println!("{cert}"),
                Err(e) => println!("refused={e}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit {
            config,
            seed,
            samples,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let resolved = cfg.resolve()?;
            let seed = seed.unwrap_or(resolved.seed);
            let report = assumption_report(&resolved.problem, samples, 10.0, seed)?;
            println!("problem={}", resolved.name);
            println!("zeta_estimate={:.12e}", report.zeta_estimate);
            println!("lipschitz_estimate={:.12e}", report.lipschitz_estimate);
            println!("a3_satisfied={}", report.a3_satisfied);
            println!("xi_real={}", report.xi_real);
            println!("samples_used={}", report.samples_used);
            println!("contradicts_supplied={}", report.contradicts_supplied);
            // When the contraction regime is certified and a solution is
            // known, audit the four prox-step inequalities as well.
            if let (Some(w_star), Some(zeta), Some(lipschitz)) = (
                resolved.problem.known_solution().map(|w| w.to_vec()),
                resolved.problem.zeta(),
                resolved.problem.lipschitz(),
            ) {
                if let Ok(xi) =
                    certificates::contraction_factor(resolved.problem.mu(), zeta, lipschitz)
                {
                    let audit = contraction_audit(&resolved.problem, &w_star, xi, 1000, seed)?;
                    println!("xi={xi:.12e}");
                    for (i, d) in audit.max_defect.iter().enumerate() {
                        println!("contraction_defect_{}={d:.6e}", i + 1);
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
