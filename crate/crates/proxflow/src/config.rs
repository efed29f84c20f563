//! Experiment configuration: a versioned TOML schema with strict validation
//! (unknown keys are errors) and resolution into runnable objects.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dynamics::{DisturbanceSpec, GainSchedule, ScheduleKind, Variant};
use crate::integrator::{IntegratorConfig, Method};
use crate::presets;
use crate::problem::{linear_problem, MviProblem};
use crate::prox::ProxKind;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    pub problem: ProblemSpec,
    pub model: ModelSpec,
    /// When present, the run executes the clean batch and a disturbed batch
    /// (unless the variant is `disturbed`, which runs only the latter).
    #[serde(default)]
    pub disturbance: Option<DisturbanceSpec>,
    pub integrator: IntegratorSpec,
    pub initial_conditions: Vec<Vec<f64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

/// Either a named preset or an inline linear problem.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub linear: Option<LinearSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub prox: ProxKind,
    pub mu: f64,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub known_solution: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// One of `tvpnm`, `nl`, `fxt`, `pdm`, `disturbed`.
    pub variant: String,
    pub rho1: f64,
    pub rho2: f64,
    pub gamma1: ScheduleKind,
    pub gamma2: ScheduleKind,
    pub gamma3: ScheduleKind,
    #[serde(default)]
    pub deadzone: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_method")]
    pub method: String,
    pub dt: f64,
    #[serde(default)]
    pub t0: f64,
    pub t_end: f64,
    #[serde(default = "default_stop_residual")]
    pub stop_residual: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
}

fn default_method() -> String {
    "rk4_adaptive_clip".into()
}

fn default_stop_residual() -> f64 {
    1e-8
}

fn default_max_steps() -> usize {
    2_000_000
}

fn default_record_stride() -> usize {
    10
}

/// Everything needed to execute a run, resolved from a validated config.
#[derive(Debug)]
pub struct ResolvedExperiment {
    pub name: String,
    pub problem: MviProblem,
    pub schedule: GainSchedule,
    pub variant: Variant,
    pub run_clean: bool,
    pub run_disturbed: bool,
    pub disturbance: Option<DisturbanceSpec>,
    pub integrator: IntegratorConfig,
    pub initial_conditions: Vec<Vec<f64>>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// The constant-gain projection certificate applies instead of the
    /// time-varying one.
    pub constant_gain_model: bool,
    pub oracle_step: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Build the runnable experiment, validating every field along the way.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.initial_conditions.is_empty() {
            return Err(Error::Config(
                "at least one initial condition is required".into(),
            ));
        }

        let (name, problem, oracle_step) = match (&self.problem.preset, &self.problem.linear) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "problem must specify exactly one of `preset` or `linear`".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "problem must specify one of `preset` or `linear`".into(),
                ))
            }
            (Some(name), None) => {
                let preset = presets::by_name(name)?;
                (preset.name.to_string(), preset.problem, preset.oracle_step)
            }
            (None, Some(spec)) => {
                let problem = linear_problem(
                    spec.matrix.clone(),
                    spec.offset.clone(),
                    spec.prox.clone(),
                    spec.mu,
                )
                .map_err(|e| Error::Config(format!("invalid linear problem: {e}")))?
                .with_constants(spec.zeta, spec.lipschitz)
                .map_err(|e| Error::Config(format!("invalid constants: {e}")))?;
                let problem = match &spec.known_solution {
                    Some(w) => problem
                        .with_known_solution(w.clone())
                        .map_err(|e| Error::Config(format!("invalid known solution: {e}")))?,
                    None => problem,
                };
                ("linear-inline".to_string(), problem, spec.mu)
            }
        };

        for (i, ic) in self.initial_conditions.iter().enumerate() {
            if ic.len() != problem.dim() {
                return Err(Error::Config(format!(
                    "initial condition {} has dimension {} (problem has {})",
                    i + 1,
                    ic.len(),
                    problem.dim()
                )));
            }
        }

        let mut schedule = GainSchedule {
            gamma1: self.model.gamma1.clone(),
            gamma2: self.model.gamma2.clone(),
            gamma3: self.model.gamma3.clone(),
            rho1: self.model.rho1,
            rho2: self.model.rho2,
            deadzone: self
                .model
                .deadzone
                .unwrap_or(crate::dynamics::DEFAULT_DEADZONE),
            t0: self.integrator.t0,
        };
        schedule
            .validate()
            .map_err(|e| Error::Config(format!("invalid model: {e}")))?;

        let (variant, run_disturbed_only, constant_gain_model) = match self.model.variant.as_str() {
            "tvpnm" => (Variant::Full, false, false),
            "nl" => (Variant::Normalized, false, false),
            "fxt" => (Variant::FractionalOnly, false, false),
            "pdm" => (Variant::Full, false, true),
            "disturbed" => (Variant::Full, true, false),
            other => {
                return Err(Error::Config(format!(
                    "unknown model variant '{other}' (expected tvpnm, nl, fxt, pdm, disturbed)"
                )))
            }
        };
        if constant_gain_model {
            let all_constant = matches!(schedule.gamma1, ScheduleKind::Constant { .. })
                && matches!(schedule.gamma2, ScheduleKind::Constant { .. })
                && matches!(schedule.gamma3, ScheduleKind::Constant { .. });
            if !all_constant {
                return Err(Error::Config(
                    "variant `pdm` requires constant gain schedules".into(),
                ));
            }
            if !problem.prox().is_indicator() {
                return Err(Error::Config(
                    "variant `pdm` requires an indicator (projection) prox".into(),
                ));
            }
        }

        if let Some(d) = &self.disturbance {
            d.validate()
                .map_err(|e| Error::Config(format!("invalid disturbance: {e}")))?;
            let needs_solution = !matches!(d, DisturbanceSpec::None);
            if needs_solution && problem.known_solution().is_none() {
                return Err(Error::Config(
                    "disturbance models are defined relative to a known solution".into(),
                ));
            }
        }
        if run_disturbed_only
            && !matches!(&self.disturbance, Some(d) if !matches!(d, DisturbanceSpec::None))
        {
            return Err(Error::Config(
                "variant `disturbed` requires a disturbance section".into(),
            ));
        }
        let have_disturbance =
            matches!(&self.disturbance, Some(d) if !matches!(d, DisturbanceSpec::None));

        let method = match self.integrator.method.as_str() {
            "rk4_fixed" => Method::Rk4Fixed,
            "rk4_adaptive_clip" => Method::Rk4AdaptiveClip,
            other => {
                return Err(Error::Config(format!(
                    "unknown integrator method '{other}' (expected rk4_fixed, rk4_adaptive_clip)"
                )))
            }
        };
        let integrator = IntegratorConfig {
            method,
            dt: self.integrator.dt,
            t0: self.integrator.t0,
            t_end: self.integrator.t_end,
            stop_residual: self.integrator.stop_residual,
            max_steps: self.integrator.max_steps,
            record_stride: self.integrator.record_stride,
        };
        integrator
            .validate()
            .map_err(|e| Error::Config(format!("invalid integrator: {e}")))?;
        if integrator.stop_residual < schedule.deadzone {
            return Err(Error::Config(
                "stop_residual must be at least the dynamics dead zone".into(),
            ));
        }
        schedule.t0 = integrator.t0;

        Ok(ResolvedExperiment {
            name,
            problem,
            schedule,
            variant,
            run_clean: !run_disturbed_only,
            run_disturbed: have_disturbance,
            disturbance: self.disturbance.clone(),
            integrator,
            initial_conditions: self.initial_conditions.clone(),
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            constant_gain_model,
            oracle_step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> String {
        r#"
schema = 1
initial_conditions = [[5.0, 1.0, 2.0, 4.0, -2.5]]

[problem]
preset = "example1-ncp"

[model]
variant = "pdm"
rho1 = 0.5
rho2 = 1.6
gamma1 = { kind = "constant", beta = 50.0 }
gamma2 = { kind = "constant", beta = 50.0 }
gamma3 = { kind = "constant", beta = 20.0 }

[integrator]
dt = 1e-4
t_end = 2.0
"#
        .to_string()
    }

    #[test]
    fn minimal_config_resolves() {
        let cfg = ExperimentConfig::from_toml_str(&minimal_toml()).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.name, "example1-ncp");
        assert!(resolved.run_clean);
        assert!(!resolved.run_disturbed);
        assert!(resolved.constant_gain_model);
        assert_eq!(resolved.seed, 42);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = minimal_toml().replace("[integrator]", "[integrator]\ntypo_key = 1.0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn rho_out_of_range_is_rejected() {
        let bad = minimal_toml().replace("rho1 = 0.5", "rho1 = 1.5");
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("rho1"), "{err}");
    }

    #[test]
    fn missing_initial_conditions_rejected() {
        let bad = minimal_toml().replace(
            "initial_conditions = [[5.0, 1.0, 2.0, 4.0, -2.5]]",
            "initial_conditions = []",
        );
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn wrong_schema_rejected() {
        let bad = minimal_toml().replace("schema = 1", "schema = 3");
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let bad = minimal_toml().replace(
            "initial_conditions = [[5.0, 1.0, 2.0, 4.0, -2.5]]",
            "initial_conditions = [[5.0, 1.0]]",
        );
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn inline_linear_problem_resolves() {
        let text = r#"
schema = 1
initial_conditions = [[3.0, -1.0]]
seed = 9

[problem.linear]
matrix = [[2.0, 0.0], [0.0, 2.0]]
offset = [-2.0, 4.0]
prox = { kind = "indicator_nonneg" }
mu = 0.3
known_solution = [1.0, 0.0]

[model]
variant = "tvpnm"
rho1 = 0.5
rho2 = 2.0
gamma1 = { kind = "power", c = 2.0, a = 0.5 }
gamma2 = { kind = "constant", beta = 1.0 }
gamma3 = { kind = "constant", beta = 0.5 }

[integrator]
dt = 1e-3
t_end = 5.0
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.problem.dim(), 2);
        assert_eq!(resolved.seed, 9);
        assert!(!resolved.constant_gain_model);
    }

    #[test]
    fn pdm_requires_constant_schedules_and_indicator() {
        let bad = minimal_toml().replace(
            "gamma1 = { kind = \"constant\", beta = 50.0 }",
            "gamma1 = { kind = \"power\", c = 50.0, a = 0.1 }",
        );
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn disturbed_variant_requires_disturbance() {
        let bad = minimal_toml().replace("variant = \"pdm\"", "variant = \"disturbed\"");
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn sinusoidal_disturbance_tag_parses() {
        let text = minimal_toml()
            + r#"
[disturbance]
kind = "sinusoidal_bounded"
amplitude = 0.2
frequency = 3.0
"#;
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert!(resolved.run_disturbed);
        assert_eq!(
            resolved.disturbance,
            Some(DisturbanceSpec::SinusoidalBounded {
                amplitude: 0.2,
                frequency: 3.0
            })
        );
    }
}
