//! Named benchmark problems addressable from the CLI and the bindings.
//!
//! - `example1-ncp`: 5-dimensional nonlinear complementarity problem with
//!   operator `F(w) = arctan(w) + B w + p`, tridiagonal SPD `B`, and the
//!   offset `p` constructed so that `w* = (1, 2.8, 0.5, 0, 1.5)` is the exact
//!   equilibrium.
//! - `linear-sym`: rotated SPD linear operator with exactly known modulus
//!   and Lipschitz constant (1 and 2) and an interior nonnegative solution;
//!   the step condition holds, so every certificate applies.
//! - `lasso-cop`: 5x5 well-conditioned least squares plus an l1 term, fed
//!   through the composite adapter.
//! - `quadratic-minimax`: 3+3 quadratic saddle through the stacked adapter,
//!   with the solution pinned by a dense linear solve.

use std::sync::Arc;

use crate::applications::{cop_to_mvi, minimax_to_mvi, quadratic_saddle, CompositeProblem};
use crate::dynamics::GainSchedule;
use crate::integrator::{IntegratorConfig, Method};
use crate::linalg;
use crate::oracle::dense_solve;
use crate::problem::{linear_problem, MviProblem, OperatorFn};
use crate::prox::ProxKind;
use crate::rng::Rng;
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 4] = [
    "example1-ncp",
    "linear-sym",
    "lasso-cop",
    "quadratic-minimax",
];

/// A shipped problem together with its default run parameters.
pub struct Preset {
    pub name: &'static str,
    pub problem: MviProblem,
    pub schedule: GainSchedule,
    pub integrator: IntegratorConfig,
    /// Step for the discrete reference iteration; chosen so that iteration
    /// contracts (it may need to be smaller than the problem's own mu).
    pub oracle_step: f64,
    /// Default initial conditions for batch runs.
    pub initial_conditions: Vec<Vec<f64>>,
}

pub fn by_name(name: &str) -> Result<Preset> {
    match name {
        "example1-ncp" => Ok(example1_ncp()),
        "linear-sym" => Ok(linear_sym()),
        "lasso-cop" => Ok(lasso_cop()),
        "quadratic-minimax" => Ok(quadratic_minimax()),
        other => Err(Error::Config(format!(
            "unknown preset '{other}'; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Tridiagonal matrix of the complementarity benchmark.
pub fn example1_matrix() -> Vec<Vec<f64>> {
    let n = 5;
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        b[i][i] = 3.0;
        if i + 1 < n {
            b[i][i + 1] = -1.0;
            b[i + 1][i] = -1.0;
        }
    }
    b
}

pub fn example1_solution() -> Vec<f64> {
    vec![1.0, 2.8, 0.5, 0.0, 1.5]
}

/// Offset vector `p = -arctan(w*) - B w*`, computed (not transcribed) so the
/// operator vanishes at the solution to the last bit.
pub fn example1_offset() -> Vec<f64> {
    let b = example1_matrix();
    let w_star = example1_solution();
    let bw = linalg::matvec(&b, &w_star);
    w_star
        .iter()
        .zip(&bw)
        .map(|(w, bw_i)| -(w.atan() + bw_i))
        .collect()
}

/// The five benchmark initial conditions.
pub fn example1_initial_conditions() -> Vec<Vec<f64>> {
    vec![
        vec![5.0, 1.0, 2.0, 4.0, -2.5],
        vec![-4.0, 2.5, 2.0, 3.0, 1.0],
        vec![3.5, -3.0, 4.0, 2.0, 2.5],
        vec![2.0, 4.0, 3.0, -1.0, 3.5],
        vec![1.5, 5.0, -0.5, 0.2, 4.0],
    ]
}

fn example1_ncp() -> Preset {
    let b = example1_matrix();
    let p_vec = example1_offset();
    let operator: OperatorFn = Arc::new(move |w: &[f64]| {
        let bw = linalg::matvec(&b, w);
        w.iter()
            .zip(&bw)
            .zip(&p_vec)
            .map(|((wi, bwi), pi)| wi.atan() + bwi + pi)
            .collect()
    });
    let problem = MviProblem::new(5, operator, ProxKind::IndicatorNonneg, 0.5)
        .expect("static preset data is valid")
        .with_known_solution(example1_solution())
        .expect("dimension matches");
    Preset {
        name: "example1-ncp",
        problem,
        schedule: GainSchedule::constant(50.0, 50.0, 20.0, 0.5, 1.6).expect("valid schedule"),
        integrator: IntegratorConfig::default(),
        // The iteration w <- prox(w - s F(w)) contracts for s L^2 < 2 zeta with
        // the ball estimates zeta ~ 1.27, L ~ 5.73; 0.05 sits safely inside.
        oracle_step: 0.05,
        initial_conditions: example1_initial_conditions(),
    }
}

/// Householder reflection `I - 2 v v^T / ||v||^2` applied as `Q D Q^T`.
fn rotated_spd(diag: &[f64], v: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let vn2: f64 = v.iter().map(|x| x * x).sum();
    let q = |i: usize, j: usize| -> f64 {
        let id = if i == j { 1.0 } else { 0.0 };
        id - 2.0 * v[i] * v[j] / vn2
    };
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| q(i, k) * diag[k] * q(j, k)).sum())
                .collect()
        })
        .collect()
}

pub fn linear_sym_solution() -> Vec<f64> {
    vec![1.0, 2.0, 0.5, 3.0, 1.5]
}

fn linear_sym() -> Preset {
    // Spectrum {1, ..., 2}: modulus exactly 1, Lipschitz constant exactly 2
    // (up to the roundoff of the similarity transform).
    let a = rotated_spd(&[1.0, 1.2, 1.5, 1.8, 2.0], &[1.0, -1.0, 2.0, 0.5, 1.5]);
    let w_bar = linear_sym_solution();
    // F(w_bar) = 0 with w_bar interior to the orthant: exact solution.
    let offset = linalg::scaled(-1.0, &linalg::matvec(&a, &w_bar));
    let mu = 0.4; // mu L^2 = 1.6 < 2 zeta = 2
    let problem = linear_problem(a, offset, ProxKind::IndicatorNonneg, mu)
        .expect("static preset data is valid")
        .with_constants(Some(1.0), Some(2.0))
        .expect("positive constants")
        .with_known_solution(w_bar)
        .expect("dimension matches");
    Preset {
        name: "linear-sym",
        problem,
        schedule: GainSchedule::constant(50.0, 50.0, 20.0, 0.5, 1.6).expect("valid schedule"),
        integrator: IntegratorConfig::default(),
        oracle_step: 0.4,
        initial_conditions: vec![
            vec![5.0, -1.0, 0.0, 2.0, 8.0],
            vec![-3.0, 4.0, 1.0, -2.0, 0.5],
        ],
    }
}

fn lasso_cop() -> Preset {
    // Fixed-seed well-conditioned design matrix: 2I plus a small uniform
    // perturbation.
    let mut rng = Rng::new(0x1a550);
    let dim = 5;
    let mut a = vec![vec![0.0; dim]; dim];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 2.0 } else { 0.0 } + 0.2 * rng.uniform_in(-1.0, 1.0);
        }
    }
    let x_true = vec![1.5, -2.0, 0.0, 0.0, 3.0];
    let b = linalg::matvec(&a, &x_true);
    let a_arc = Arc::new(a);
    let b_arc = Arc::new(b);
    let at = Arc::new(linalg::transpose(&a_arc));
    let grad_h: OperatorFn = Arc::new(move |w: &[f64]| {
        let mut r = linalg::matvec(&a_arc, w);
        for (ri, bi) in r.iter_mut().zip(b_arc.iter()) {
            *ri -= bi;
        }
        linalg::matvec(&at, &r)
    });
    let composite = CompositeProblem {
        dim,
        grad_h,
        psi: ProxKind::L1 { weight: 0.5 },
        mu: 0.1,
        known_minimizer: None,
    };
    let problem = cop_to_mvi(&composite).expect("static preset data is valid");
    Preset {
        name: "lasso-cop",
        problem,
        // Dead zone below the tight stop tolerance used for oracle comparison.
        schedule: GainSchedule::constant(5.0, 5.0, 1.0, 0.5, 2.0)
            .and_then(|g| g.with_deadzone(1e-12))
            .expect("valid schedule"),
        integrator: IntegratorConfig {
            method: Method::Rk4AdaptiveClip,
            dt: 1e-3,
            t0: 0.0,
            t_end: 20.0,
            stop_residual: 1e-10,
            max_steps: 5_000_000,
            record_stride: 100,
        },
        oracle_step: 0.1,
        initial_conditions: vec![vec![4.0; 5], vec![-2.0, 1.0, 0.0, 3.0, -1.0]],
    }
}

fn quadratic_minimax() -> Preset {
    let p_mat = vec![
        vec![2.0, 0.3, 0.0],
        vec![0.3, 2.5, 0.2],
        vec![0.0, 0.2, 3.0],
    ];
    let q_mat = vec![
        vec![0.5, -0.2, 0.1],
        vec![0.0, 0.4, -0.3],
        vec![0.2, 0.1, 0.6],
    ];
    let r_mat = vec![
        vec![2.5, 0.0, 0.3],
        vec![0.0, 2.0, 0.1],
        vec![0.3, 0.1, 2.2],
    ];
    let a_vec = vec![1.0, -2.0, 0.5];
    let b_vec = vec![0.5, 1.0, -1.5];
    let minimax = quadratic_saddle(
        p_mat.clone(),
        q_mat.clone(),
        r_mat.clone(),
        a_vec.clone(),
        b_vec.clone(),
        ProxKind::Zero,
        ProxKind::Zero,
        0.1,
    );
    // Stacked first-order system [P Q; -Q^T R] z = (-a; b) pins the solution.
    let mut kkt = vec![vec![0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            kkt[i][j] = p_mat[i][j];
            kkt[i][j + 3] = q_mat[i][j];
            kkt[i + 3][j] = -q_mat[j][i];
            kkt[i + 3][j + 3] = r_mat[i][j];
        }
    }
    let rhs: Vec<f64> = a_vec
        .iter()
        .map(|v| -v)
        .chain(b_vec.iter().copied())
        .collect();
    let z_star = dense_solve(&kkt, &rhs).expect("saddle system is nonsingular");
    let problem = minimax_to_mvi(&minimax)
        .expect("static preset data is valid")
        .with_known_solution(z_star)
        .expect("dimension matches");
    Preset {
        name: "quadratic-minimax",
        problem,
        schedule: GainSchedule::constant(20.0, 20.0, 5.0, 0.5, 1.6)
            .and_then(|g| g.with_deadzone(1e-12))
            .expect("valid schedule"),
        integrator: IntegratorConfig {
            method: Method::Rk4AdaptiveClip,
            dt: 1e-3,
            t0: 0.0,
            t_end: 10.0,
            stop_residual: 1e-10,
            max_steps: 5_000_000,
            record_stride: 100,
        },
        oracle_step: 0.1,
        initial_conditions: vec![vec![1.0; 6], vec![3.0, -2.0, 1.0, 0.0, 2.0, -1.0]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::residual_norm;

    #[test]
    fn offset_vector_matches_printed_values() {
        let p = example1_offset();
        let printed = [-0.9854, -8.1278, 0.8364, 2.0000, -5.4828];
        for (got, want) in p.iter().zip(&printed) {
            assert!((got - want).abs() < 5e-5, "offset {got} vs printed {want}");
        }
    }

    #[test]
    fn example1_operator_vanishes_at_solution() {
        let preset = by_name("example1-ncp").unwrap();
        let f = preset.problem.evaluate(&example1_solution()).unwrap();
        for v in &f {
            assert!(v.abs() < 1e-12, "operator value {v}");
        }
        // The solution is nonnegative, so the natural residual vanishes too.
        assert!(residual_norm(&preset.problem, &example1_solution()).unwrap() < 1e-12);
    }

    #[test]
    fn example1_operator_at_origin_equals_offset() {
        let preset = by_name("example1-ncp").unwrap();
        let f = preset.problem.evaluate(&[0.0; 5]).unwrap();
        let p = example1_offset();
        for (a, b) in f.iter().zip(&p) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn linear_sym_solution_is_exact() {
        let preset = by_name("linear-sym").unwrap();
        let r = residual_norm(&preset.problem, &linear_sym_solution()).unwrap();
        assert!(r < 1e-13, "residual {r}");
        assert_eq!(preset.problem.zeta(), Some(1.0));
        assert_eq!(preset.problem.lipschitz(), Some(2.0));
    }

    #[test]
    fn quadratic_minimax_solution_is_pinned() {
        let preset = by_name("quadratic-minimax").unwrap();
        let z = preset.problem.known_solution().unwrap().to_vec();
        let r = residual_norm(&preset.problem, &z).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn all_presets_resolve_and_validate() {
        for name in PRESET_NAMES {
            let preset = by_name(name).unwrap();
            assert_eq!(preset.name, name);
            preset.schedule.validate().unwrap();
            preset.integrator.validate().unwrap();
            assert!(!preset.initial_conditions.is_empty());
            for ic in &preset.initial_conditions {
                assert_eq!(ic.len(), preset.problem.dim());
            }
        }
        assert!(by_name("nope").is_err());
    }
}
