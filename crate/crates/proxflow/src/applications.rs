//! Adapters that reduce composite minimization and minimax problems to the
//! variational-inequality machinery.
//!
//! Composite problems `min h(w) + psi(w)` map to the operator `F = grad h`
//! with the nonsmooth part carried by the prox; running the time-varying
//! dynamics on the converted problem *is* the proximal-gradient flow (same
//! code path, no translation layer). Minimax problems map to the stacked
//! operator `(grad_w M, -grad_y M)` with a blockwise prox.

use std::sync::Arc;

use crate::linalg;
use crate::problem::{MviProblem, OperatorFn};
use crate::prox::{prox_apply, ProxKind, ProxOp};
use crate::rng::Rng;
use crate::{Error, Result};

/// `min_w h(w) + psi(w)` with smooth `h` given through its gradient.
#[derive(Clone)]
pub struct CompositeProblem {
    pub dim: usize,
    pub grad_h: OperatorFn,
    pub psi: ProxKind,
    pub mu: f64,
    pub known_minimizer: Option<Vec<f64>>,
}

/// View the composite problem as a variational inequality with `F = grad h`.
pub fn cop_to_mvi(c: &CompositeProblem) -> Result<MviProblem> {
    let p = MviProblem::new(c.dim, c.grad_h.clone(), c.psi.clone(), c.mu)?;
    match &c.known_minimizer {
        Some(w) => p.with_known_solution(w.clone()),
        None => Ok(p),
    }
}

/// Fixed-point optimality test: `||w - prox(w - mu grad h(w))|| <= tol`.
pub fn check_cop_optimality(c: &CompositeProblem, w: &[f64], tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let p = cop_to_mvi(c)?;
    Ok(crate::dynamics::residual_norm(&p, w)? <= tol)
}

pub type BivariateGrad = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type BivariateValue = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// `inf_w sup_y M(w, y)` with blockwise nonsmooth terms. The value map is
/// optional; it is only needed for the saddle-value check.
#[derive(Clone)]
pub struct MinimaxProblem {
    pub dim_w: usize,
    pub dim_y: usize,
    pub grad_w: BivariateGrad,
    pub grad_y: BivariateGrad,
    pub psi1: ProxKind,
    pub psi2: ProxKind,
    pub value: Option<BivariateValue>,
    /// Blockwise pseudomonotonicity moduli, when known; the stacked modulus
    /// is their minimum.
    pub zeta_w: Option<f64>,
    pub zeta_y: Option<f64>,
    /// Prox step for the stacked problem.
    pub mu: f64,
}

/// Stack the two gradient blocks into one operator `z = (w, y) ->
/// (grad_w M, -grad_y M)` with the blockwise prox.
pub fn minimax_to_mvi(m: &MinimaxProblem) -> Result<MviProblem> {
    let dim = m.dim_w + m.dim_y;
    let dim_w = m.dim_w;
    let grad_w = m.grad_w.clone();
    let grad_y = m.grad_y.clone();
    let operator: OperatorFn = Arc::new(move |z: &[f64]| {
        let (w, y) = z.split_at(dim_w);
        let mut out = grad_w(w, y);
        out.extend(grad_y(w, y).into_iter().map(|v| -v));
        out
    });
    let prox = ProxOp::Blocks(vec![(m.dim_w, m.psi1.clone()), (m.dim_y, m.psi2.clone())]);
    let zeta = match (m.zeta_w, m.zeta_y) {
        (Some(a), Some(b)) => Some(a.min(b)),
        _ => None,
    };
    MviProblem::new(dim, operator, prox, m.mu)?.with_constants(zeta, None)
}

/// Outcome of sampling `M(w*, y)` over feasible probe points.
#[derive(Debug, Clone)]
pub struct SaddleValueReport {
    /// `M(w*, w*)`; zero for the gap-form family.
    pub value_at_self: f64,
    /// Largest sampled `M(w*, y)`; nonpositive when `w*` attains the infimum.
    pub max_probe_value: f64,
    pub probes_used: usize,
    pub holds: bool,
}

const SELF_VALUE_TOL: f64 = 1e-12;
const PROBE_RADIUS: f64 = 10.0;

/// Sample probe points `y` around the y-block of `z_star` (pushed into the
/// domain of `psi2` by its own projection) and report the largest value of
/// `M(w*, y)` together with `M(w*, w*)`.
pub fn check_saddle_value(
    m: &MinimaxProblem,
    z_star: &[f64],
    probes: usize,
    seed: u64,
    tol: f64,
) -> Result<SaddleValueReport> {
    let value = m.value.as_ref().ok_or(Error::MissingValueFunction)?;
    if z_star.len() != m.dim_w + m.dim_y {
        return Err(Error::DimensionMismatch {
            expected: m.dim_w + m.dim_y,
            got: z_star.len(),
        });
    }
    if m.dim_w != m.dim_y {
        return Err(Error::InvalidParameter(
            "saddle-value check needs matching block dimensions".into(),
        ));
    }
    let (w_star, y_star) = z_star.split_at(m.dim_w);
    let value_at_self = value(w_star, w_star);
    let mut rng = Rng::new(seed);
    let mut max_probe_value = f64::NEG_INFINITY;
    for _ in 0..probes {
        let raw = rng.in_ball(y_star, PROBE_RADIUS);
        let y = prox_apply(&m.psi2, &raw, 1.0)?;
        max_probe_value = max_probe_value.max(value(w_star, &y));
    }
    Ok(SaddleValueReport {
        value_at_self,
        max_probe_value,
        probes_used: probes,
        holds: value_at_self.abs() <= SELF_VALUE_TOL && max_probe_value <= tol,
    })
}

/// Gap-form minimax `M(w, y) = <F(w), w - y> + psi(w) - psi(y)` for a linear
/// operator `F(w) = A w + b`. Solving the underlying variational inequality is
/// equivalent to driving `inf sup M` to zero. The gradient blocks use the
/// smooth part only, so conversion to a stacked problem is meaningful for
/// `psi = zero`; the value map (used by the saddle check) carries psi in full.
pub fn gap_minimax(
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
    psi: ProxKind,
    mu: f64,
) -> MinimaxProblem {
    let dim = offset.len();
    let a1 = Arc::new(matrix);
    let b1 = Arc::new(offset);
    let psi_val = psi.clone();
    let (a2, b2) = (a1.clone(), b1.clone());
    let (a3, b3) = (a1.clone(), b1.clone());
    let value: BivariateValue = Arc::new(move |w: &[f64], y: &[f64]| {
        let mut fw = linalg::matvec(&a1, w);
        for (f, b) in fw.iter_mut().zip(b1.iter()) {
            *f += b;
        }
        linalg::dot(&fw, &linalg::sub(w, y)) + psi_val.psi(w) - psi_val.psi(y)
    });
    let grad_w: BivariateGrad = Arc::new(move |w: &[f64], y: &[f64]| {
        // d/dw [<A w + b, w - y>] = A^T (w - y) + A w + b
        let diff = linalg::sub(w, y);
        let at_diff = linalg::matvec(&linalg::transpose(&a2), &diff);
        let mut fw = linalg::matvec(&a2, w);
        for ((f, b), t) in fw.iter_mut().zip(b2.iter()).zip(&at_diff) {
            *f += b + t;
        }
        fw
    });
    let grad_y: BivariateGrad = Arc::new(move |w: &[f64], _y: &[f64]| {
        let mut fw = linalg::matvec(&a3, w);
        for (f, b) in fw.iter_mut().zip(b3.iter()) {
            *f += b;
        }
        linalg::scaled(-1.0, &fw)
    });
    MinimaxProblem {
        dim_w: dim,
        dim_y: dim,
        grad_w,
        grad_y,
        psi1: psi.clone(),
        psi2: psi,
        value: Some(value),
        zeta_w: None,
        zeta_y: None,
        mu,
    }
}

/// Quadratic saddle `M = 1/2 w'Pw + w'Qy - 1/2 y'Ry + a'w + b'y` with
/// symmetric positive definite `P`, `R`.
#[allow(clippy::too_many_arguments)]
pub fn quadratic_saddle(
    p_mat: Vec<Vec<f64>>,
    q_mat: Vec<Vec<f64>>,
    r_mat: Vec<Vec<f64>>,
    a_vec: Vec<f64>,
    b_vec: Vec<f64>,
    psi1: ProxKind,
    psi2: ProxKind,
    mu: f64,
) -> MinimaxProblem {
    let dim_w = a_vec.len();
    let dim_y = b_vec.len();
    let p1 = Arc::new(p_mat);
    let q1 = Arc::new(q_mat);
    let r1 = Arc::new(r_mat);
    let a1 = Arc::new(a_vec);
    let b1 = Arc::new(b_vec);
    let (p2, q2, a2) = (p1.clone(), q1.clone(), a1.clone());
    let (q3, r3, b3) = (q1.clone(), r1.clone(), b1.clone());
    let value: BivariateValue = Arc::new(move |w: &[f64], y: &[f64]| {
        let pw = linalg::matvec(&p1, w);
        let qy = linalg::matvec(&q1, y);
        let ry = linalg::matvec(&r1, y);
        0.5 * linalg::dot(w, &pw) + linalg::dot(w, &qy) - 0.5 * linalg::dot(y, &ry)
            + linalg::dot(&a1, w)
            + linalg::dot(&b1, y)
    });
    let grad_w: BivariateGrad = Arc::new(move |w: &[f64], y: &[f64]| {
        let mut out = linalg::matvec(&p2, w);
        let qy = linalg::matvec(&q2, y);
        for ((o, q), a) in out.iter_mut().zip(&qy).zip(a2.iter()) {
            *o += q + a;
        }
        out
    });
    let grad_y: BivariateGrad = Arc::new(move |w: &[f64], y: &[f64]| {
        // grad_y M = Q^T w - R y + b
        let qt_w = linalg::matvec(&linalg::transpose(&q3), w);
        let ry = linalg::matvec(&r3, y);
        qt_w.iter()
            .zip(&ry)
            .zip(b3.iter())
            .map(|((q, r), b)| q - r + b)
            .collect()
    });
    MinimaxProblem {
        dim_w,
        dim_y,
        grad_w,
        grad_y,
        psi1,
        psi2,
        value: Some(value),
        zeta_w: None,
        zeta_y: None,
        mu,
    }
}
