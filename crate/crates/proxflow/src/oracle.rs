//! Independent reference computations used to validate the continuous-time
//! solvers: a discrete forward-backward fixed-point iteration, vector-identity
//! checks, the four-part contraction audit of the prox step, and small dense
//! linear-algebra routines (Gaussian elimination, Jacobi eigenvalues) for
//! deriving ground truth in tests.
//!
//! The iteration here is deliberately a different algorithm family from the
//! ODE flows, so agreement between the two is evidence rather than tautology.

use crate::linalg;
use crate::problem::MviProblem;
use crate::rng::Rng;
use crate::{Error, Result};

const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

/// Discrete fixed-point iteration `w <- prox(w - step F(w))`. Its fixed points
/// are exactly the problem solutions for any positive step; `step` defaults to
/// the problem's own `mu` when callers pass [`MviProblem::mu`], but a smaller
/// step may be needed for the iteration (as opposed to the flow) to contract.
pub fn forward_backward_solve(
    p: &MviProblem,
    w0: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> Result<OracleResult> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(
            "oracle step must be positive".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "oracle tolerance must be positive".into(),
        ));
    }
    if w0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: w0.len(),
        });
    }
    let mut w = w0.to_vec();
    let mut iterations = 0;
    loop {
        let fw = p.evaluate(&w)?;
        let mut inner = w.clone();
        linalg::axpy(-step, &fw, &mut inner);
        let h = p.prox_apply_with(&inner, step)?;
        let residual = linalg::distance(&w, &h);
        if residual <= tol {
            return Ok(OracleResult {
                solution: w,
                iterations,
                final_residual: residual,
                converged: true,
            });
        }
        if iterations >= max_iter || linalg::norm(&w) > DIVERGENCE_NORM {
            return Ok(OracleResult {
                solution: w,
                iterations,
                final_residual: residual,
                converged: false,
            });
        }
        w = h;
        iterations += 1;
    }
}

/// Absolute defect of `2 <a-b, c-b> = ||a-b||^2 + ||c-b||^2 - ||a-c||^2`.
pub fn pythagoras_defect(a: &[f64], b: &[f64], c: &[f64]) -> Result<f64> {
    if a.len() != b.len() || b.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len().max(c.len()),
        });
    }
    let ab = linalg::sub(a, b);
    let cb = linalg::sub(c, b);
    let ac = linalg::sub(a, c);
    let lhs = 2.0 * linalg::dot(&ab, &cb);
    let rhs = linalg::dot(&ab, &ab) + linalg::dot(&cb, &cb) - linalg::dot(&ac, &ac);
    Ok((lhs - rhs).abs())
}

/// Worst-case defects of the four contraction inequalities of the prox step
/// `H(w) = prox(w - mu F(w))` around a solution `w*`, sampled in a ball of
/// radius 10. Positive entries are violations.
#[derive(Debug, Clone)]
pub struct ContractionAudit {
    /// (i)   ||H(w) - w*|| <= xi ||w - w*||
    /// (ii)  <w - H(w), w* - H(w)> <= ||w - H(w)||^2
    /// (iii) <w - w*, w - H(w)> >= (1 - xi) ||w - w*||^2
    /// (iv)  ||w - H(w)|| >= (1 - xi) ||w - w*||
    pub max_defect: [f64; 4],
    pub samples: usize,
}

impl ContractionAudit {
    pub fn all_within(&self, tol: f64) -> bool {
        self.max_defect.iter().all(|d| *d <= tol)
    }
}

pub const AUDIT_RADIUS: f64 = 10.0;

pub fn contraction_audit(
    p: &MviProblem,
    w_star: &[f64],
    xi: f64,
    samples: usize,
    seed: u64,
) -> Result<ContractionAudit> {
    if w_star.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: w_star.len(),
        });
    }
    let mut rng = Rng::new(seed);
    let mut max_defect = [f64::NEG_INFINITY; 4];
    let audit_point = |w: &[f64], max_defect: &mut [f64; 4]| -> Result<()> {
        let fw = p.evaluate(w)?;
        let mut inner = w.to_vec();
        linalg::axpy(-p.mu(), &fw, &mut inner);
        let h = p.prox_apply(&inner)?;
        let dist = linalg::distance(w, w_star);
        let h_dist = linalg::distance(&h, w_star);
        let phi = linalg::sub(w, &h);
        let phi_norm = linalg::norm(&phi);
        let d1 = h_dist - xi * dist;
        let d2 = linalg::dot(&phi, &linalg::sub(w_star, &h)) - phi_norm * phi_norm;
        let d3 = (1.0 - xi) * dist * dist - linalg::dot(&linalg::sub(w, w_star), &phi);
        let d4 = (1.0 - xi) * dist - phi_norm;
        for (slot, d) in max_defect.iter_mut().zip([d1, d2, d3, d4]) {
            *slot = slot.max(d);
        }
        Ok(())
    };
    // The solution itself is always part of the audit; every inequality holds
    // there with equality.
    audit_point(w_star, &mut max_defect)?;
    for _ in 0..samples {
        let w = rng.in_ball(w_star, AUDIT_RADIUS);
        audit_point(&w, &mut max_defect)?;
    }
    Ok(ContractionAudit {
        max_defect,
        samples: samples + 1,
    })
}

/// Left-hand side of the variational inequality at a candidate solution:
/// `<F(w*), y - w*> + psi(y) - psi(w*)`. Nonnegative for all feasible `y`
/// exactly when `w*` solves the problem.
pub fn mvi_inequality_value(p: &MviProblem, w_star: &[f64], y: &[f64]) -> Result<f64> {
    let fw = p.evaluate(w_star)?;
    let gap = linalg::dot(&fw, &linalg::sub(y, w_star));
    Ok(gap + p.prox().psi(y) - p.prox().psi(w_star))
}

/// Minimum of [`mvi_inequality_value`] over sampled feasible points (raw ball
/// samples pushed into the domain by the problem's own projection).
pub fn mvi_inequality_min(
    p: &MviProblem,
    w_star: &[f64],
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = Rng::new(seed);
    let mut min_val = f64::INFINITY;
    for _ in 0..samples {
        let raw = rng.in_ball(w_star, radius);
        let y = p.prox_apply_with(&raw, 1.0)?;
        min_val = min_val.min(mvi_inequality_value(p, w_star, &y)?);
    }
    Ok(min_val)
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-14 {
            return Err(Error::InvalidParameter("singular linear system".into()));
        }
        m.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
        }
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: 0,
        });
    }
    let mut m = a.to_vec();
    let scale: f64 = m
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[i][j].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                if m[i][j].abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (m[j][j] - m[i][i]) / m[i][j];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mik = m[i][k];
                    let mjk = m[j][k];
                    m[i][k] = c * mik - s * mjk;
                    m[j][k] = s * mik + c * mjk;
                }
                for k in 0..n {
                    let mki = m[k][i];
                    let mkj = m[k][j];
                    m[k][i] = c * mki - s * mkj;
                    m[k][j] = s * mki + c * mkj;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    Ok(eig)
}
