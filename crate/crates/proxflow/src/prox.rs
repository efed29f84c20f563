//! Closed-form proximal operators.
//!
//! `prox_apply(kind, v, mu)` returns the unique minimizer of
//! `psi(z) + ||v - z||^2 / (2 mu)`. Indicator kinds reduce to metric
//! projection (independent of `mu`); the l1 kind is componentwise soft
//! thresholding at `mu * weight`.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Absolute tolerance for the variational-inequality checks in this module.
pub const INEQ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProxKind {
    /// psi == 0; the prox is the identity.
    Zero,
    /// Indicator of the nonnegative orthant.
    IndicatorNonneg,
    /// Indicator of the box [lo, hi] (componentwise).
    IndicatorBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Indicator of the closed ball around `center`.
    IndicatorBall { center: Vec<f64>, radius: f64 },
    /// psi(x) = weight * ||x||_1.
    L1 { weight: f64 },
}

impl ProxKind {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ProxKind::Zero | ProxKind::IndicatorNonneg => Ok(()),
            ProxKind::IndicatorBox { lo, hi } => {
                if lo.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: lo.len(),
                    });
                }
                if hi.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: hi.len(),
                    });
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidParameter(
                        "box bounds must satisfy lo <= hi componentwise".into(),
                    ));
                }
                Ok(())
            }
            ProxKind::IndicatorBall { center, radius } => {
                if center.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: center.len(),
                    });
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter(
                        "ball radius must be positive".into(),
                    ));
                }
                Ok(())
            }
            ProxKind::L1 { weight } => {
                if !(*weight >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "l1 weight must be nonnegative".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            ProxKind::IndicatorNonneg
                | ProxKind::IndicatorBox { .. }
                | ProxKind::IndicatorBall { .. }
        )
    }

    /// Membership in the effective domain of psi. Always true for the finite
    /// kinds (zero, l1); set membership for indicator kinds.
    pub fn is_member(&self, x: &[f64]) -> bool {
        match self {
            ProxKind::Zero | ProxKind::L1 { .. } => true,
            ProxKind::IndicatorNonneg => x.iter().all(|v| *v >= 0.0),
            ProxKind::IndicatorBox { lo, hi } => {
                x.iter().zip(lo).all(|(v, l)| v >= l) && x.iter().zip(hi).all(|(v, h)| v <= h)
            }
            ProxKind::IndicatorBall { center, radius } => linalg::distance(x, center) <= *radius,
        }
    }

    /// Extended value of psi: 0 or +inf for indicator kinds, the closed form
    /// for zero and l1.
    pub fn psi(&self, x: &[f64]) -> f64 {
        match self {
            ProxKind::Zero => 0.0,
            ProxKind::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            _ => {
                if self.is_member(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Proximal map attached to a problem. Either a single kind over the whole
/// space or a blockwise product (used by the minimax adapter, where each
/// variable group carries its own nonsmooth term).
#[derive(Debug, Clone, PartialEq)]
pub enum ProxOp {
    Single(ProxKind),
    /// Consecutive blocks of the given lengths, each with its own kind.
    Blocks(Vec<(usize, ProxKind)>),
}

impl ProxOp {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ProxOp::Single(kind) => kind.validate(dim),
            ProxOp::Blocks(blocks) => {
                let total: usize = blocks.iter().map(|(len, _)| len).sum();
                if total != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: total,
                    });
                }
                for (len, kind) in blocks {
                    kind.validate(*len)?;
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, v: &[f64], mu: f64) -> Result<Vec<f64>> {
        match self {
            ProxOp::Single(kind) => prox_apply(kind, v, mu),
            ProxOp::Blocks(blocks) => {
                let mut out = Vec::with_capacity(v.len());
                let mut start = 0;
                for (len, kind) in blocks {
                    let piece = prox_apply(kind, &v[start..start + len], mu)?;
                    out.extend_from_slice(&piece);
                    start += len;
                }
                Ok(out)
            }
        }
    }

    pub fn is_indicator(&self) -> bool {
        match self {
            ProxOp::Single(kind) => kind.is_indicator(),
            ProxOp::Blocks(blocks) => blocks.iter().all(|(_, k)| k.is_indicator()),
        }
    }

    pub fn is_member(&self, x: &[f64]) -> bool {
        match self {
            ProxOp::Single(kind) => kind.is_member(x),
            ProxOp::Blocks(blocks) => {
                let mut start = 0;
                for (len, kind) in blocks {
                    if !kind.is_member(&x[start..start + len]) {
                        return false;
                    }
                    start += len;
                }
                true
            }
        }
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        match self {
            ProxOp::Single(kind) => kind.psi(x),
            ProxOp::Blocks(blocks) => {
                let mut total = 0.0;
                let mut start = 0;
                for (len, kind) in blocks {
                    total += kind.psi(&x[start..start + len]);
                    start += len;
                }
                total
            }
        }
    }
}

impl From<ProxKind> for ProxOp {
    fn from(kind: ProxKind) -> Self {
        ProxOp::Single(kind)
    }
}

/// The minimizer of `psi(z) + ||v - z||^2 / (2 mu)`.
pub fn prox_apply(kind: &ProxKind, v: &[f64], mu: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(
            "prox step mu must be positive".into(),
        ));
    }
    kind.validate(v.len())?;
    let out = match kind {
        ProxKind::Zero => v.to_vec(),
        ProxKind::IndicatorNonneg => v.iter().map(|x| x.max(0.0)).collect(),
        ProxKind::IndicatorBox { lo, hi } => v
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(x, (l, h))| x.max(*l).min(*h))
            .collect(),
        ProxKind::IndicatorBall { center, radius } => {
            let d = linalg::distance(v, center);
            // A few ulps of slack so that re-projecting a boundary point is
            // the identity (exact idempotence).
            if d <= radius * (1.0 + 16.0 * f64::EPSILON) {
                v.to_vec()
            } else {
                let scale = radius / d;
                center
                    .iter()
                    .zip(v)
                    .map(|(c, x)| c + scale * (x - c))
                    .collect()
            }
        }
        ProxKind::L1 { weight } => {
            let kappa = mu * weight;
            v.iter()
                .map(|x| x.signum() * (x.abs() - kappa).max(0.0))
                .collect()
        }
    };
    Ok(out)
}

/// Outcome of checking the prox variational characterization
/// `<nu - v, a - nu> >= mu psi(nu) - mu psi(a)` at the given probe points.
#[derive(Debug, Clone)]
pub struct CharacterizationReport {
    pub holds: bool,
    pub checked: usize,
    /// Probes outside the domain of psi (indicator kinds only).
    pub skipped: usize,
    /// Largest positive defect of the inequality over the checked probes.
    pub worst_violation: f64,
}

/// Check the variational characterization of `nu = prox_apply(kind, v, mu)`
/// at the given probes. The inequality is accepted up to `-INEQ_TOL` slack.
pub fn check_prox_characterization(
    kind: &ProxKind,
    v: &[f64],
    mu: f64,
    probes: &[Vec<f64>],
) -> Result<CharacterizationReport> {
    let nu = prox_apply(kind, v, mu)?;
    check_characterization_at(kind, v, mu, &nu, probes)
}

/// Same check against an externally supplied candidate `nu`; used in tests to
/// witness violations at perturbed points.
pub fn check_characterization_at(
    kind: &ProxKind,
    v: &[f64],
    mu: f64,
    nu: &[f64],
    probes: &[Vec<f64>],
) -> Result<CharacterizationReport> {
    if nu.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: nu.len(),
        });
    }
    let psi_nu = kind.psi(nu);
    if !psi_nu.is_finite() {
        return Err(Error::InvalidParameter(
            "candidate prox point lies outside the domain of psi".into(),
        ));
    }
    let nu_minus_v = linalg::sub(nu, v);
    let mut checked = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for a in probes {
        if a.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                got: a.len(),
            });
        }
        let psi_a = kind.psi(a);
        if !psi_a.is_finite() {
            skipped += 1;
            continue;
        }
        let lhs = linalg::dot(&nu_minus_v, &linalg::sub(a, nu));
        let defect = mu * (psi_nu - psi_a) - lhs;
        worst = worst.max(defect);
        checked += 1;
    }
    Ok(CharacterizationReport {
        holds: worst <= INEQ_TOL,
        checked,
        skipped,
        worst_violation: worst,
    })
}
