//! Continuous-time proximal dynamics for mixed variational inequalities.
//!
//! The central object is a problem `find w*: <F(w*), y - w*> + psi(y) - psi(w*) >= 0
//! for all y`, given by an operator `F` and a convex nonsmooth term `psi` exposed
//! through its proximal map. Solutions coincide with the zeros of the natural
//! residual `phi(w) = w - prox(w - mu F(w))`, and this crate integrates flows of
//! the form `dw/dt = -e(t, w) phi(w)` whose gain `e` blends a fractional power,
//! a superlinear power, and a normalized term. Under a strong-pseudomonotonicity
//! plus Lipschitz regime the flow settles in fixed time, and the [`certificates`]
//! module computes the corresponding a-priori settling-time bounds.
//!
//! Modules:
//! - [`problem`]: problem container, assumption probes.
//! - [`prox`]: closed-form proximal operators and their contracts.
//! - [`dynamics`]: right-hand sides (time-varying, reduced variants, constant-gain
//!   projection case, disturbance injection).
//! - [`integrator`]: RK4 with residual-scaled step clipping, trajectory recording,
//!   settling detection.
//! - [`certificates`]: contraction constants and settling-time bounds.
//! - [`applications`]: composite-minimization and minimax adapters.
//! - [`oracle`]: independent discrete reference solvers used for validation.
//! - [`presets`], [`config`], [`harness`]: named benchmark problems and the
//!   configuration-driven experiment runner behind the CLI.

// Validations are written as `!(x > 0.0)` on purpose so that NaN fails them;
// the dense-matrix routines use index loops, which read better there than
// iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod applications;
pub mod certificates;
pub mod config;
pub mod dynamics;
pub mod harness;
pub mod integrator;
pub mod linalg;
pub mod oracle;
pub mod presets;
pub mod problem;
pub mod prox;
pub mod rng;

mod error;

pub use error::{Error, Result};
