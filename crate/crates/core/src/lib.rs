//! Numerical harness for the zero-diffusion limit of the one-dimensional
//! chemotaxis system
//!
//! ```text
//! u_t = u_xx - (u v_x)_x,   v_t = eps v_xx - u v,   x in (0,1)
//! (u_x - u v_x) = 0,  v = v_*   on x = 0, 1
//! ```
//!
//! The crate solves the full system for `eps > 0`, builds the outer
//! (`eps = 0`) profiles and the boundary-layer profiles living in the
//! stretched coordinates `z = x / sqrt(eps)` and `s = (1 - x) / sqrt(eps)`,
//! assembles the composite expansion and measures how fast the remainder
//! shrinks as `eps -> 0`.
//!
//! Module map:
//!
//! * [`grids`]: interval and half-line grids, quadrature.
//! * [`model`]: parameters, initial data, compatibility conditions and the
//!   anti-derivative transform `phi = int_0^x (u - M)`.
//! * [`interval`]: time integration on `[0,1]` (full system, leading and
//!   first-order outer problems).
//! * [`layers`]: half-line solves for the layer profiles.
//! * [`expansion`]: correctors, assembly and remainders.
//! * [`analysis`]: epsilon sweeps, rate fits, thickness and invariant checks.
//! * [`config`] / [`cli`]: run configuration and the `layerlab` command.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod expansion;
pub mod grids;
pub mod interval;
pub mod io;
pub mod layers;
pub mod model;
pub mod tridiag;

pub use error::{Error, Result};
