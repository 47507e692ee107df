//! Gradient-descent-family methods under `(L0, L1)`-generalized smoothness.
//!
//! The crate bundles three layers:
//!
//! * the five iteration loops (adaptive GD, normalized GD, clipped GD,
//!   random coordinate descent, and coordinate descent driven only by a
//!   comparison oracle with golden-section line minimization), all producing
//!   deterministic per-iteration [`optimizers::Trace`]s;
//! * a test-objective suite ([`problems`]) whose smoothness constants are
//!   certified numerically rather than assumed ([`verify`]);
//! * rate audits ([`analysis`]) that replay a trace against the per-step and
//!   endpoint inequalities of the two-phase convergence theory.
//!
//! Everything is binary64 and seed-deterministic: the same `RunConfig`
//! (including the seed) reproduces a bit-identical trace.

// Parameter guards use `!(x > 0.0)` so that NaN fails validation; the
// suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod linesearch;
pub mod objective;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod steprules;
pub mod vector;
pub mod verify;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
