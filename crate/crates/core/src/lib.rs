//! Sampled-data stabilisation toolkit for affine single-input systems
//! `ẋ = f(x) + u·g(x)`.
//!
//! The crate classifies states against Lie-bracket sufficient conditions,
//! synthesises finite-duration controls that decrease a Lyapunov candidate,
//! and simulates the resulting sampled-data closed loop.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod classifier;
pub mod exec;
pub mod liealg;
pub mod ode;
pub mod simloop;
pub mod symexpr;
pub mod synth;
pub mod templates;
