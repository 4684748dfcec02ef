//! Numerics for the regularized MEMS membrane problem
//!
//! ```text
//! u'' = λ (1+u)^-2 [1 - ε² (1+u)^-2],   u(-1) = u(1) = 0
//! ```
//!
//! The crate solves the boundary value problem by shooting on the
//! desingularized first-order system, traces the S-shaped solution curve in
//! `(λ, ‖u‖²)` by pseudo-arclength continuation, locates and refines both
//! folds, and provides the ε = 0 singular solutions, the blow-up chart vector
//! fields and closed-form asymptotic expansions used to validate the
//! numerics.

// `!(x > 0.0)` is used throughout on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod charts;
pub mod cli;
pub mod config;
pub mod continuation;
pub mod error;
pub mod export;
pub mod integrate;
pub mod model;
pub mod profile;
pub mod roots;
pub mod shooting;
pub mod singular;
pub mod stability;
pub mod timemap;

pub use error::{Error, Result};
pub use model::ModelParams;
pub use profile::SolutionProfile;
