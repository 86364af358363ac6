//! Reflection positivity inequalities for Renyi entropies.
//!
//! The crate builds the modular conjugation of a purified finite-dimensional
//! state, forms reflected reduced density matrices `ρ_{A_i Ā_j}`, and checks
//! the Gram-matrix inequalities `det(tr ρ_{A_i Ā_j}^n) ≥ 0` together with
//! their infinite-divisibility relaxations. Companion modules cover the free
//! massless fermion entropies, the Kallén-Lehmann representation of single
//! interval entropies and the two-interval conformal inequalities.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cft;
pub mod error;
pub mod fermion;
pub mod harness;
pub mod json;
pub mod linalg;
pub mod modular;
pub mod positivity;
pub mod random;
pub mod reflected;
pub mod spectral;

pub use error::{Error, Result};
