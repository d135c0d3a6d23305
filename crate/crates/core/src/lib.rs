//! Numerical laboratory for blow-up of semilinear heat, wave and Schrödinger
//! type equations on cone-like domains.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops over parallel arrays read closer to the discrete formulas
#![allow(clippy::needless_range_loop)]

pub mod cone;
pub mod config;
pub mod cutoff;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod lifespan;
pub mod numeric;
pub mod pde;
pub mod verify;

pub use error::{Error, Result};
