//! Convexity certificates for joint chance-constrained feasible sets
//! S(p) = {x : P(Vx ≤ D) ≥ p} with elliptical or generalized hyperbolic rows
//! coupled by a Gumbel-Hougaard copula whose exponent depends on x.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod copula;
pub mod decreasing;
pub mod dist;
pub mod error;
pub mod feasibility;
pub mod fixtures;
pub mod linalg;
pub mod quad;
pub mod specfun;
pub mod thresholds;

pub use error::{Error, Result};
