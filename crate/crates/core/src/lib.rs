//! Proximal point method and saddle-envelope calculus for smooth
//! nonconvex-nonconcave minimax problems `min_x max_y L(x, y)`.

// `!(v > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod diagnostics;
pub mod envelope;
pub mod error;
pub mod numerics;
pub mod problems;
pub mod prox;
pub mod suites;

pub use algorithms::{run, AlgoConfig, Scheme, Termination, Trajectory};
pub use diagnostics::{classify, ClassifyOptions, RegimeLabel};
pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use problems::*;
pub use prox::{prox, ProxResult};
