//! Continuous-variable entanglement distillation in phase space.
//!
//! * [`gaussian`]: covariance-matrix states, symplectic maps, filters.
//! * [`fock`]: truncated number-basis oracle used to cross-check everything else.
//! * [`protocols`]: characteristic-function Gaussifier protocols and convergence diagnostics.
//! * [`channels`]: Gaussian channels through their Choi–Jamiołkowski covariance blocks.
//! * [`repeater`]: the (C, S) repeater-chain pipeline and maximum-distance search.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod fock;
pub mod gaussian;
mod linalg;
pub mod protocols;
pub mod repeater;

pub use error::{Error, Result};
pub use gaussian::{GaussianFilter, GaussianState, SymmetricTwoMode, SymplecticMap};
