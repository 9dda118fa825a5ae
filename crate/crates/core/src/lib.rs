//! Stochastic ("fluctuating") solutions of the Wick-rotated Schrödinger
//! equation, the Feynman–Kac expectation they average to, and the electron
//! biprism fringe statistics that follow from a fluctuating impulse.
//!
//! Modules, bottom up:
//!
//! - [`stochastic_core`]: reproducible random streams, Wiener increments,
//!   Euler–Maruyama, Itô's lemma.
//! - [`feynman_kac`]: Brownian paths with variance rate `hbar/m`, the
//!   Feynman–Kac estimator, and an explicit finite-difference oracle.
//! - [`fluctuating_wave`]: the clause-1/clause-2 solutions, multiplicative
//!   updates and fluctuating impulses.
//! - [`biprism`]: deflected waves, interference, Fraunhofer envelope and
//!   bright-spot statistics.

// `!(a > b)` comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biprism;
pub mod error;
pub mod feynman_kac;
pub mod fluctuating_wave;
pub mod potential;
pub mod stats;
pub mod stochastic_core;

pub use error::{Error, Result};
pub use feynman_kac::{EnsembleSettings, PhysicalConstants};
pub use num_complex::Complex64;
pub use potential::{ModelPotential, PotentialField};
