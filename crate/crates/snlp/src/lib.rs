//! Fluctuation-theory toolkit for spectrally negative Levy processes
//! conditioned to stay positive.
//!
//! The crate evaluates the analytic objects of the theory - Laplace
//! exponents, their right-inverses, scale functions, the passage-time
//! subordinators and the growth-rate functions - and drives a seeded Monte
//! Carlo harness that confronts simulated paths with the corresponding
//! laws: two-sided exit probabilities, the law of the absolute minimum,
//! iterated-logarithm statistics and integral-test dichotomies.

pub mod asymptotics;
pub mod error;
pub mod harness;
pub mod levy;
pub mod numeric;
pub mod scale;
pub mod sim;
pub mod subordinator;

pub use error::{Error, Result};
pub use levy::{geometric_grid, Hypothesis, HypothesisProbe, JumpFamily, ProcessSpec, ProbeVerdict};
pub use scale::{ScaleFunction, ScaleMethod};
pub use subordinator::{subordinator_of, SubordinatorJumps, SubordinatorSpec};
