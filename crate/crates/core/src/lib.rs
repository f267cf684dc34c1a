//! Simulator for pre- and post-selected quantum ensembles of N particles in M
//! boxes.
//!
//! The library covers four layers:
//!
//! - [`qstate`]: dense state vectors over the M^N configuration space,
//!   projectors, tensor/inner products, and the fourier measurement basis.
//! - [`prepost`]: Born and ABL (Aharonov-Bergmann-Lebowitz) probabilities,
//!   weak values, and sequential projective chains.
//! - [`pigeonhole`]: scenario builders and correlation-pattern analyses for
//!   the pigeonhole arrangement and its N-particle, M-box generalization.
//! - [`montecarlo`] / [`weakcoupling`]: stochastic trajectory sampling of
//!   repeated runs, and the Gaussian-pointer model of weak pairwise coupling.
//!
//! Conventions fixed across the crate: boxes are indexed `0..M` (for M = 2,
//! `L = 0`, `R = 1`); particle 0 is the most significant digit of a
//! configuration index; inner products are conjugate-linear in the first
//! argument.

pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod pigeonhole;
pub mod prepost;
pub mod qstate;
pub mod report;
pub mod tol;
pub mod weakcoupling;

pub use error::{Result, SimError};
pub use num_complex::Complex64 as C64;
