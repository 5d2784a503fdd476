//! Euclidean random fields driven by Lévy white noise.
//!
//! The crate builds fields `φ` solving `(−Δ + m0²)^α φ = η` on a periodic
//! lattice, where `η` is generalized white noise with a drift, Gaussian and
//! compound-Poisson part. On top of the sampler it provides:
//!
//! * analytic truncated Schwinger functions and empirical joint cumulants
//!   ([`cumulants`]),
//! * reflection-positivity Gram matrices and negative-metric witnesses
//!   ([`os`]),
//! * a regularized evaluation of the fixed-mass truncated Wightman
//!   distribution and the spacelike-support vanishing check ([`wightman`]).
//!
//! Parallel loops use rayon behind the `parallel` feature (on by default).
//! Results never depend on the number of worker threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cumulants;
pub mod error;
pub mod fft;
pub mod greens;
pub mod lattice;
pub mod levy;
pub mod os;
pub mod par;
pub mod partitions;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod wightman;

pub use error::{Error, Result};
pub use greens::{ModelParams, MomentumSymbol, SpectralDensity, SpectralNormalization};
pub use lattice::{LatticeField, LatticeSpec, Site};
pub use levy::{JumpLaw, LevyCharacteristic};
pub use sampler::{Ensemble, FieldModel, LazyEnsemble, SampleSource};
