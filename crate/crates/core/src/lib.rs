//! Exact-simulation toolkit for barcode similarity testing with geometric
//! quantum machine learning.
//!
//! Barcode pairs are drawn from a forrelated Gaussian distribution (class A)
//! or an uncorrelated one (class B), loaded as phase states on two `n`-qubit
//! registers, and classified by
//!
//! * [`qnn_meas`]: a sparse LASSO model over expectation values of a pool of
//!   symmetry-commuting observables,
//! * [`qnn_var`]: a layered equivariant ansatz followed by one invariant
//!   measurement, trained with Adam,
//! * [`classical`]: Siamese DNN/CNN baselines with shared-weight encoders.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod classical;
pub mod dataset;
pub mod dense;
mod error;
pub mod observable;
pub mod optim;
pub mod qnn_meas;
pub mod qnn_var;
pub mod record;
pub mod statevec;
pub mod symmetry;
pub mod wht;

pub use crate::error::{Error, Result};

/// Complex amplitude type used throughout the simulator.
pub type C64 = num_complex::Complex64;

/// Random number generator used for every seeded draw: ChaCha with 8 rounds,
/// seeded through `SeedableRng::seed_from_u64`.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
