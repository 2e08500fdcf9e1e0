//! Spectral-gap and anti-crossing analysis for annealing Hamiltonians built
//! from Ising problems.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod anticross;
pub mod error;
pub mod hamiltonian;
pub mod instances;
pub mod lens;
pub mod linalg;
pub mod reduction;
pub mod scaling;
pub mod spectra;

pub use error::{Error, Result};
