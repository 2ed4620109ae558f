// SPDX-License-Identifier: MIT OR Apache-2.0
//! Computational kernels for corner-free sets in finite groups.
//!
//! The crate is `no_std` with `alloc`. It provides exact corner counting,
//! grid norms, sifting, spreadness certificates, Bohr sets, the
//! pseudorandomization engine for `F_2^n`, and the three-party
//! number-on-forehead protocol built from corner-free colorings.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bohr;
pub mod corners;
pub mod error;
pub mod gridnorm;
pub mod group;
pub mod increment;
pub mod nof;
pub mod setfun;
pub mod sift;
pub mod spread;
pub mod transform;

pub use error::{Error, Result};
