// SPDX-License-Identifier: MIT OR Apache-2.0
//! Command-line laboratory for corner-free sets and their density-increment
//! machinery: file formats, reports, seeded suites and brute-force oracles.

pub mod commands;
pub mod constants;
pub mod error;
pub mod instances;
pub mod io;
pub mod oracles;
pub mod report;
pub mod suites;

pub use error::{LabError, Result};
