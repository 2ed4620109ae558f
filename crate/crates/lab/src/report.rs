// SPDX-License-Identifier: MIT OR Apache-2.0
//! Deterministic JSON reports.

use corners_lab_core::gridnorm::InequalityReport;
use corners_lab_core::increment::Check;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest as _, Sha256};

/// One asserted inequality `lhs <= rhs` (or `lhs >= rhs`, see `margin`).
///
/// `margin >= 0` exactly when the inequality holds up to the kernel's
/// tolerance; equalities use `margin = -|lhs - rhs|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub name: String,
    /// The statement being checked, in words.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl Inequality {
    /// `lhs <= rhs + tol`.
    pub fn at_most(name: &str, anchor: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = rhs - lhs;
        Self { name: name.into(), anchor: anchor.into(), lhs, rhs, margin, holds: margin >= -tol }
    }

    /// `lhs >= rhs - tol`.
    pub fn at_least(name: &str, anchor: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = lhs - rhs;
        Self { name: name.into(), anchor: anchor.into(), lhs, rhs, margin, holds: margin >= -tol }
    }

    /// `|lhs - rhs| <= tol`.
    pub fn close(name: &str, anchor: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let gap = (lhs - rhs).abs();
        Self { name: name.into(), anchor: anchor.into(), lhs, rhs, margin: tol - gap, holds: gap <= tol }
    }

    pub fn equal(name: &str, anchor: &str, lhs: u64, rhs: u64) -> Self {
        let (l, r) = (lhs as f64, rhs as f64);
        Self { name: name.into(), anchor: anchor.into(), lhs: l, rhs: r, margin: 0.0 - (l - r).abs(), holds: lhs == rhs }
    }

    pub fn from_report(name: &str, anchor: &str, r: &InequalityReport) -> Self {
        Self { name: name.into(), anchor: anchor.into(), lhs: r.lhs, rhs: r.rhs, margin: r.slack, holds: r.holds }
    }

    /// A lower-bound [`Check`]: `value >= bound`.
    pub fn from_lower(name: &str, anchor: &str, c: &Check) -> Self {
        Self { name: name.into(), anchor: anchor.into(), lhs: c.value, rhs: c.bound, margin: c.value - c.bound, holds: c.holds }
    }

    /// An upper-bound [`Check`]: `value <= bound`.
    pub fn from_upper(name: &str, anchor: &str, c: &Check) -> Self {
        Self { name: name.into(), anchor: anchor.into(), lhs: c.value, rhs: c.bound, margin: c.bound - c.value, holds: c.holds }
    }

    pub fn flag(name: &str, anchor: &str, holds: bool) -> Self {
        let v = if holds { 1.0 } else { 0.0 };
        Self { name: name.into(), anchor: anchor.into(), lhs: v, rhs: 1.0, margin: v - 1.0, holds }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub subcommand: String,
    pub seed: Option<u64>,
    pub inputs_digest: String,
    pub constants_digest: String,
    pub outputs: Value,
    pub inequalities: Vec<Inequality>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// SHA-256 over the canonical argument list and the raw input files.
#[derive(Default, Clone)]
pub struct InputDigest {
    hasher: Sha256,
}

impl InputDigest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn arg(&mut self, name: &str, value: impl std::fmt::Display) -> &mut Self {
        self.hasher.update(format!("{name}={value}\n").as_bytes());
        self
    }

    pub fn file(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.hasher.update(format!("{name}:{}\n", bytes.len()).as_bytes());
        self.hasher.update(bytes);
        self
    }

    pub fn finish(&self) -> String {
        hex(&self.hasher.clone().finalize())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
