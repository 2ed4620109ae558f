// SPDX-License-Identifier: MIT OR Apache-2.0
//! The pinned constant table.
//!
//! Kernels compile their constants in; the table is the versioned record of
//! them. A table that disagrees with the build is refused rather than
//! silently ignored.

use std::collections::BTreeMap;
use std::path::Path;

use corners_lab_core::{bohr, gridnorm, increment, nof, sift, spread};
use serde::Deserialize;

use crate::error::{parse_err, LabError, Result};
use crate::report::sha256_hex;

pub const TABLE: &str = include_str!("../constants.json");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ConstantTable {
    pub version: u32,
    pub constants: BTreeMap<String, f64>,
}

/// Values compiled into the kernels, keyed as in the table.
pub fn compiled() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("bohr.C_REGULARIZE", bohr::C_REGULARIZE as f64),
        ("bohr.C_SHIFT", bohr::C_SHIFT),
        ("gridnorm.EXACT_WORK_LIMIT", gridnorm::EXACT_WORK_LIMIT),
        ("increment.AUTO_EXACT_SIDE", increment::AUTO_EXACT_SIDE as f64),
        ("increment.C_ITER", increment::C_ITER),
        ("increment.GUARD_FACTOR", increment::GUARD_FACTOR as f64),
        ("increment.MAX_DIM", increment::MAX_DIM as f64),
        ("increment.PARTITION_BLOCK_LIMIT", increment::PARTITION_BLOCK_LIMIT as f64),
        ("nof.ANCHOR_CANDIDATES", nof::ANCHOR_CANDIDATES as f64),
        ("nof.MAX_GRID", nof::MAX_GRID as f64),
        ("nof.RANDOM_CANDIDATES", nof::RANDOM_CANDIDATES as f64),
        ("sift.C_REL_COLS", sift::C_REL_COLS),
        ("sift.C_REL_GAMMA", sift::C_REL_GAMMA),
        ("sift.C_REL_ROWS", sift::C_REL_ROWS),
        ("sift.C_SIFT", sift::C_SIFT),
        ("sift.REL_ELL", sift::REL_ELL as f64),
        ("spread.DEFAULT_RESTARTS", spread::DEFAULT_RESTARTS as f64),
        ("spread.EXACT_SIDE_LIMIT", spread::EXACT_SIDE_LIMIT as f64),
    ])
}

pub fn parse(text: &str) -> Result<ConstantTable> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("constant table: {e}")))
}

/// Every compiled constant appears in the table with the same value, and
/// the table has no extra keys.
pub fn check(table: &ConstantTable) -> Result<()> {
    let built = compiled();
    for (k, v) in &built {
        match table.constants.get(*k) {
            Some(t) if t == v => {}
            Some(t) => return Err(LabError::Refused(format!("constant {k} is {v} in this build but {t} in the table"))),
            None => return Err(LabError::Refused(format!("constant {k} is missing from the table"))),
        }
    }
    if let Some(extra) = table.constants.keys().find(|k| !built.contains_key(k.as_str())) {
        return Err(LabError::Refused(format!("unknown constant {extra} in the table")));
    }
    Ok(())
}

/// Loads, checks and digests the table at `path`, or the built-in one.
pub fn load(path: Option<&Path>) -> Result<(ConstantTable, String)> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| LabError::Io { path: p.display().to_string(), source })?,
        None => TABLE.to_string(),
    };
    let table = parse(&text)?;
    check(&table)?;
    Ok((table, sha256_hex(text.as_bytes())))
}
