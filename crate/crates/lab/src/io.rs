// SPDX-License-Identifier: MIT OR Apache-2.0
//! JSON file formats for sets, grids, Bohr sets, colorings and cylinders.
//!
//! Bit arrays are lowercase hex, two digits per byte, bit `i` stored in
//! byte `i / 8` at position `i % 8` (least significant first). Padding bits
//! past the declared length must be zero.

use std::fs;
use std::path::Path;

use corners_lab_core::bohr::BohrSet;
use corners_lab_core::group::Group;
use corners_lab_core::nof::{Coloring, CylinderIntersection};
use corners_lab_core::setfun::{GridFunction, GroupFunction, SubsetInd};
use num_rational::Ratio;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{parse_err, LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Subset,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Data {
    Bits(String),
    Values(Vec<f64>),
}

/// `{"domain": ..., "kind": "subset" | "grid", "data": hex | [floats]}`.
///
/// `domain` is a group descriptor (`"Z5"`, `"F2^4"`), a size (`"12"`) or a
/// rectangle (`"6x8"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetFile {
    pub domain: String,
    pub kind: Kind,
    pub data: Data,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Group(Group),
    Rect(usize, usize),
    Size(usize),
}

impl Domain {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(n) = s.parse::<usize>() {
            return Ok(Domain::Size(n));
        }
        if let Some((r, c)) = s.split_once('x') {
            if let (Ok(r), Ok(c)) = (r.parse::<usize>(), c.parse::<usize>()) {
                return Ok(Domain::Rect(r, c));
            }
        }
        Ok(Domain::Group(Group::parse(s)?))
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        match self {
            Domain::Group(g) => g.order(),
            Domain::Rect(r, c) => r * c,
            Domain::Size(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn encode_bits(s: &SubsetInd) -> String {
    let n = s.domain();
    let mut bytes = vec![0u8; n.div_ceil(8)];
    for i in s.iter() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn decode_bits(hex: &str, len: usize) -> Result<SubsetInd> {
    let hex = hex.trim();
    if hex.len() != 2 * len.div_ceil(8) {
        return Err(parse_err(format!("expected {} hex digits for {len} bits, got {}", 2 * len.div_ceil(8), hex.len())));
    }
    let mut s = SubsetInd::empty(len);
    for (k, pair) in hex.as_bytes().chunks(2).enumerate() {
        let text = std::str::from_utf8(pair).map_err(|_| parse_err("non-ascii hex"))?;
        let byte = u8::from_str_radix(text, 16).map_err(|_| parse_err(format!("bad hex byte {text:?}")))?;
        for bit in 0..8 {
            if byte >> bit & 1 == 1 {
                let i = 8 * k + bit;
                if i >= len {
                    return Err(parse_err(format!("bit {i} set past length {len}")));
                }
                s.insert(i);
            }
        }
    }
    Ok(s)
}

impl SetFile {
    pub fn subset(domain: impl Into<String>, s: &SubsetInd) -> Self {
        Self { domain: domain.into(), kind: Kind::Subset, data: Data::Bits(encode_bits(s)) }
    }

    pub fn grid(f: &GridFunction) -> Self {
        Self { domain: format!("{}x{}", f.rows(), f.cols()), kind: Kind::Grid, data: Data::Values(f.data().to_vec()) }
    }

    pub fn group_function(f: &GroupFunction) -> Self {
        Self { domain: f.group().descriptor(), kind: Kind::Grid, data: Data::Values(f.values().to_vec()) }
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::parse(&self.domain)
    }

    fn bits(&self, len: usize) -> Result<SubsetInd> {
        match (&self.kind, &self.data) {
            (Kind::Subset, Data::Bits(h)) => decode_bits(h, len),
            _ => Err(parse_err("expected a subset with hex data")),
        }
    }

    fn values(&self, len: usize) -> Result<Vec<f64>> {
        match (&self.kind, &self.data) {
            (Kind::Grid, Data::Values(v)) if v.len() == len => Ok(v.clone()),
            (Kind::Grid, Data::Values(v)) => Err(parse_err(format!("expected {len} values, got {}", v.len()))),
            _ => Err(parse_err("expected a grid with a value list")),
        }
    }

    /// Subset of `G` for a group domain.
    pub fn group_subset(&self) -> Result<(Group, SubsetInd)> {
        match self.domain()? {
            Domain::Group(g) => {
                let s = self.bits(g.order())?;
                Ok((g, s))
            }
            d => Err(parse_err(format!("expected a group domain, got {d:?}"))),
        }
    }

    /// Subset of `G x G` for a group domain, row-major.
    pub fn pair_subset(&self) -> Result<(Group, SubsetInd)> {
        match self.domain()? {
            Domain::Group(g) => {
                let m = g.order();
                let s = self.bits(m * m)?;
                Ok((g, s))
            }
            d => Err(parse_err(format!("expected a group domain, got {d:?}"))),
        }
    }

    /// Subset of a `rows x cols` rectangle.
    pub fn rect_subset(&self) -> Result<(usize, usize, SubsetInd)> {
        match self.domain()? {
            Domain::Rect(r, c) => Ok((r, c, self.bits(r * c)?)),
            d => Err(parse_err(format!("expected a rectangle domain, got {d:?}"))),
        }
    }

    /// Subset of `[N]` for a size domain.
    pub fn line_subset(&self) -> Result<SubsetInd> {
        match self.domain()? {
            Domain::Size(n) => self.bits(n),
            d => Err(parse_err(format!("expected a size domain, got {d:?}"))),
        }
    }

    pub fn grid_function(&self) -> Result<GridFunction> {
        match self.domain()? {
            Domain::Rect(r, c) => Ok(GridFunction::new(r, c, self.values(r * c)?)?),
            d => Err(parse_err(format!("expected a rectangle domain, got {d:?}"))),
        }
    }

    pub fn group_function_values(&self) -> Result<GroupFunction> {
        match self.domain()? {
            Domain::Group(g) => {
                let v = self.values(g.order())?;
                Ok(GroupFunction::new(g, v)?)
            }
            d => Err(parse_err(format!("expected a group domain, got {d:?}"))),
        }
    }
}

/// `{"group": "Z1024", "freqs": [[17], [129]], "radius": "3/64"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrFile {
    pub group: String,
    pub freqs: Vec<Vec<u64>>,
    pub radius: String,
}

pub fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: u64 = num.parse().map_err(|_| parse_err(format!("bad rational {s:?}")))?;
    let den: u64 = den.parse().map_err(|_| parse_err(format!("bad rational {s:?}")))?;
    if den == 0 {
        return Err(parse_err(format!("zero denominator in {s:?}")));
    }
    Ok(Ratio::new(num, den))
}

pub fn format_ratio(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl BohrFile {
    pub fn from_set(b: &BohrSet) -> Self {
        let g = b.group();
        Self {
            group: g.descriptor(),
            freqs: b.freqs().iter().map(|c| c.freq.clone()).collect(),
            radius: format_ratio(b.radius()),
        }
    }

    pub fn build(&self) -> Result<BohrSet> {
        let g = Group::parse(&self.group)?;
        Ok(BohrSet::from_freqs(g, &self.freqs, parse_ratio(&self.radius)?)?)
    }
}

/// `{"domain": ..., "num_colors": L, "colors": [c | null, ...]}`.
///
/// `domain` is `"NxN"` for colorings of `[N] x [N]` and a group descriptor
/// for colorings of `G^3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoringFile {
    pub domain: String,
    pub num_colors: u32,
    pub colors: Vec<Option<u32>>,
}

impl ColoringFile {
    pub fn new(domain: impl Into<String>, col: &Coloring) -> Self {
        Self { domain: domain.into(), num_colors: col.num_colors(), colors: col.colors().to_vec() }
    }

    pub fn build(&self) -> Result<(Domain, Coloring)> {
        let d = Domain::parse(&self.domain)?;
        let want = match &d {
            Domain::Group(g) => g.order().pow(3),
            other => other.len(),
        };
        if self.colors.len() != want {
            return Err(parse_err(format!("domain {} needs {want} cells, got {}", self.domain, self.colors.len())));
        }
        Ok((d, Coloring::new(self.colors.clone(), self.num_colors)?))
    }
}

/// `{"group": "Z4", "s_xy": hex, "s_yz": hex, "s_xz": hex}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderFile {
    pub group: String,
    pub s_xy: String,
    pub s_yz: String,
    pub s_xz: String,
}

impl CylinderFile {
    pub fn new(g: &Group, c: &CylinderIntersection) -> Self {
        Self { group: g.descriptor(), s_xy: encode_bits(&c.s_xy), s_yz: encode_bits(&c.s_yz), s_xz: encode_bits(&c.s_xz) }
    }

    pub fn build(&self) -> Result<(Group, CylinderIntersection)> {
        let g = Group::parse(&self.group)?;
        let m = g.order();
        let c = CylinderIntersection::new(m, decode_bits(&self.s_xy, m * m)?, decode_bits(&self.s_yz, m * m)?, decode_bits(&self.s_xz, m * m)?)?;
        Ok((g, c))
    }
}

/// Parsed value and the raw bytes it came from.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|source| LabError::Io { path: path.display().to_string(), source })?;
    let value = serde_json::from_slice(&bytes).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    Ok((value, bytes))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| LabError::Io { path: path.display().to_string(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_pretty(value))
}
