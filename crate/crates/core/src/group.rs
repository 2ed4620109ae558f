// SPDX-License-Identifier: MIT OR Apache-2.0
//! Finite groups.
//!
//! Abelian groups are products of cyclic factors with elements carried as
//! flat mixed-radix indices (`coords[0]` is the most significant digit). For
//! `F_2^n` the flat index is the bit vector itself, so addition is XOR.
//! Nonabelian groups only appear as explicit multiplication tables.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::Float;

use crate::error::{Error, Result};

/// A finite abelian group `Z/n_1 x ... x Z/n_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    factors: Vec<u64>,
    order: usize,
    /// `strides[i]` is the flat-index weight of coordinate `i`.
    strides: Vec<usize>,
    lcm: u64,
}

/// An element given by its coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    pub coords: Vec<u64>,
}

impl Group {
    /// Builds the product of cyclic groups with the given orders.
    ///
    /// An empty factor list is the trivial group.
    pub fn new(factors: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = factors.iter().find(|&&n| n < 2) {
            return Err(Error::Parse(format!("cyclic factor {bad} is below 2")));
        }
        let mut order: usize = 1;
        for &n in &factors {
            order = order
                .checked_mul(n as usize)
                .filter(|&o| o <= 1 << 32)
                .ok_or_else(|| Error::Refused("group order exceeds 2^32".to_string()))?;
        }
        let mut strides = vec![1usize; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factors[i + 1] as usize;
        }
        let lcm = factors.iter().fold(1u64, |acc, &n| acc.lcm(&n));
        Ok(Self {
            factors,
            order,
            strides,
            lcm,
        })
    }

    /// `Z/nZ`.
    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    /// `F_2^n`.
    pub fn f2(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    /// Parses `"Z5"`, `"F2^4"`, `"Z2xZ3"` or `"Z4^3"`.
    pub fn parse(desc: &str) -> Result<Self> {
        let desc = desc.trim();
        let bad = || Error::Parse(format!("group descriptor `{desc}`"));
        if desc.is_empty() {
            return Err(bad());
        }
        if desc == "1" || desc == "Z1" {
            return Self::new(Vec::new());
        }
        let mut factors = Vec::new();
        for part in desc.split(['x', 'X', '*']) {
            let part = part.trim();
            let (base, exp) = match part.split_once('^') {
                Some((b, e)) => (b, e.trim().parse::<usize>().map_err(|_| bad())?),
                None => (part, 1),
            };
            let n: u64 = if let Some(rest) = base.strip_prefix('Z') {
                rest.parse().map_err(|_| bad())?
            } else if let Some(rest) = base.strip_prefix('F') {
                let q: u64 = rest.parse().map_err(|_| bad())?;
                if q != 2 {
                    return Err(Error::Parse(format!("only F2 is supported, got `{part}`")));
                }
                2
            } else {
                return Err(bad());
            };
            factors.extend(core::iter::repeat(n).take(exp));
        }
        Self::new(factors)
    }

    /// Canonical descriptor, e.g. `"Z2xZ3"` or `"F2^4"`.
    pub fn descriptor(&self) -> String {
        if self.factors.is_empty() {
            return "Z1".to_string();
        }
        if self.is_f2() && self.factors.len() > 1 {
            return format!("F2^{}", self.factors.len());
        }
        let parts: Vec<String> = self.factors.iter().map(|n| format!("Z{n}")).collect();
        parts.join("x")
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Least common multiple of the factors; characters take values in `(1/lcm) Z / Z`.
    pub fn exponent(&self) -> u64 {
        self.lcm
    }

    /// True when every factor is 2.
    pub fn is_f2(&self) -> bool {
        self.factors.iter().all(|&n| n == 2)
    }

    /// Dimension over `F_2` when [`Self::is_f2`] holds.
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn zero(&self) -> usize {
        0
    }

    pub fn coords(&self, x: usize) -> Vec<u64> {
        self.factors
            .iter()
            .zip(&self.strides)
            .map(|(&n, &s)| ((x / s) as u64) % n)
            .collect()
    }

    pub fn index(&self, coords: &[u64]) -> Result<usize> {
        if coords.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                got: coords.len(),
            });
        }
        Ok(coords
            .iter()
            .zip(&self.factors)
            .zip(&self.strides)
            .map(|((&c, &n), &s)| (c % n) as usize * s)
            .sum())
    }

    pub fn element(&self, x: usize) -> Element {
        Element {
            coords: self.coords(x),
        }
    }

    /// Componentwise sum of two elements.
    pub fn elem_add(&self, a: &Element, b: &Element) -> Result<Element> {
        let m = self.factors.len();
        for e in [a, b] {
            if e.coords.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: e.coords.len(),
                });
            }
        }
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .zip(&self.factors)
            .map(|((&x, &y), &n)| (x % n + y % n) % n)
            .collect();
        Ok(Element { coords })
    }

    /// Sum of flat indices.
    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        match self.factors.len() {
            0 => 0,
            1 => {
                let s = a + b;
                if s >= self.order {
                    s - self.order
                } else {
                    s
                }
            }
            _ if self.is_f2() => a ^ b,
            _ => {
                let mut out = 0;
                for (&n, &st) in self.factors.iter().zip(&self.strides) {
                    let n = n as usize;
                    let s = (a / st) % n + (b / st) % n;
                    out += if s >= n { s - n } else { s } * st;
                }
                out
            }
        }
    }

    /// Additive inverse of a flat index.
    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        match self.factors.len() {
            0 => 0,
            1 => {
                if a == 0 {
                    0
                } else {
                    self.order - a
                }
            }
            _ if self.is_f2() => a,
            _ => {
                let mut out = 0;
                for (&n, &st) in self.factors.iter().zip(&self.strides) {
                    let n = n as usize;
                    let c = (a / st) % n;
                    out += if c == 0 { 0 } else { n - c } * st;
                }
                out
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// Full addition table, `table[a * |G| + b] = a + b`.
    pub fn add_table(&self) -> Vec<u32> {
        let n = self.order;
        let mut t = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                t.push(self.add(a, b) as u32);
            }
        }
        t
    }

    /// `x` times an integer, computed coordinatewise.
    pub fn scale(&self, x: usize, k: i64) -> usize {
        let mut out = 0;
        for (&n, &st) in self.factors.iter().zip(&self.strides) {
            let c = ((x / st) as u64 % n) as i128;
            let v = (c * k as i128).rem_euclid(n as i128) as usize;
            out += v * st;
        }
        out
    }
}

/// A character `x -> sum_i freq[i] * x_i / n_i mod 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character {
    pub freq: Vec<u64>,
}

impl Character {
    pub fn new(g: &Group, freq: Vec<u64>) -> Result<Self> {
        if freq.len() != g.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: g.factors.len(),
                got: freq.len(),
            });
        }
        let freq = freq.iter().zip(&g.factors).map(|(&f, &n)| f % n).collect();
        Ok(Self { freq })
    }

    /// Numerator `v` in `theta(x) = v / exponent(g)`, with `v` in `[0, exponent)`.
    pub fn eval_num(&self, g: &Group, x: usize) -> u64 {
        let l = g.lcm as u128;
        let mut acc: u128 = 0;
        for ((&f, &n), &st) in self.freq.iter().zip(&g.factors).zip(&g.strides) {
            let c = ((x / st) as u64 % n) as u128;
            acc += f as u128 * c * (l / n as u128);
        }
        (acc % l) as u64
    }

    /// Numerator of `||theta(x)||_{R/Z}` over `exponent(g)`.
    pub fn dist_num(&self, g: &Group, x: usize) -> u64 {
        let v = self.eval_num(g, x);
        v.min(g.lcm - v)
    }

    pub fn eval(&self, g: &Group, x: usize) -> f64 {
        if g.lcm == 0 {
            return 0.0;
        }
        self.eval_num(g, x) as f64 / g.lcm as f64
    }
}

/// An affine subspace `shift + span(basis)` of `F_2^n`.
///
/// The basis is kept in reduced row echelon form (pivot = highest set bit,
/// no other basis vector has that bit) and the shift has every pivot bit
/// cleared, so equal subspaces have equal representations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineSubspace {
    n: usize,
    basis: Vec<u64>,
    shift: u64,
}

fn reduce_against(basis: &[u64], mut v: u64) -> u64 {
    for &b in basis {
        let p = 63 - b.leading_zeros();
        if v >> p & 1 == 1 {
            v ^= b;
        }
    }
    v
}

impl AffineSubspace {
    /// Builds `shift + span(vectors)`; errors when the vectors are dependent.
    pub fn new(n: usize, vectors: &[u64], shift: u64) -> Result<Self> {
        if n > 63 {
            return Err(Error::Refused(format!("ambient dimension {n} above 63")));
        }
        let mask = if n == 0 { 0 } else { (1u64 << n) - 1 };
        let mut basis: Vec<u64> = Vec::new();
        for &v in vectors {
            if v & !mask != 0 {
                return Err(Error::Precondition(format!("vector {v:#b} outside F2^{n}")));
            }
            let r = reduce_against(&basis, v);
            if r == 0 {
                return Err(Error::Precondition("basis vectors are dependent".to_string()));
            }
            basis.push(r);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
        Self::canonical(n, basis, shift & mask)
    }

    fn canonical(n: usize, mut basis: Vec<u64>, shift: u64) -> Result<Self> {
        basis.sort_unstable_by(|a, b| b.cmp(a));
        // Full reduction: clear each pivot from every other row.
        for i in 0..basis.len() {
            let p = 63 - basis[i].leading_zeros();
            for j in 0..basis.len() {
                if j != i && basis[j] >> p & 1 == 1 {
                    basis[j] ^= basis[i];
                }
            }
        }
        basis.sort_unstable_by(|a, b| b.cmp(a));
        let shift = reduce_against(&basis, shift);
        Ok(Self { n, basis, shift })
    }

    /// The whole space `F_2^n`.
    pub fn full(n: usize) -> Self {
        let basis: Vec<u64> = (0..n).rev().map(|i| 1u64 << i).collect();
        Self { n, basis, shift: 0 }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn codim(&self) -> usize {
        self.n - self.basis.len()
    }

    pub fn size(&self) -> usize {
        1usize << self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn shift(&self) -> u64 {
        self.shift
    }

    pub fn contains(&self, x: u64) -> bool {
        reduce_against(&self.basis, x ^ self.shift) == 0
    }

    /// The member whose basis coordinates are the bits of `u` (bit `i` selects `basis[i]`).
    pub fn point(&self, u: u64) -> u64 {
        let mut x = self.shift;
        for (i, &b) in self.basis.iter().enumerate() {
            if u >> i & 1 == 1 {
                x ^= b;
            }
        }
        x
    }

    /// Basis coordinates of a member, inverse of [`Self::point`].
    pub fn local_coords(&self, x: u64) -> Option<u64> {
        let mut v = x ^ self.shift;
        let mut u = 0u64;
        for (i, &b) in self.basis.iter().enumerate() {
            let p = 63 - b.leading_zeros();
            if v >> p & 1 == 1 {
                v ^= b;
                u |= 1 << i;
            }
        }
        (v == 0).then_some(u)
    }

    /// Members in increasing order of basis coordinates.
    pub fn members(&self) -> Vec<u64> {
        (0..self.size() as u64).map(|u| self.point(u)).collect()
    }

    /// `{ point(u) : phi_i(u) = v_i }` for functionals `phi` on the basis coordinates.
    pub fn sub_by_functionals(&self, phi: &[u64], values: u64) -> Result<Self> {
        let m = self.dim();
        let (kernel, particular) = solve_functionals(m, phi, values)?;
        let vectors: Vec<u64> = kernel.iter().map(|&k| self.point(k) ^ self.shift).collect();
        Self::new(self.n, &vectors, self.point(particular))
    }

    /// Canonical representative of the coset `p + span(basis)`.
    pub fn coset_rep(&self, p: u64) -> u64 {
        reduce_against(&self.basis, p)
    }

    /// `span(basis)`, the direction of `self`.
    pub fn linear_part(&self) -> Self {
        Self { n: self.n, basis: self.basis.clone(), shift: 0 }
    }

    /// `p + span(basis)`.
    pub fn translate_to(&self, p: u64) -> Self {
        Self { n: self.n, basis: self.basis.clone(), shift: reduce_against(&self.basis, p) }
    }

    /// True when `self` is contained in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        other.contains(self.shift) && self.basis.iter().all(|&b| other.contains(b ^ other.shift))
    }
}

/// Kernel basis and a particular solution of `phi u = values` for a
/// reduced-row-echelon system of functionals on `F_2^m`.
///
/// Each functional is a bitmask over the `m` coordinates; rows must be in
/// reduced echelon form with distinct lowest-set-bit pivots.
fn solve_functionals(m: usize, phi: &[u64], values: u64) -> Result<(Vec<u64>, u64)> {
    let pivots: Vec<u32> = phi.iter().map(|r| r.trailing_zeros()).collect();
    let mut pivot_mask = 0u64;
    for (i, &p) in pivots.iter().enumerate() {
        if phi[i] == 0 || p as usize >= m || pivot_mask >> p & 1 == 1 {
            return Err(Error::Precondition("functionals not in echelon form".to_string()));
        }
        for (j, r) in phi.iter().enumerate() {
            if j != i && r >> p & 1 == 1 {
                return Err(Error::Precondition("functionals not reduced".to_string()));
            }
        }
        pivot_mask |= 1 << p;
    }
    let mut kernel = Vec::with_capacity(m - phi.len());
    for f in 0..m {
        if pivot_mask >> f & 1 == 1 {
            continue;
        }
        let mut k = 1u64 << f;
        for (i, r) in phi.iter().enumerate() {
            if r >> f & 1 == 1 {
                k |= 1 << pivots[i];
            }
        }
        kernel.push(k);
    }
    let mut particular = 0u64;
    for (i, &p) in pivots.iter().enumerate() {
        if values >> i & 1 == 1 {
            particular |= 1 << p;
        }
    }
    Ok((kernel, particular))
}

/// Calls `visit` on every reduced-row-echelon system of `c` independent
/// functionals on `F_2^m`, each exactly once.
///
/// Rows are bitmasks; row `i` has its pivot at its lowest set bit, pivots
/// increase with `i`, and pivot columns are zero in every other row. These
/// systems are in bijection with the codimension-`c` linear subspaces.
pub fn visit_functional_systems(m: usize, c: usize, visit: &mut dyn FnMut(&[u64])) {
    if c > m {
        return;
    }
    let mut rows = vec![0u64; c];
    let mut pivots = vec![0usize; c];
    choose_pivots(m, c, 0, 0, &mut pivots, &mut rows, visit);
}

fn choose_pivots(
    m: usize,
    c: usize,
    depth: usize,
    start: usize,
    pivots: &mut Vec<usize>,
    rows: &mut Vec<u64>,
    visit: &mut dyn FnMut(&[u64]),
) {
    if depth == c {
        // Free entries: for row i, columns > pivots[i] that are not pivots.
        let mut slots: Vec<(usize, usize)> = Vec::new();
        let mut pmask = 0u64;
        for &p in pivots.iter() {
            pmask |= 1 << p;
        }
        for (i, &p) in pivots.iter().enumerate() {
            for col in p + 1..m {
                if pmask >> col & 1 == 0 {
                    slots.push((i, col));
                }
            }
        }
        let total = 1u64 << slots.len();
        for assign in 0..total {
            for (i, &p) in pivots.iter().enumerate() {
                rows[i] = 1 << p;
            }
            for (s, &(i, col)) in slots.iter().enumerate() {
                if assign >> s & 1 == 1 {
                    rows[i] |= 1 << col;
                }
            }
            visit(rows);
        }
        return;
    }
    for p in start..m {
        if m - p < c - depth {
            break;
        }
        pivots[depth] = p;
        choose_pivots(m, c, depth + 1, p + 1, pivots, rows, visit);
    }
}

/// Gaussian binomial coefficient `[m choose c]_2` as a float.
pub fn gaussian_binomial_2(m: usize, c: usize) -> f64 {
    if c > m {
        return 0.0;
    }
    let mut num = 1.0f64;
    for i in 0..c {
        num *= (Float::powi(2f64, (m - i) as i32) - 1.0) / (Float::powi(2f64, (i + 1) as i32) - 1.0);
    }
    num
}

/// Number of affine subspaces of codimension at most `max_codim` inside a
/// `dim`-dimensional affine space.
pub fn count_affine_subspaces(dim: usize, max_codim: usize) -> f64 {
    (0..=max_codim.min(dim))
        .map(|c| gaussian_binomial_2(dim, c) * Float::powi(2f64, c as i32))
        .sum()
}

/// Every affine subspace of `ambient` of codimension (relative to `ambient`)
/// at most `max_codim`, each exactly once, ordered by codimension.
///
/// Refuses with the count estimate when it exceeds `budget`.
pub fn enumerate_affine_subspaces(
    ambient: &AffineSubspace,
    max_codim: usize,
    budget: usize,
) -> Result<Vec<AffineSubspace>> {
    let m = ambient.dim();
    if m > 16 {
        return Err(Error::Refused(format!("ambient dimension {m} above 16")));
    }
    let estimate = count_affine_subspaces(m, max_codim);
    if estimate > budget as f64 {
        return Err(Error::Budget {
            what: "affine subspace enumeration",
            estimate,
            limit: budget as f64,
        });
    }
    let mut out = Vec::with_capacity(estimate as usize);
    let mut failure = None;
    for c in 0..=max_codim.min(m) {
        visit_functional_systems(m, c, &mut |phi| {
            for v in 0..1u64 << c {
                match ambient.sub_by_functionals(phi, v) {
                    Ok(w) => out.push(w),
                    Err(e) => failure = Some(e),
                }
            }
        });
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTable {
    order: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    identity: u32,
}

impl GroupTable {
    /// Validates closure, identity and inverses; associativity is checked
    /// exhaustively when the order is at most 64.
    pub fn from_mul(order: usize, mul: Vec<u32>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidTable("order 0".to_string()));
        }
        if mul.len() != order * order {
            return Err(Error::InvalidTable(format!(
                "expected {} entries, got {}",
                order * order,
                mul.len()
            )));
        }
        if let Some(&bad) = mul.iter().find(|&&v| v as usize >= order) {
            return Err(Error::InvalidTable(format!("entry {bad} out of range")));
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|a| mul[e * order + a] as usize == a && mul[a * order + e] as usize == a))
            .ok_or_else(|| Error::InvalidTable("no identity".to_string()))? as u32;
        let mut inv = vec![0u32; order];
        for a in 0..order {
            let b = (0..order)
                .find(|&b| mul[a * order + b] == identity && mul[b * order + a] == identity)
                .ok_or_else(|| Error::InvalidTable(format!("element {a} has no inverse")))?;
            inv[a] = b as u32;
        }
        if order <= 64 {
            for a in 0..order {
                for b in 0..order {
                    let ab = mul[a * order + b] as usize;
                    for c in 0..order {
                        let bc = mul[b * order + c] as usize;
                        if mul[ab * order + c] != mul[a * order + bc] {
                            return Err(Error::InvalidTable(format!(
                                "associativity fails on ({a}, {b}, {c})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self {
            order,
            mul,
            inv,
            identity,
        })
    }

    /// Parses a header line `order k` followed by `k*k` whitespace-separated indices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty table".to_string()))?;
        let order: usize = header
            .strip_prefix("order")
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let mut mul = Vec::with_capacity(order * order);
        for line in lines {
            for tok in line.split_whitespace() {
                mul.push(tok.parse::<u32>().map_err(|_| Error::Parse(format!("bad entry `{tok}`")))?);
            }
        }
        Self::from_mul(order, mul)
    }

    /// Text form accepted by [`Self::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("order {}\n", self.order);
        for a in 0..self.order {
            let row: Vec<String> = (0..self.order).map(|b| self.mul(a, b).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Cayley table of an abelian [`Group`].
    pub fn from_group(g: &Group) -> Result<Self> {
        if g.order() > 1 << 12 {
            return Err(Error::Refused("table order above 4096".to_string()));
        }
        Self::from_mul(g.order(), g.add_table())
    }

    pub fn cyclic(n: usize) -> Self {
        let mul = (0..n * n).map(|i| ((i / n + i % n) % n) as u32).collect();
        Self {
            order: n,
            mul,
            inv: (0..n).map(|a| ((n - a) % n) as u32).collect(),
            identity: 0,
        }
    }

    /// Dihedral group of order `2n`; `r^i s^j` has index `i + n j`.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidTable("dihedral needs n >= 1".to_string()));
        }
        let ord = 2 * n;
        let mut mul = Vec::with_capacity(ord * ord);
        for x in 0..ord {
            let (a, b) = (x % n, x / n);
            for y in 0..ord {
                let (c, d) = (y % n, y / n);
                let rot = if b == 0 { (a + c) % n } else { (a + n - c) % n };
                mul.push((rot + n * ((b + d) % 2)) as u32);
            }
        }
        Self::from_mul(ord, mul)
    }

    /// Quaternion group `{±1, ±i, ±j, ±k}`; index `2u + s` with unit `u` in `1,i,j,k` and sign bit `s`.
    pub fn quaternion() -> Self {
        // unit products: (unit, sign) for 1,i,j,k.
        const T: [[(usize, usize); 4]; 4] = [
            [(0, 0), (1, 0), (2, 0), (3, 0)],
            [(1, 0), (0, 1), (3, 0), (2, 1)],
            [(2, 0), (3, 1), (0, 1), (1, 0)],
            [(3, 0), (2, 0), (1, 1), (0, 1)],
        ];
        let mut mul = Vec::with_capacity(64);
        for x in 0..8 {
            for y in 0..8 {
                let (u, s) = T[x / 2][y / 2];
                mul.push((2 * u + (s + x % 2 + y % 2) % 2) as u32);
            }
        }
        Self::from_mul(8, mul).expect("quaternion table is a group")
    }

    /// Symmetric group on `k <= 5` points, permutations in lexicographic order.
    pub fn symmetric(k: usize) -> Result<Self> {
        if k == 0 || k > 5 {
            return Err(Error::Refused(format!("symmetric group on {k} points")));
        }
        let mut perms: Vec<Vec<usize>> = Vec::new();
        let mut cur: Vec<usize> = (0..k).collect();
        loop {
            perms.push(cur.clone());
            // next permutation
            let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
                break;
            };
            let j = (i + 1..k).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
        let ord = perms.len();
        let mut mul = Vec::with_capacity(ord * ord);
        for p in &perms {
            for q in &perms {
                // (p q)(t) = p(q(t))
                let r: Vec<usize> = (0..k).map(|t| p[q[t]]).collect();
                mul.push(perms.binary_search(&r).expect("closed") as u32);
            }
        }
        Self::from_mul(ord, mul)
    }

    /// Direct product; `(a, b)` has index `a * |B| + b`.
    pub fn direct_product(&self, other: &Self) -> Result<Self> {
        let (m, n) = (self.order, other.order);
        let mut mul = Vec::with_capacity(m * n * m * n);
        for x in 0..m * n {
            for y in 0..m * n {
                let a = self.mul(x / n, y / n);
                let b = other.mul(x % n, y % n);
                mul.push((a * n + b) as u32);
            }
        }
        Self::from_mul(m * n, mul)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity as usize
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    pub fn commute(&self, a: usize, b: usize) -> bool {
        self.mul(a, b) == self.mul(b, a)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (a + 1..self.order).all(|b| self.commute(a, b)))
    }

    /// Subgroup generated by a set of elements given as a bitmask (order <= 64).
    fn closure_mask(&self, mut mask: u64) -> u64 {
        mask |= 1 << self.identity;
        loop {
            let mut next = mask;
            for a in 0..self.order {
                if mask >> a & 1 == 0 {
                    continue;
                }
                for b in 0..self.order {
                    if mask >> b & 1 == 1 {
                        next |= 1 << self.mul(a, b);
                    }
                }
            }
            if next == mask {
                return mask;
            }
            mask = next;
        }
    }

    /// An abelian subgroup of maximum order, found by exhaustive search.
    ///
    /// Among maximum subgroups the one with the smallest membership bitmask
    /// is returned, so the result is deterministic.
    pub fn largest_abelian_subgroup(&self) -> Result<Vec<usize>> {
        if self.order > 24 {
            return Err(Error::Refused(format!(
                "exhaustive subgroup search needs order <= 24, got {}",
                self.order
            )));
        }
        let start = 1u64 << self.identity;
        let mut seen: BTreeSet<u64> = BTreeSet::new();
        let mut stack = vec![start];
        seen.insert(start);
        let mut best = start;
        while let Some(h) = stack.pop() {
            let (hc, bc) = (h.count_ones(), best.count_ones());
            if hc > bc || (hc == bc && h < best) {
                best = h;
            }
            for g in 0..self.order {
                if h >> g & 1 == 1 {
                    continue;
                }
                let central = (0..self.order).all(|a| h >> a & 1 == 0 || self.commute(a, g));
                if !central {
                    continue;
                }
                let next = self.closure_mask(h | 1 << g);
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        Ok((0..self.order).filter(|&a| best >> a & 1 == 1).collect())
    }

    /// Multiplication table of a subgroup, re-indexed by position in `elems`.
    pub fn subgroup_table(&self, elems: &[usize]) -> Result<Self> {
        let k = elems.len();
        let mut pos = vec![u32::MAX; self.order];
        for (i, &e) in elems.iter().enumerate() {
            pos[e] = i as u32;
        }
        let mut mul = Vec::with_capacity(k * k);
        for &a in elems {
            for &b in elems {
                let p = pos[self.mul(a, b)];
                if p == u32::MAX {
                    return Err(Error::InvalidTable("subset is not closed".to_string()));
                }
                mul.push(p);
            }
        }
        Self::from_mul(k, mul)
    }
}
