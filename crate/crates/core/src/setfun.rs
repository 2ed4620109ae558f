// SPDX-License-Identifier: MIT OR Apache-2.0
//! Subsets, grid functions and group functions.
//!
//! Every average is normalized by the domain size.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::transform::{dft_group, wht};

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean with pairwise summation; zero on an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// A subset of `{0, .., n-1}` as a packed bit array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetInd {
    n: usize,
    words: Vec<u64>,
    card: usize,
}

impl SubsetInd {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(64)],
            card: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.trim();
        s.card = n;
        s
    }

    /// Builds from indices; duplicates are ignored.
    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, it: I) -> Result<Self> {
        let mut s = Self::empty(n);
        for i in it {
            if i >= n {
                return Err(Error::DimensionMismatch { expected: n, got: i });
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.insert(i);
            }
        }
        s
    }

    /// Builds from packed words; bits past `n` must be clear.
    pub fn from_words(n: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != n.div_ceil(64) {
            return Err(Error::DimensionMismatch {
                expected: n.div_ceil(64),
                got: words.len(),
            });
        }
        let mut s = Self { n, words, card: 0 };
        let before: u32 = s.words.iter().map(|w| w.count_ones()).sum();
        s.trim();
        let card: u32 = s.words.iter().map(|w| w.count_ones()).sum();
        if card != before {
            return Err(Error::Precondition("bits set beyond the domain".into()));
        }
        s.card = card as usize;
        Ok(s)
    }

    fn trim(&mut self) {
        let r = self.n % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn domain(&self) -> usize {
        self.n
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.card as f64 / self.n as f64
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.n, "index {i} outside domain {}", self.n);
        let w = &mut self.words[i >> 6];
        if *w >> (i & 63) & 1 == 0 {
            *w |= 1 << (i & 63);
            self.card += 1;
        }
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.n {
            let w = &mut self.words[i >> 6];
            if *w >> (i & 63) & 1 == 1 {
                *w &= !(1 << (i & 63));
                self.card -= 1;
            }
        }
    }

    pub fn complement(&self) -> Self {
        let mut s = Self {
            n: self.n,
            words: self.words.iter().map(|w| !w).collect(),
            card: self.n - self.card,
        };
        s.trim();
        s
    }

    fn zip_with(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let words: Vec<u64> = self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect();
        let card = words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(Self { n: self.n, words, card })
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.n == other.n && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            core::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn indicator(&self) -> Vec<f64> {
        (0..self.n).map(|i| if self.contains(i) { 1.0 } else { 0.0 }).collect()
    }
}

/// A real function on `rows x cols`, row-major, with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    nonneg: bool,
}

impl GridFunction {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Precondition("grid dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::Precondition("grid entries must lie in [-1, 1]".into()));
        }
        let nonneg = data.iter().all(|&v| v >= 0.0);
        Ok(Self {
            rows,
            cols,
            data,
            nonneg,
        })
    }

    pub fn constant(rows: usize, cols: usize, v: f64) -> Result<Self> {
        Self::new(rows, cols, vec![v; rows * cols])
    }

    /// Indicator of a subset of the row-major grid.
    pub fn from_subset(rows: usize, cols: usize, s: &SubsetInd) -> Result<Self> {
        if s.domain() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: s.domain(),
            });
        }
        Self::new(rows, cols, s.indicator())
    }

    /// Indicator of a rectangle `R x C`.
    pub fn rectangle(rows: &SubsetInd, cols: &SubsetInd) -> Result<Self> {
        let mut data = vec![0.0; rows.domain() * cols.domain()];
        for i in rows.iter() {
            for j in cols.iter() {
                data[i * cols.domain() + j] = 1.0;
            }
        }
        Self::new(rows.domain(), cols.domain(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mean(&self) -> f64 {
        mean(&self.data)
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
            nonneg: self.nonneg,
        }
    }

    /// Entrywise `f(x, y) * a(x) * b(y)`.
    pub fn weighted(&self, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != self.rows || b.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: a.len(),
            });
        }
        let mut data = self.data.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[i * self.cols + j] *= a[i] * b[j];
            }
        }
        Self::new(self.rows, self.cols, data)
    }

    /// Support as a subset of the row-major grid.
    pub fn support(&self) -> SubsetInd {
        SubsetInd::from_bools(&self.data.iter().map(|&v| v != 0.0).collect::<Vec<_>>())
    }
}

/// Submatrix on the given rows and columns, in increasing index order.
pub fn restrict(f: &GridFunction, rows: &SubsetInd, cols: &SubsetInd) -> Result<GridFunction> {
    if rows.domain() != f.rows || cols.domain() != f.cols {
        return Err(Error::DimensionMismatch {
            expected: f.rows,
            got: rows.domain(),
        });
    }
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptySubset);
    }
    let r: Vec<usize> = rows.to_vec();
    let c: Vec<usize> = cols.to_vec();
    let mut data = Vec::with_capacity(r.len() * c.len());
    for &i in &r {
        for &j in &c {
            data.push(f.get(i, j));
        }
    }
    GridFunction::new(r.len(), c.len(), data)
}

/// A real function on an abelian group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFunction {
    group: Group,
    values: Vec<f64>,
}

impl GroupFunction {
    pub fn new(group: Group, values: Vec<f64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::DimensionMismatch {
                expected: group.order(),
                got: values.len(),
            });
        }
        Ok(Self { group, values })
    }

    pub fn indicator(group: Group, s: &SubsetInd) -> Result<Self> {
        Self::new(group, s.indicator())
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

/// `(f * g)(x) = E_y f(y) g(x - y)` by the double loop.
pub fn convolve_naive(f: &GroupFunction, g: &GroupFunction) -> Result<GroupFunction> {
    if f.group != g.group {
        return Err(Error::GroupMismatch);
    }
    let grp = &f.group;
    let n = grp.order();
    let mut out = vec![0.0; n];
    let mut terms = vec![0.0; n];
    for (x, o) in out.iter_mut().enumerate() {
        for y in 0..n {
            terms[y] = f.values[y] * g.values[grp.sub(x, y)];
        }
        *o = mean(&terms);
    }
    GroupFunction::new(grp.clone(), out)
}

/// `(f * g)(x) = E_y f(y) g(x - y)` through the group transform.
///
/// Uses the Walsh-Hadamard transform on `F_2^n` and per-axis DFTs otherwise.
pub fn convolve(f: &GroupFunction, g: &GroupFunction) -> Result<GroupFunction> {
    if f.group != g.group {
        return Err(Error::GroupMismatch);
    }
    let grp = &f.group;
    let n = grp.order() as f64;
    if grp.is_f2() {
        let mut a = f.values.clone();
        let mut b = g.values.clone();
        wht(&mut a);
        wht(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        wht(&mut a);
        let s = 1.0 / (n * n);
        return GroupFunction::new(grp.clone(), a.iter().map(|v| v * s).collect());
    }
    let mut a: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut b: Vec<Complex64> = g.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft_group(grp, &mut a, false);
    dft_group(grp, &mut b, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    dft_group(grp, &mut a, true);
    let s = 1.0 / (n * n);
    GroupFunction::new(grp.clone(), a.iter().map(|v| v.re * s).collect())
}

/// `(E_x |f(x)|^k)^{1/k}`.
pub fn p_norm(f: &GroupFunction, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("p_norm needs k >= 1".into()));
    }
    let powers: Vec<f64> = f.values.iter().map(|v| Float::powi(Float::abs(*v), k as i32)).collect();
    Ok(Float::powf(mean(&powers), 1.0 / k as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolve_point_masses() {
        let g = Group::cyclic(4).unwrap();
        let f = GroupFunction::new(g.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let h = GroupFunction::new(g.clone(), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let c = convolve(&f, &h).unwrap();
        for (x, v) in c.values().iter().enumerate() {
            let want = if x == 1 { 0.25 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
        let one = GroupFunction::new(g.clone(), vec![1.0; 4]).unwrap();
        assert!(convolve(&one, &one).unwrap().values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn restrict_and_errors() {
        let f = GridFunction::new(2, 3, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let r = SubsetInd::from_indices(2, [1]).unwrap();
        let c = SubsetInd::from_indices(3, [2]).unwrap();
        assert_eq!(restrict(&f, &r, &c).unwrap().data(), &[0.5]);
        assert_eq!(
            restrict(&f, &SubsetInd::full(2), &SubsetInd::full(3)).unwrap(),
            f
        );
        assert_eq!(restrict(&f, &SubsetInd::empty(2), &c), Err(Error::EmptySubset));
    }

    #[test]
    fn p_norm_indicator() {
        let g = Group::cyclic(8).unwrap();
        let s = SubsetInd::from_indices(8, [0, 3]).unwrap();
        let f = GroupFunction::indicator(g, &s).unwrap();
        for k in 1..5 {
            assert!((p_norm(&f, k).unwrap() - 0.25f64.powf(1.0 / k as f64)).abs() < 1e-12);
        }
    }
}
