// SPDX-License-Identifier: MIT OR Apache-2.0
//! Spreadness tests with self-checking certificates.
//!
//! Every certificate carries the margin `rhs - lhs` of the worst candidate
//! that was examined, so `margin < 0` means a violation was found. When a
//! counterexample is present, recomputing it with the matching `*_margin`
//! function reproduces the stated margin.
//!
//! The combinatorial notions maximize a bilinear form `sum f(x) g(y) M(x, y)`.
//! A bilinear form over a box attains its maximum at a vertex, so searching
//! boolean `f, g` decides the `[0,1]`-valued definition exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bohr::BohrSet;
use crate::error::{Error, Result};
use crate::group::{visit_functional_systems, AffineSubspace};
use crate::setfun::{GridFunction, GroupFunction, SubsetInd};

/// Largest side the exact bilinear search will enumerate.
pub const EXACT_SIDE_LIMIT: usize = 22;
/// Restarts of the alternating heuristic.
pub const DEFAULT_RESTARTS: u32 = 64;
/// Random functional tuples drawn by sampled algebraic spreadness.
pub const DEFAULT_ALG_SAMPLES: u64 = 10_000;
/// Work limit (functional systems times set size) for exact algebraic spreadness.
pub const ALG_WORK_LIMIT: f64 = 1e9;

const TOL: f64 = 1e-12;
const RESYNC: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Spread,
    NotSpread,
}

/// What part of the quantifier a certificate actually covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Every candidate was examined.
    Exhaustive,
    /// Local search from random starts; a spread verdict is unverified.
    Heuristic { restarts: u32 },
    /// Uniformly drawn candidates; a spread verdict holds for the sample only.
    Sampled { samples: u64 },
    /// Bohr-set candidates built from a caller-supplied frequency pool.
    PoolRelative { pool: usize, radii: usize, candidates: usize },
}

/// A witness that recomputes to a violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Counterexample {
    /// Boolean `f = 1_rows`, `g = 1_cols`.
    Rectangle { rows: SubsetInd, cols: SubsetInd },
    /// An affine subspace on which the set is too dense.
    Subspace(AffineSubspace),
    /// A translate `shift + set` on which the set is too dense.
    Bohr { set: BohrSet, shift: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadCertificate {
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    /// `rhs - lhs` at the worst candidate examined.
    pub margin: f64,
    pub coverage: Coverage,
}

impl SpreadCertificate {
    fn from_margin(margin: f64, cex: Option<Counterexample>, coverage: Coverage) -> Self {
        if margin < -TOL {
            Self { verdict: Verdict::NotSpread, counterexample: cex, margin, coverage }
        } else {
            Self { verdict: Verdict::Spread, counterexample: None, margin, coverage }
        }
    }

    pub fn is_spread(&self) -> bool {
        self.verdict == Verdict::Spread
    }

    /// True only for a spread verdict backed by exhaustive search.
    pub fn is_verified_spread(&self) -> bool {
        self.is_spread() && self.coverage == Coverage::Exhaustive
    }
}

/// Search strategy for the bilinear problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BilinearMode {
    /// Enumerates the smaller side; the other side is solved per row.
    Exact,
    /// Best-response iteration from `restarts` random boolean starts.
    Alternating { restarts: u32, seed: u64 },
}

impl BilinearMode {
    pub fn alternating() -> Self {
        Self::Alternating { restarts: DEFAULT_RESTARTS, seed: 0 }
    }
}

/// Dense matrix `M` with `rows x cols` entries for `max sum f(x) g(y) M(x,y)`
/// under cardinality floors on `f` and `g`.
struct Bilinear {
    rows: usize,
    cols: usize,
    m: Vec<f64>,
    min_rows: usize,
    min_cols: usize,
}

/// Best subset of `c` of size at least `min`: every positive entry, topped up
/// with the largest remaining ones. Returns the value and membership.
fn best_subset(c: &[f64], min: usize, order: &mut Vec<usize>) -> (f64, usize) {
    let pos = c.iter().filter(|&&v| v > 0.0).count();
    if pos >= min {
        return (c.iter().filter(|&&v| v > 0.0).sum(), pos);
    }
    order.clear();
    order.extend(0..c.len());
    order.sort_by(|&a, &b| c[b].partial_cmp(&c[a]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    (order[..min].iter().map(|&i| c[i]).sum(), min)
}

fn best_subset_members(c: &[f64], min: usize) -> Vec<bool> {
    let pos = c.iter().filter(|&&v| v > 0.0).count();
    if pos >= min {
        return c.iter().map(|&v| v > 0.0).collect();
    }
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].partial_cmp(&c[a]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut out = vec![false; c.len()];
    for &i in &order[..min] {
        out[i] = true;
    }
    out
}

impl Bilinear {
    fn transpose(&self) -> Self {
        let mut m = vec![0.0; self.m.len()];
        for x in 0..self.rows {
            for y in 0..self.cols {
                m[y * self.rows + x] = self.m[x * self.cols + y];
            }
        }
        Self { rows: self.cols, cols: self.rows, m, min_rows: self.min_cols, min_cols: self.min_rows }
    }

    /// Row scores `c_x = sum_y g(y) M(x, y)`.
    fn scores(&self, g: &[bool]) -> Vec<f64> {
        (0..self.rows)
            .map(|x| {
                let row = &self.m[x * self.cols..(x + 1) * self.cols];
                row.iter().zip(g).filter(|(_, &b)| b).map(|(v, _)| v).sum()
            })
            .collect()
    }

    fn col_scores(&self, f: &[bool]) -> Vec<f64> {
        let mut c = vec![0.0; self.cols];
        for x in (0..self.rows).filter(|&x| f[x]) {
            for (y, v) in c.iter_mut().enumerate() {
                *v += self.m[x * self.cols + y];
            }
        }
        c
    }

    /// Exhaustive over boolean `g` on the columns, in Gray-code order.
    fn exact(&self) -> (Vec<bool>, Vec<bool>) {
        let n = self.cols;
        let mut g = vec![false; n];
        let mut c = vec![0.0; self.rows];
        let mut order = Vec::new();
        let mut card = 0usize;
        let mut best = f64::NEG_INFINITY;
        let mut best_g = g.clone();
        for step in 0u64..1u64 << n {
            if step > 0 {
                let bit = step.trailing_zeros() as usize;
                g[bit] = !g[bit];
                let s = if g[bit] { 1.0 } else { -1.0 };
                if g[bit] {
                    card += 1;
                } else {
                    card -= 1;
                }
                if step % RESYNC == 0 {
                    c = self.scores(&g);
                } else {
                    for (x, v) in c.iter_mut().enumerate() {
                        *v += s * self.m[x * n + bit];
                    }
                }
            }
            if card < self.min_cols {
                continue;
            }
            let (val, _) = best_subset(&c, self.min_rows, &mut order);
            if val > best + TOL {
                best = val;
                best_g.clone_from(&g);
            }
        }
        let f = best_subset_members(&self.scores(&best_g), self.min_rows);
        (f, best_g)
    }

    fn value(&self, f: &[bool], g: &[bool]) -> f64 {
        let mut s = 0.0;
        for x in (0..self.rows).filter(|&x| f[x]) {
            let row = &self.m[x * self.cols..(x + 1) * self.cols];
            s += row.iter().zip(g).filter(|(_, &b)| b).map(|(v, _)| v).sum::<f64>();
        }
        s
    }

    fn alternating(&self, restarts: u32, seed: u64) -> (Vec<bool>, Vec<bool>) {
        let mut best = f64::NEG_INFINITY;
        let mut best_pair = (vec![true; self.rows], vec![true; self.cols]);
        for r in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let p = rng.gen_range(0.05..0.95);
            let mut g: Vec<bool> = (0..self.cols).map(|_| rng.gen_bool(p)).collect();
            while g.iter().filter(|&&b| b).count() < self.min_cols {
                let y = rng.gen_range(0..self.cols);
                g[y] = true;
            }
            let mut f = best_subset_members(&self.scores(&g), self.min_rows);
            let mut val = self.value(&f, &g);
            loop {
                g = best_subset_members(&self.col_scores(&f), self.min_cols);
                f = best_subset_members(&self.scores(&g), self.min_rows);
                let next = self.value(&f, &g);
                if next <= val + TOL {
                    val = val.max(next);
                    break;
                }
                val = next;
            }
            if val > best + TOL {
                best = val;
                best_pair = (f, g);
            }
        }
        best_pair
    }

    /// Maximizer `(f on rows, g on cols)`.
    fn solve(&self, mode: BilinearMode) -> Result<(Vec<bool>, Vec<bool>)> {
        match mode {
            BilinearMode::Exact => {
                let side = self.rows.min(self.cols);
                if side > EXACT_SIDE_LIMIT {
                    return Err(Error::Precondition(format!(
                        "exact search needs a side of at most {EXACT_SIDE_LIMIT}, smaller side is {side}"
                    )));
                }
                if self.cols <= self.rows {
                    Ok(self.exact())
                } else {
                    let (g, f) = self.transpose().exact();
                    Ok((f, g))
                }
            }
            BilinearMode::Alternating { restarts, seed } => Ok(self.alternating(restarts.max(1), seed)),
        }
    }
}

fn coverage_of(mode: BilinearMode) -> Coverage {
    match mode {
        BilinearMode::Exact => Coverage::Exhaustive,
        BilinearMode::Alternating { restarts, .. } => Coverage::Heuristic { restarts },
    }
}

fn check_grid(t: &SubsetInd, rows: usize, cols: usize) -> Result<()> {
    if t.domain() != rows * cols {
        return Err(Error::DimensionMismatch { expected: rows * cols, got: t.domain() });
    }
    if rows == 0 || cols == 0 {
        return Err(Error::EmptySubset);
    }
    Ok(())
}

/// `tau E[f] E[g] + gamma - E[f g 1_T]` for boolean `f = 1_F`, `g = 1_G`.
pub fn comb_margin(t: &SubsetInd, rows: usize, cols: usize, tau: f64, gamma: f64, f: &SubsetInd, g: &SubsetInd) -> Result<f64> {
    check_grid(t, rows, cols)?;
    if f.domain() != rows || g.domain() != cols {
        return Err(Error::DimensionMismatch { expected: rows + cols, got: f.domain() + g.domain() });
    }
    let mut hits = 0usize;
    for x in f.iter() {
        hits += g.iter().filter(|&y| t.contains(x * cols + y)).count();
    }
    let n = (rows * cols) as f64;
    Ok(tau * f.card() as f64 * g.card() as f64 / n + gamma - hits as f64 / n)
}

/// Decides `(tau, gamma)`-combinatorial spreadness of `T` on `rows x cols`
/// (cell `(x, y)` at index `x * cols + y`).
pub fn is_comb_spread(t: &SubsetInd, rows: usize, cols: usize, tau: f64, gamma: f64, mode: BilinearMode) -> Result<SpreadCertificate> {
    check_grid(t, rows, cols)?;
    let m = (0..rows * cols).map(|i| if t.contains(i) { 1.0 - tau } else { -tau }).collect();
    let b = Bilinear { rows, cols, m, min_rows: 0, min_cols: 0 };
    let (f, g) = b.solve(mode)?;
    let (f, g) = (SubsetInd::from_bools(&f), SubsetInd::from_bools(&g));
    let margin = comb_margin(t, rows, cols, tau, gamma, &f, &g)?;
    let cex = Counterexample::Rectangle { rows: f, cols: g };
    Ok(SpreadCertificate::from_margin(margin, Some(cex), coverage_of(mode)))
}

/// Smallest cardinality `m` of a subset of `n` points with `m / n >= 2^{-s}`.
pub fn min_card(n: usize, s: f64) -> usize {
    let need = n as f64 * Float::exp2(-s);
    let m = Float::ceil(need - 1e-9) as usize;
    m.clamp(1, n)
}

/// `(1+eps) E[f] E[g1] E[g2] - E[f g1 g2]` for boolean `g1 = 1_G1`, `g2 = 1_G2`.
pub fn asym_margin(f: &GridFunction, eps: f64, g1: &SubsetInd, g2: &SubsetInd) -> Result<f64> {
    if g1.domain() != f.rows() || g2.domain() != f.cols() {
        return Err(Error::DimensionMismatch { expected: f.rows() + f.cols(), got: g1.domain() + g2.domain() });
    }
    let mut s = 0.0;
    for x in g1.iter() {
        s += g2.iter().map(|y| f.get(x, y)).sum::<f64>();
    }
    let n = (f.rows() * f.cols()) as f64;
    Ok((1.0 + eps) * f.mean() * g1.card() as f64 * g2.card() as f64 / n - s / n)
}

/// Decides `(s, t, eps)`-combinatorial spreadness of a `[0,1]`-valued `f`:
/// boolean `g1, g2` of densities at least `2^{-s}`, `2^{-t}`.
pub fn is_asym_spread(f: &GridFunction, s: f64, t: f64, eps: f64, mode: BilinearMode) -> Result<SpreadCertificate> {
    if !f.is_nonneg() {
        return Err(Error::Precondition("f must take values in [0, 1]".into()));
    }
    if s < 0.0 || t < 0.0 {
        return Err(Error::Precondition("s and t must be nonnegative".into()));
    }
    let kappa = (1.0 + eps) * f.mean();
    let m = f.data().iter().map(|&v| v - kappa).collect();
    let b = Bilinear { rows: f.rows(), cols: f.cols(), m, min_rows: min_card(f.rows(), s), min_cols: min_card(f.cols(), t) };
    let (g1, g2) = b.solve(mode)?;
    let (g1, g2) = (SubsetInd::from_bools(&g1), SubsetInd::from_bools(&g2));
    let margin = asym_margin(f, eps, &g1, &g2)?;
    let cex = Counterexample::Rectangle { rows: g1, cols: g2 };
    Ok(SpreadCertificate::from_margin(margin, Some(cex), coverage_of(mode)))
}

/// Search over affine subspaces of a fixed codimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgMode {
    Exact,
    Sampled { samples: u64, seed: u64 },
}

fn check_in_subspace(x: &SubsetInd, w: &AffineSubspace) -> Result<()> {
    let n = w.ambient_dim();
    if x.domain() != 1usize << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: x.domain() });
    }
    if let Some(bad) = x.iter().find(|&p| !w.contains(p as u64)) {
        return Err(Error::Precondition(format!("point {bad} lies outside W")));
    }
    Ok(())
}

/// `(1+eps) |X|/|W| - |X n W'|/|W'|`.
pub fn alg_margin(x: &SubsetInd, w: &AffineSubspace, eps: f64, sub: &AffineSubspace) -> Result<f64> {
    check_in_subspace(x, w)?;
    if !sub.is_subset_of(w) {
        return Err(Error::Precondition("W' is not contained in W".into()));
    }
    let inside = x.iter().filter(|&p| sub.contains(p as u64)).count();
    Ok((1.0 + eps) * x.card() as f64 / w.size() as f64 - inside as f64 / sub.size() as f64)
}

/// Coset counts of `X` under the functional system `phi` on the local
/// coordinates of `W`; returns the densest coset value.
fn densest_coset(local: &[u64], phi: &[u64], counts: &mut Vec<usize>) -> (usize, u64) {
    counts.clear();
    counts.resize(1 << phi.len(), 0);
    for &u in local {
        let mut v = 0usize;
        for (i, &r) in phi.iter().enumerate() {
            v |= (((u & r).count_ones() & 1) as usize) << i;
        }
        counts[v] += 1;
    }
    let (mut bv, mut bc) = (0u64, 0usize);
    for (v, &c) in counts.iter().enumerate() {
        if c > bc {
            bc = c;
            bv = v as u64;
        }
    }
    (bc, bv)
}

/// Echelon form of a random functional tuple; rank may fall below `r`.
fn echelon(rows: &mut Vec<u64>) {
    let mut out: Vec<u64> = Vec::new();
    for &v in rows.iter() {
        let mut v = v;
        for &b in &out {
            if v >> b.trailing_zeros() & 1 == 1 {
                v ^= b;
            }
        }
        if v == 0 {
            continue;
        }
        let p = v.trailing_zeros();
        for b in out.iter_mut() {
            if *b >> p & 1 == 1 {
                *b ^= v;
            }
        }
        out.push(v);
    }
    out.sort_by_key(|b| b.trailing_zeros());
    *rows = out;
}

/// Decides `(r, eps)`-algebraic spreadness of `X` inside the affine subspace `W`.
///
/// Only codimension exactly `min(r, dim W)` is searched: any affine `W'` of
/// smaller codimension is partitioned by codimension-`r` cosets, one of which
/// is at least as dense.
pub fn is_alg_spread_f2(x: &SubsetInd, w: &AffineSubspace, r: usize, eps: f64, mode: AlgMode) -> Result<SpreadCertificate> {
    check_in_subspace(x, w)?;
    let m = w.dim();
    let c = r.min(m);
    let local: Vec<u64> = x.iter().map(|p| w.local_coords(p as u64).unwrap_or(0)).collect();
    let threshold = (1.0 + eps) * x.card() as f64 / w.size() as f64;
    let mut counts = Vec::new();
    let mut best: Option<(usize, Vec<u64>, u64)> = None;
    let mut consider = |phi: &[u64], best: &mut Option<(usize, Vec<u64>, u64)>| {
        let (cnt, v) = densest_coset(&local, phi, &mut counts);
        let dense = cnt as f64 / (1usize << (m - phi.len())) as f64;
        let cur = best.as_ref().map(|(bc, bp, _)| *bc as f64 / (1usize << (m - bp.len())) as f64);
        if cur.map_or(true, |d| dense > d + TOL) {
            *best = Some((cnt, phi.to_vec(), v));
        }
    };
    let coverage = match mode {
        AlgMode::Exact => {
            let systems = crate::group::gaussian_binomial_2(m, c);
            let work = systems * (x.card().max(1) + (1 << c)) as f64;
            if work > ALG_WORK_LIMIT {
                return Err(Error::Budget { what: "algebraic spreadness enumeration", estimate: work, limit: ALG_WORK_LIMIT });
            }
            visit_functional_systems(m, c, &mut |phi| consider(phi, &mut best));
            Coverage::Exhaustive
        }
        AlgMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = if m == 0 { 0 } else { (1u64 << m) - 1 };
            for _ in 0..samples {
                let mut rows: Vec<u64> = (0..c).map(|_| rng.gen::<u64>() & mask).collect();
                echelon(&mut rows);
                consider(&rows, &mut best);
            }
            Coverage::Sampled { samples }
        }
    };
    let Some((cnt, phi, v)) = best else {
        let margin = threshold - x.card() as f64 / w.size() as f64;
        return Ok(SpreadCertificate::from_margin(margin, None, coverage));
    };
    let sub = w.sub_by_functionals(&phi, v)?;
    let margin = threshold - cnt as f64 / sub.size() as f64;
    Ok(SpreadCertificate::from_margin(margin, Some(Counterexample::Subspace(sub)), coverage))
}

/// One descent of [`spread_extract_f2`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractStep {
    pub subspace: AffineSubspace,
    pub density_before: f64,
    pub density_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub subspace: AffineSubspace,
    pub set: SubsetInd,
    pub trace: Vec<ExtractStep>,
    pub certificate: SpreadCertificate,
}

/// Descends to a violating subspace until `X n W'` is `(r, eps)`-algebraically
/// spread in `W'`. Each step raises the density by more than `1 + eps`.
pub fn spread_extract_f2(x: &SubsetInd, w: &AffineSubspace, r: usize, eps: f64) -> Result<Extraction> {
    check_in_subspace(x, w)?;
    if x.is_empty() {
        return Err(Error::EmptySubset);
    }
    if eps <= 0.0 {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let mut cur_w = w.clone();
    let mut cur_x = x.clone();
    let mut trace = Vec::new();
    loop {
        let cert = is_alg_spread_f2(&cur_x, &cur_w, r, eps, AlgMode::Exact)?;
        let before = cur_x.card() as f64 / cur_w.size() as f64;
        match cert.counterexample.clone() {
            Some(Counterexample::Subspace(sub)) if !cert.is_spread() => {
                let kept: Vec<usize> = cur_x.iter().filter(|&p| sub.contains(p as u64)).collect();
                cur_x = SubsetInd::from_indices(x.domain(), kept)?;
                let after = cur_x.card() as f64 / sub.size() as f64;
                trace.push(ExtractStep { subspace: sub.clone(), density_before: before, density_after: after });
                cur_w = sub;
            }
            _ => {
                return Ok(Extraction { subspace: cur_w, set: cur_x, trace, certificate: cert });
            }
        }
    }
}

/// `E_{x~B1} |E_{y~B2} f(x+y) - E_{B1} f|` together with `E_{B1} f`.
pub fn l1_deviation(f: &GroupFunction, b1: &BohrSet, b2: &BohrSet) -> Result<(f64, f64)> {
    if f.group() != b1.group() || f.group() != b2.group() {
        return Err(Error::GroupMismatch);
    }
    let g = f.group();
    let v = f.values();
    let m1 = b1.members().to_vec();
    let m2 = b2.members().to_vec();
    let mean = m1.iter().map(|&x| v[x]).sum::<f64>() / m1.len() as f64;
    let mut dev = 0.0;
    for &x in &m1 {
        let local = m2.iter().map(|&y| v[g.add(x, y)]).sum::<f64>() / m2.len() as f64;
        dev += (local - mean).abs();
    }
    Ok((dev / m1.len() as f64, mean))
}

/// Decides `(B1, B2, eps)` l1-spreadness of `f`; the margin is `eps E[f] - deviation`.
pub fn is_l1_spread(f: &GroupFunction, b1: &BohrSet, b2: &BohrSet, eps: f64) -> Result<SpreadCertificate> {
    if b1.freqs() != b2.freqs() {
        return Err(Error::Precondition("B1 and B2 must share frequencies".into()));
    }
    if b2.radius() > b1.radius() {
        return Err(Error::Precondition("B2 must not be wider than B1".into()));
    }
    if f.values().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Precondition("f must take values in [0, 1]".into()));
    }
    let (dev, mean) = l1_deviation(f, b1, b2)?;
    if mean <= 0.0 {
        return Err(Error::EmptySubset);
    }
    Ok(SpreadCertificate::from_margin(eps * mean - dev, None, Coverage::Exhaustive))
}
