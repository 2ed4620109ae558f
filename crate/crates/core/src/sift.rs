// SPDX-License-Identifier: MIT OR Apache-2.0
//! Sifting: locating a dense product structure `g1(x) g2(y)` on which a
//! nonnegative grid function correlates, plus the scalar inequalities used by
//! the spectral positivity argument.
//!
//! Witnesses are always recomputed from their vectors; nothing in a report is
//! trusted without the vectors that produced it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, Num};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gridnorm::{codegree, grid_power, grid_power_2k, InequalityReport, EXACT_WORK_LIMIT};
use crate::setfun::{GridFunction, SubsetInd};

/// Exponent constant in the plain sifting mass floor `eps * alpha^{C (k + l)}`.
pub const C_SIFT: f64 = 2.0;
/// Exponent constant in the row-side floor of relative sifting.
pub const C_REL_ROWS: f64 = 1.0;
/// Exponent constant in the column-side floor of relative sifting.
pub const C_REL_COLS: f64 = 1.0;
/// Exponent constant in the admissible `gamma` of relative sifting.
pub const C_REL_GAMMA: f64 = 1.0;
/// Even Hölder exponent `l` used by relative sifting.
pub const REL_ELL: u32 = 2;
/// Default number of random vertex assignments once exhaustive search is over budget.
pub const DEFAULT_SAMPLES: u64 = 100_000;

const REL_TOL: f64 = 1e-12;

/// Product witness `(g1, g2)` with its recomputed statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SiftWitness {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    /// `E[f g1 g2] / (E[g1] E[g2])`.
    pub achieved: f64,
    /// `(E[g1], E[g2])`.
    pub masses: (f64, f64),
    /// Translate carried by the Bohr-set variant.
    pub shift: Option<usize>,
}

impl SiftWitness {
    /// Evaluates `g1, g2` against `f`. Both masses must be positive.
    pub fn new(f: &GridFunction, g1: Vec<f64>, g2: Vec<f64>, shift: Option<usize>) -> Result<Self> {
        if g1.len() != f.rows() {
            return Err(Error::DimensionMismatch { expected: f.rows(), got: g1.len() });
        }
        if g2.len() != f.cols() {
            return Err(Error::DimensionMismatch { expected: f.cols(), got: g2.len() });
        }
        let m1 = g1.iter().sum::<f64>() / g1.len() as f64;
        let m2 = g2.iter().sum::<f64>() / g2.len() as f64;
        if m1 <= 0.0 || m2 <= 0.0 {
            return Err(Error::EmptySubset);
        }
        let mut s = 0.0;
        for (x, &a) in g1.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row: f64 = f.row(x).iter().zip(&g2).map(|(v, b)| v * b).sum();
            s += a * row;
        }
        let e = s / (f.rows() * f.cols()) as f64;
        Ok(Self { g1, g2, achieved: e / (m1 * m2), masses: (m1, m2), shift })
    }
}

/// A set `T` claimed to be `(tau, gamma)`-combinatorially spread.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadMajorant {
    pub t: SubsetInd,
    pub rows: usize,
    pub cols: usize,
    pub tau: f64,
    pub gamma: f64,
}

impl SpreadMajorant {
    pub fn new(rows: usize, cols: usize, t: SubsetInd, tau: f64, gamma: f64) -> Result<Self> {
        if t.domain() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: t.domain() });
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Precondition(format!("tau = {tau} must lie in (0, 1]")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::Precondition(format!("gamma = {gamma} must be nonnegative")));
        }
        Ok(Self { t, rows, cols, tau, gamma })
    }

    pub fn is_full(&self) -> bool {
        self.t.card() == self.rows * self.cols
    }
}

/// How the vertex assignment was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Search {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

/// Tuning for the vertex-assignment search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftOptions {
    /// Exhaustive search runs when its estimated cost is at most this.
    pub work_limit: f64,
    pub samples: u64,
    pub seed: u64,
}

impl Default for SiftOptions {
    fn default() -> Self {
        Self { work_limit: EXACT_WORK_LIMIT, samples: DEFAULT_SAMPLES, seed: 0 }
    }
}

/// Telescoping edge `(t, i*, j*)`: the edge added at step `t + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TelescopeEdge {
    pub t: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiftReport {
    pub witness: SiftWitness,
    /// `‖f‖_{G(k,l)}` for the requested parameters.
    pub norm: f64,
    /// Smallest `(i, j)` with `‖f‖_{G(i,j)} >= alpha`.
    pub level: (u32, u32),
    pub edge: Option<TelescopeEdge>,
    /// `E[(f - (1 - eps) alpha) g1 g2]` at the chosen assignment.
    pub bracket: f64,
    /// Averaging lower bound the bracket is guaranteed to meet.
    pub bracket_bound: f64,
    /// `eps * alpha^{C_SIFT (k + l)}`.
    pub mass_floor: f64,
    pub constant: f64,
    pub search: Search,
}

/// Homomorphism density `E prod_{(a,b) in edges} f(x_a, y_b)` of a bipartite
/// graph with `nx` row vertices and `ny` column vertices.
pub fn hom_density(f: &GridFunction, nx: usize, ny: usize, edges: &[(usize, usize)]) -> Result<f64> {
    if edges.iter().any(|&(a, b)| a >= nx || b >= ny) {
        return Err(Error::Precondition("edge endpoint out of range".into()));
    }
    let e = edges.len().max(1) as f64;
    let cost_rows = Float::powi(f.rows() as f64, nx as i32) * f.cols() as f64 * e;
    let cost_cols = Float::powi(f.cols() as f64, ny as i32) * f.rows() as f64 * e;
    if cost_rows.min(cost_cols) > EXACT_WORK_LIMIT {
        return Err(Error::Budget {
            what: "homomorphism density",
            estimate: cost_rows.min(cost_cols),
            limit: EXACT_WORK_LIMIT,
        });
    }
    if cost_cols < cost_rows {
        let swapped: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (b, a)).collect();
        return Ok(hom_rows(&f.transpose(), ny, nx, &swapped));
    }
    Ok(hom_rows(f, nx, ny, edges))
}

/// Enumerates row tuples; column vertices are averaged out independently.
fn hom_rows(f: &GridFunction, nx: usize, ny: usize, edges: &[(usize, usize)]) -> f64 {
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); ny];
    for &(a, b) in edges {
        nbrs[b].push(a);
    }
    let (r, c) = (f.rows(), f.cols());
    let mut xs = vec![0usize; nx];
    let mut total = 0.0;
    let mut count = 0u64;
    loop {
        let mut p = 1.0;
        for nb in nbrs.iter().filter(|nb| !nb.is_empty()) {
            let mut s = 0.0;
            for y in 0..c {
                let mut q = 1.0;
                for &a in nb {
                    q *= f.get(xs[a], y);
                }
                s += q;
            }
            p *= s / c as f64;
            if p == 0.0 {
                break;
            }
        }
        total += p;
        count += 1;
        if !odometer(&mut xs, r) {
            break;
        }
    }
    total / count as f64
}

fn odometer(v: &mut [usize], base: usize) -> bool {
    for d in v.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Next nondecreasing sequence over `0..n` in lexicographic order.
fn next_multiset(v: &mut [usize], n: usize) -> bool {
    let Some(i) = v.iter().rposition(|&d| d + 1 < n) else {
        return false;
    };
    let d = v[i] + 1;
    for slot in v[i..].iter_mut() {
        *slot = d;
    }
    true
}

fn multiset_count(n: usize, m: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..m {
        c = c * (n + i) as f64 / (i + 1) as f64;
    }
    c
}

/// Edges of `K_{i-1,j-1}` followed by the `i + j - 1` edges completing `K_{i,j}`.
fn telescope_chain(i: usize, j: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut base = Vec::new();
    for a in 0..i - 1 {
        for b in 0..j - 1 {
            base.push((a, b));
        }
    }
    let mut added = Vec::new();
    for b in 0..j - 1 {
        added.push((i - 1, b));
    }
    for a in 0..i - 1 {
        added.push((a, j - 1));
    }
    added.push((i - 1, j - 1));
    (base, added)
}

struct Assignment {
    bracket: f64,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

/// Maximizes `E[(f - c) g1 g2]` over `g1(x) = prod_{y in Y} f(x, y)` and
/// `g2(y) = prod_{x in X} f(x, y)`, with `|X| = nx`, `|Y| = ny`.
fn search_assignment(f: &GridFunction, c: f64, nx: usize, ny: usize, opts: &SiftOptions) -> (Assignment, Search) {
    let (r, cc) = (f.rows() as f64, f.cols() as f64);
    let mx = multiset_count(f.rows(), nx);
    let my = multiset_count(f.cols(), ny);
    let cost = mx * r * cc + mx * my * r + my * r * ny as f64;
    if cost <= opts.work_limit {
        // Cache the smaller family of product vectors.
        if my * r <= mx * cc {
            (exhaustive(f, c, nx, ny), Search::Exhaustive)
        } else {
            let a = exhaustive(&f.transpose(), c, ny, nx);
            (Assignment { bracket: a.bracket, rows: a.cols, cols: a.rows }, Search::Exhaustive)
        }
    } else {
        (sampled(f, c, nx, ny, opts), Search::Sampled { samples: opts.samples, seed: opts.seed })
    }
}

fn exhaustive(f: &GridFunction, c: f64, nx: usize, ny: usize) -> Assignment {
    let (r, cols) = (f.rows(), f.cols());
    let mut cache: Vec<f64> = Vec::new();
    let mut ys = vec![0usize; ny];
    loop {
        for x in 0..r {
            cache.push(ys.iter().map(|&y| f.get(x, y)).product());
        }
        if !next_multiset(&mut ys, cols) {
            break;
        }
    }
    let mut best = Assignment { bracket: f64::NEG_INFINITY, rows: Vec::new(), cols: Vec::new() };
    let mut xs = vec![0usize; nx];
    let mut h = vec![0.0; r];
    let scale = (r * cols) as f64;
    loop {
        for (x, hx) in h.iter_mut().enumerate() {
            let mut s = 0.0;
            for y in 0..cols {
                let g2: f64 = xs.iter().map(|&a| f.get(a, y)).product();
                s += (f.get(x, y) - c) * g2;
            }
            *hx = s;
        }
        let mut ys = vec![0usize; ny];
        for g1 in cache.chunks(r) {
            let b = h.iter().zip(g1).map(|(p, q)| p * q).sum::<f64>() / scale;
            if b > best.bracket {
                best = Assignment { bracket: b, rows: xs.clone(), cols: ys.clone() };
            }
            next_multiset(&mut ys, cols);
        }
        if !next_multiset(&mut xs, r) {
            break;
        }
    }
    best
}

fn sampled(f: &GridFunction, c: f64, nx: usize, ny: usize, opts: &SiftOptions) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = Assignment { bracket: f64::NEG_INFINITY, rows: Vec::new(), cols: Vec::new() };
    for _ in 0..opts.samples.max(1) {
        let mut xs: Vec<usize> = (0..nx).map(|_| rng.gen_range(0..f.rows())).collect();
        let mut ys: Vec<usize> = (0..ny).map(|_| rng.gen_range(0..f.cols())).collect();
        xs.sort_unstable();
        ys.sort_unstable();
        let (g1, g2) = products(f, &xs, &ys);
        let b = bracket(f, c, &g1, &g2);
        if b > best.bracket {
            best = Assignment { bracket: b, rows: xs, cols: ys };
        }
    }
    best
}

fn products(f: &GridFunction, xs: &[usize], ys: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let g1 = (0..f.rows()).map(|x| ys.iter().map(|&y| f.get(x, y)).product()).collect();
    let g2 = (0..f.cols()).map(|y| xs.iter().map(|&x| f.get(x, y)).product()).collect();
    (g1, g2)
}

fn bracket(f: &GridFunction, c: f64, g1: &[f64], g2: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, &a) in g1.iter().enumerate() {
        if a != 0.0 {
            s += a * f.row(x).iter().zip(g2).map(|(v, b)| (v - c) * b).sum::<f64>();
        }
    }
    s / (f.rows() * f.cols()) as f64
}

fn check_unit_interval(name: &str, v: f64, closed_top: bool) -> Result<()> {
    let ok = v > 0.0 && (v < 1.0 || (closed_top && v == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{name} = {v} out of range")))
    }
}

/// Plain sifting with default search options.
pub fn sift(f: &GridFunction, k: u32, l: u32, eps: f64, alpha: f64) -> Result<SiftReport> {
    sift_with(f, k, l, eps, alpha, &SiftOptions::default())
}

/// Plain sifting: `achieved >= (1 - eps) alpha` and
/// `E[g1] E[g2] >= eps alpha^{C_SIFT (k + l)}`.
pub fn sift_with(f: &GridFunction, k: u32, l: u32, eps: f64, alpha: f64, opts: &SiftOptions) -> Result<SiftReport> {
    if !f.is_nonneg() {
        return Err(Error::Precondition("sifting needs a nonnegative function".into()));
    }
    if k == 0 || l == 0 {
        return Err(Error::Precondition("sifting needs k, l >= 1".into()));
    }
    check_unit_interval("eps", eps, false)?;
    check_unit_interval("alpha", alpha, true)?;
    let norm = Float::powf(grid_power(f, k, l)?, 1.0 / (k * l) as f64);
    let thr = alpha * (1.0 - REL_TOL);
    if norm < thr {
        return Err(Error::Precondition(format!(
            "‖f‖_G({k},{l}) = {norm} is below alpha = {alpha}"
        )));
    }
    let mass_floor = eps * Float::powf(alpha, C_SIFT * (k + l) as f64);
    let mut level = (k, l);
    'outer: for s in 2..=k + l {
        for i in s.saturating_sub(l).max(1)..=k.min(s - 1) {
            let j = s - i;
            if Float::powf(grid_power(f, i, j)?, 1.0 / (i * j) as f64) >= thr {
                level = (i, j);
                break 'outer;
            }
        }
    }
    let (i, j) = (level.0 as usize, level.1 as usize);
    if (i, j) == (1, 1) {
        let witness = SiftWitness::new(f, vec![1.0; f.rows()], vec![1.0; f.cols()], None)?;
        let b = f.mean() - (1.0 - eps) * alpha;
        return Ok(SiftReport {
            witness,
            norm,
            level,
            edge: None,
            bracket: b,
            bracket_bound: eps * alpha,
            mass_floor,
            constant: C_SIFT,
            search: Search::Exhaustive,
        });
    }
    let (base, added) = telescope_chain(i, j);
    let mut chosen: Option<(usize, f64)> = None;
    let mut best_ratio: Option<(usize, f64, f64)> = None;
    for t in 0..added.len() {
        let mut g: Vec<(usize, usize)> = base.clone();
        g.extend_from_slice(&added[..t]);
        let den = hom_density(f, i, j, &g)?;
        g.push(added[t]);
        let num = hom_density(f, i, j, &g)?;
        if den > 0.0 && num >= alpha * den * (1.0 - REL_TOL) {
            chosen = Some((t, den));
            break;
        }
        if den > 0.0 && best_ratio.map_or(true, |(_, r, _)| num / den > r) {
            best_ratio = Some((t, num / den, den));
        }
    }
    let (t, den) = match (chosen, best_ratio) {
        (Some(c), _) => c,
        (None, Some((t, _, den))) => (t, den),
        (None, None) => return Err(Error::NotFound("telescoping edge".into())),
    };
    let (ai, bj) = added[t];
    let mut gt: Vec<(usize, usize)> = base;
    gt.extend_from_slice(&added[..t]);
    let ys: Vec<usize> = gt.iter().filter(|e| e.0 == ai).map(|e| e.1).collect();
    let xs: Vec<usize> = gt.iter().filter(|e| e.1 == bj).map(|e| e.0).collect();
    let bar: Vec<(usize, usize)> = gt.iter().copied().filter(|&(a, b)| a != ai && b != bj).collect();
    let w = hom_density(f, i, j, &bar)?;
    let c = (1.0 - eps) * alpha;
    let bound = eps * alpha * den / w;
    let (best, search) = search_assignment(f, c, xs.len(), ys.len(), opts);
    if !(best.bracket > 0.0) || best.bracket < bound * (1.0 - 1e-9) {
        return Err(Error::NotFound(format!(
            "vertex assignment with bracket >= {bound} (best found {})",
            best.bracket
        )));
    }
    let (g1, g2) = products(f, &best.rows, &best.cols);
    let witness = SiftWitness::new(f, g1, g2, None)?;
    Ok(SiftReport {
        witness,
        norm,
        level,
        edge: Some(TelescopeEdge { t, i: ai, j: bj }),
        bracket: best.bracket,
        bracket_bound: bound,
        mass_floor,
        constant: C_SIFT,
        search,
    })
}

/// Rounds `alpha in [0,1]^n` to a 0/1 vector along one path of the pairwise
/// convex decomposition, keeping the linear objective `coeffs . v` from
/// decreasing.
///
/// The result has `floor(s)` or `ceil(s)` ones where `s = sum alpha`, and at
/// least one when `s > 0`. In that last case, if `s < 1`, the objective is
/// only guaranteed to stay nonnegative when it starts nonnegative. Entries
/// within `tol` of 0 or 1 count as integral.
pub fn round_to_boolean<T>(alpha: &[T], coeffs: &[T], tol: T) -> Result<Vec<bool>>
where
    T: Copy + PartialOrd + Num,
{
    if alpha.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), got: coeffs.len() });
    }
    let (zero, one) = (T::zero(), T::one());
    if alpha.iter().any(|&a| a < zero - tol || a > one + tol) {
        return Err(Error::Precondition("rounding needs entries in [0, 1]".into()));
    }
    let mut v: Vec<T> = alpha.to_vec();
    let snap = |x: T| {
        if x <= zero + tol {
            zero
        } else if x >= one - tol {
            one
        } else {
            x
        }
    };
    for x in v.iter_mut() {
        *x = snap(*x);
    }
    let frac = |v: &[T]| v.iter().position(|&x| x != zero && x != one);
    while let Some(i) = frac(&v) {
        let next = v[i + 1..].iter().position(|&x| x != zero && x != one).map(|p| p + i + 1);
        match next {
            Some(j) => {
                let s = v[i] + v[j];
                if s <= one {
                    // (s, 0) or (0, s)
                    if coeffs[i] >= coeffs[j] {
                        v[i] = snap(s);
                        v[j] = zero;
                    } else {
                        v[i] = zero;
                        v[j] = snap(s);
                    }
                } else {
                    // (s - 1, 1) or (1, s - 1)
                    if coeffs[j] >= coeffs[i] {
                        v[i] = snap(s - one);
                        v[j] = one;
                    } else {
                        v[i] = one;
                        v[j] = snap(s - one);
                    }
                }
            }
            None => {
                let rest_empty = v.iter().enumerate().all(|(p, &x)| p == i || x == zero);
                v[i] = if rest_empty || coeffs[i] >= zero { one } else { zero };
            }
        }
    }
    Ok(v.into_iter().map(|x| x == one).collect())
}

/// Boolean `(g1, g2)` with `E[g1 g2 A] >= tau E[g1] E[g2]` and
/// `E[g_i] >= E[f_i] / 2`, from fractional `f1, f2` meeting the same inequality.
pub fn extract_correlation(a: &GridFunction, f1: &[f64], f2: &[f64], tau: f64) -> Result<(Vec<bool>, Vec<bool>)> {
    let (r, c) = (a.rows(), a.cols());
    if f1.len() != r {
        return Err(Error::DimensionMismatch { expected: r, got: f1.len() });
    }
    if f2.len() != c {
        return Err(Error::DimensionMismatch { expected: c, got: f2.len() });
    }
    if f1.iter().chain(f2).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Precondition("f1, f2 must take values in [0, 1]".into()));
    }
    if f1.iter().all(|&v| v == 0.0) || f2.iter().all(|&v| v == 0.0) {
        return Err(Error::EmptySubset);
    }
    let c1: Vec<f64> = (0..r)
        .map(|x| a.row(x).iter().zip(f2).map(|(v, w)| (v - tau) * w).sum())
        .collect();
    let psi: f64 = c1.iter().zip(f1).map(|(p, q)| p * q).sum();
    let scale: f64 = f1.iter().sum::<f64>() * f2.iter().sum::<f64>();
    if psi < -1e-12 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "E[f1 f2 A] - tau E[f1] E[f2] = {} is negative",
            psi / (r * c) as f64
        )));
    }
    let g1 = round_to_boolean(f1, &c1, 1e-12)?;
    let c2: Vec<f64> = (0..c)
        .map(|y| (0..r).filter(|&x| g1[x]).map(|x| a.get(x, y) - tau).sum())
        .collect();
    let g2 = round_to_boolean(f2, &c2, 1e-12)?;
    Ok((g1, g2))
}

/// Regime label for relative sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `gamma` meets the pinned bound and every step of the induction succeeded.
    InRegime,
    /// `gamma` is too large, or a step needed the plain-sifting fallback.
    OutOfRegime,
    /// `T` is the full grid with `tau = 1`; the plain sifting result is returned.
    Delegated,
}

/// One level of the relative sifting induction.
#[derive(Debug, Clone, PartialEq)]
pub enum RelativeStep {
    /// `E[f] >= (1 - eps) alpha tau` on the current rows.
    Dense { k: u32, rows: usize },
    /// The `G(l, 1)` norm is large; columns thresholded at `(1 - eps) alpha tau`.
    Threshold { k: u32, rows: usize, cols: usize },
    /// Rows restricted to the support of one of the two rounded sifting vectors.
    Descend { k: u32, rows_before: usize, rows_after: usize, choice: u8, codegree_mean: f64 },
    /// The induction stalled; plain sifting on `G(2, k)` finished the job.
    Fallback { k: u32, rows: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeReport {
    pub witness: SiftWitness,
    pub regime: Regime,
    /// `‖f‖_{G(2,k)}`.
    pub norm: f64,
    /// Largest admissible `gamma` under the pinned constants.
    pub gamma_bound: f64,
    /// Floors on `E[g1]` and `E[g2]`.
    pub mass_floors: (f64, f64),
    pub ell: u32,
    pub trace: Vec<RelativeStep>,
}

/// `log2(2 / x)`, which is at least 1 on `(0, 1]`.
fn log_term(x: f64) -> f64 {
    Float::log2(2.0 / x)
}

/// Largest `gamma` accepted as in-regime.
pub fn relative_gamma_bound(alpha: f64, tau: f64, eps: f64, k: u32) -> f64 {
    let la = log_term(alpha);
    let lt = log_term(tau);
    let k = k as f64;
    let expo = C_REL_GAMMA * (k * la * la / (eps * eps) + k * lt / eps);
    Float::powf(alpha * tau, expo)
}

/// Floors `(E[g1], E[g2])` promised by relative sifting.
pub fn relative_mass_floors(alpha: f64, eps: f64, k: u32) -> (f64, f64) {
    let la = log_term(alpha);
    let b = eps * alpha / 2.0;
    let k = k as f64;
    (
        Float::powf(b, C_REL_ROWS * k * k * la / eps),
        Float::powf(b, C_REL_COLS * la / eps),
    )
}

fn rows_of(f: &GridFunction, rows: &[usize]) -> Result<GridFunction> {
    let mut data = Vec::with_capacity(rows.len() * f.cols());
    for &x in rows {
        data.extend_from_slice(f.row(x));
    }
    GridFunction::new(rows.len(), f.cols(), data)
}

/// Relative sifting for `f <= 1_T`, `‖f‖_{G(2,k)} >= alpha tau`.
pub fn relative_sift(f: &GridFunction, maj: &SpreadMajorant, k: u32, eps: f64, alpha: f64) -> Result<RelativeReport> {
    relative_sift_with(f, maj, k, eps, alpha, &SiftOptions::default())
}

pub fn relative_sift_with(
    f: &GridFunction,
    maj: &SpreadMajorant,
    k: u32,
    eps: f64,
    alpha: f64,
    opts: &SiftOptions,
) -> Result<RelativeReport> {
    if maj.rows != f.rows() || maj.cols != f.cols() {
        return Err(Error::DimensionMismatch { expected: maj.rows * maj.cols, got: f.rows() * f.cols() });
    }
    if !f.is_nonneg() {
        return Err(Error::Precondition("relative sifting needs a nonnegative function".into()));
    }
    if k == 0 {
        return Err(Error::Precondition("relative sifting needs k >= 1".into()));
    }
    check_unit_interval("eps", eps, false)?;
    check_unit_interval("alpha", alpha, true)?;
    if let Some(p) = f.data().iter().enumerate().position(|(i, &v)| v != 0.0 && !maj.t.contains(i)) {
        return Err(Error::Precondition(format!(
            "f is nonzero at ({}, {}) outside T",
            p / f.cols(),
            p % f.cols()
        )));
    }
    let tau = maj.tau;
    let norm = Float::powf(grid_power_2k(f, k)?, 1.0 / (2 * k) as f64);
    let thr = alpha * tau;
    if norm < thr * (1.0 - REL_TOL) {
        return Err(Error::Precondition(format!(
            "‖f‖_G(2,{k}) = {norm} is below alpha tau = {thr}"
        )));
    }
    let gamma_bound = relative_gamma_bound(alpha, tau, eps, k);
    if maj.is_full() && tau == 1.0 {
        let rep = sift_with(f, 2, k, eps, alpha, opts)?;
        let floor = rep.mass_floor;
        return Ok(RelativeReport {
            witness: rep.witness,
            regime: Regime::Delegated,
            norm,
            gamma_bound,
            mass_floors: (floor, floor),
            ell: 2,
            trace: Vec::new(),
        });
    }
    let ell = REL_ELL;
    let mut in_regime = maj.gamma <= gamma_bound;
    let mut trace = Vec::new();
    let mut rows: Vec<usize> = (0..f.rows()).collect();
    let mut kk = k;
    let lift = |rows: &[usize]| {
        let mut g = vec![0.0; f.rows()];
        for &x in rows {
            g[x] = 1.0;
        }
        g
    };
    let (g1, g2) = loop {
        let cur = rows_of(f, &rows)?;
        if cur.mean() >= (1.0 - eps) * thr {
            trace.push(RelativeStep::Dense { k: kk, rows: rows.len() });
            break (lift(&rows), vec![1.0; f.cols()]);
        }
        let d: Vec<f64> = (0..f.cols())
            .map(|y| rows.iter().map(|&x| f.get(x, y)).sum::<f64>() / rows.len() as f64)
            .collect();
        let moment = d.iter().map(|&v| Float::powi(v, ell as i32)).sum::<f64>() / d.len() as f64;
        if moment >= Float::powi(thr, ell as i32) * (1.0 - REL_TOL) {
            let s1: Vec<f64> = d.iter().map(|&v| if v >= (1.0 - eps) * thr { 1.0 } else { 0.0 }).collect();
            if s1.iter().any(|&v| v > 0.0) {
                trace.push(RelativeStep::Threshold {
                    k: kk,
                    rows: rows.len(),
                    cols: s1.iter().filter(|&&v| v > 0.0).count(),
                });
                break (lift(&rows), s1);
            }
        }
        match descend(&cur, kk, eps, alpha, tau, ell, opts)? {
            Some((kept, choice, mean)) if kk >= 2 => {
                let before = rows.len();
                rows = kept.iter().map(|&i| rows[i]).collect();
                trace.push(RelativeStep::Descend {
                    k: kk,
                    rows_before: before,
                    rows_after: rows.len(),
                    choice,
                    codegree_mean: mean,
                });
                kk -= 1;
            }
            _ => {
                in_regime = false;
                trace.push(RelativeStep::Fallback { k: kk, rows: rows.len() });
                let rep = sift_with(&cur, 2, kk, eps, thr, opts)?;
                let mut g1 = vec![0.0; f.rows()];
                for (i, &x) in rows.iter().enumerate() {
                    g1[x] = rep.witness.g1[i];
                }
                break (g1, rep.witness.g2);
            }
        }
    };
    let witness = SiftWitness::new(f, g1, g2, None)?;
    Ok(RelativeReport {
        witness,
        regime: if in_regime { Regime::InRegime } else { Regime::OutOfRegime },
        norm,
        gamma_bound,
        mass_floors: relative_mass_floors(alpha, eps, k),
        ell,
        trace,
    })
}

/// One descent step on the current rows: sift the capped codegree kernel,
/// round, and keep the support whose codegree mean stays above
/// `(alpha tau)^{2k - 2}`. `None` when neither support qualifies.
fn descend(
    cur: &GridFunction,
    k: u32,
    eps: f64,
    alpha: f64,
    tau: f64,
    ell: u32,
    opts: &SiftOptions,
) -> Result<Option<(Vec<usize>, u8, f64)>> {
    if k < 2 {
        return Ok(None);
    }
    let r = cur.rows();
    let kernel = codegree_kernel(cur, k - 1);
    let m = Float::powf(alpha, -(k as f64)) * Float::powi(tau, 2 * k as i32 - 2);
    let capped: Vec<f64> = kernel.iter().map(|&v| v.min(m) / m).collect();
    let ft = GridFunction::new(r, r, capped)?;
    let a2 = Float::powf(grid_power(&ft, ell, ell)?, 1.0 / (ell * ell) as f64);
    if !(a2 > 0.0) {
        return Ok(None);
    }
    let e2 = eps / 16.0;
    let rep = match sift_with(&ft, ell, ell, e2, a2.min(1.0), opts) {
        Ok(rep) => rep,
        Err(Error::NotFound(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (b1, b2) = extract_correlation(&ft, &rep.witness.g1, &rep.witness.g2, (1.0 - e2) * a2.min(1.0))?;
    let target = Float::powi(alpha * tau, 2 * k as i32 - 2);
    for (choice, b) in [(1u8, &b1), (2u8, &b2)] {
        let kept: Vec<usize> = (0..r).filter(|&x| b[x]).collect();
        if kept.is_empty() {
            continue;
        }
        let mut s = 0.0;
        for &x1 in &kept {
            for &x2 in &kept {
                s += kernel[x1 * r + x2];
            }
        }
        let mean = s / (kept.len() * kept.len()) as f64;
        if mean >= target * (1.0 - REL_TOL) {
            return Ok(Some((kept, choice, mean)));
        }
    }
    Ok(None)
}

/// `F(x1, x2) = (E_y f(x1, y) f(x2, y))^m`, row-major.
pub fn codegree_kernel(f: &GridFunction, m: u32) -> Vec<f64> {
    codegree(f).into_iter().map(|b| Float::powi(b, m as i32)).collect()
}


/// Moments `E[X^r]`, `r = 0..=p`, of a finite weighted distribution.
pub fn moments(values: &[f64], weights: &[f64], p: u32) -> Result<Vec<f64>> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Precondition("weights must be nonnegative with positive sum".into()));
    }
    let mut out = vec![0.0; p as usize + 1];
    for (&v, &w) in values.iter().zip(weights) {
        let mut pw = 1.0;
        for m in out.iter_mut() {
            *m += w * pw;
            pw *= v;
        }
    }
    for m in out.iter_mut() {
        *m /= total;
    }
    Ok(out)
}

/// Exponent `6 ceil(k / eps)` of the unbalancing inequality.
pub fn unbalancing_exponent(eps: f64, k: u32) -> u32 {
    6 * Float::ceil(k as f64 / eps) as u32
}

/// `E[(X + 1)^p] >= (1 + eps/2)^p` from `E[X^k] >= eps^k` and `E[X^r] >= 0`.
///
/// `moments[r] = E[X^r]` for `r = 0..=p`, `p = 6 ceil(k / eps)`.
pub fn check_unbalancing(moments: &[f64], eps: f64, k: u32) -> Result<InequalityReport> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1/10)")));
    }
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let p = unbalancing_exponent(eps, k);
    if moments.len() <= p as usize {
        return Err(Error::DimensionMismatch { expected: p as usize + 1, got: moments.len() });
    }
    if let Some(r) = moments[..=p as usize].iter().position(|&m| m < -1e-12) {
        return Err(Error::Precondition(format!("E[X^{r}] = {} is negative", moments[r])));
    }
    let need = Float::powi(eps, k as i32);
    if moments[k as usize] < need * (1.0 - REL_TOL) {
        return Err(Error::Precondition(format!(
            "E[X^{k}] = {} is below eps^{k} = {need}",
            moments[k as usize]
        )));
    }
    // Both sides are divided by (1 + eps/2)^p; terms are formed in log space
    // because C(p, j) overflows for p in the hundreds.
    let ln_base = p as f64 * Float::ln(1.0 + eps / 2.0);
    let (mut lhs, mut ln_binom) = (0.0, 0.0);
    for j in 0..=p {
        if j > 0 {
            ln_binom += Float::ln((p - j + 1) as f64 / j as f64);
        }
        let m = moments[j as usize];
        if m != 0.0 {
            lhs += m.signum() * Float::exp(ln_binom + Float::ln(m.abs()) - ln_base);
        }
    }
    Ok(InequalityReport::new(1.0, lhs, 1e-9))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// `E[A]`.
    pub alpha: f64,
    /// `‖A - alpha‖_{G(2,k)}`.
    pub deviation: f64,
    /// `p = 36 ceil(k / eps^4)`.
    pub p: u32,
    /// `‖A‖_{G(2,p)}`.
    pub norm_p: f64,
    /// Whether `deviation >= eps alpha`.
    pub hypothesis: bool,
    /// `(1 + eps^2/36) alpha <= ‖A‖_{G(2,p)}`, present when the hypothesis holds.
    pub conclusion: Option<InequalityReport>,
}

/// `‖A‖_{G(2,m)}` for large `m`, scaled to avoid overflow. Needs `A >= 0`.
fn grid_norm_2_large(a: &GridFunction, m: u32) -> f64 {
    let b = codegree(a);
    let top = b.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let s = b.iter().map(|&v| Float::powf(v / top, m as f64)).sum::<f64>() / b.len() as f64;
    Float::sqrt(top) * Float::powf(s, 1.0 / (2 * m) as f64)
}

/// Spectral positivity: if `‖A - alpha‖_{G(2,k)} >= eps alpha` and every row
/// mean is at least `alpha (1 - eps^2/36)`, then `‖A‖_{G(2,p)} >= (1 + eps^2/36) alpha`.
pub fn check_spectral_positivity(a: &GridFunction, eps: f64, k: u32) -> Result<SpectralReport> {
    if !a.is_nonneg() {
        return Err(Error::Precondition("A must be nonnegative".into()));
    }
    if k == 0 || k % 2 == 1 {
        return Err(Error::Precondition(format!("k = {k} must be even and positive")));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1/10)")));
    }
    let alpha = a.mean();
    let slack = eps * eps * alpha / 36.0;
    let (worst, low) = (0..a.rows())
        .map(|x| (x, a.row(x).iter().sum::<f64>() / a.cols() as f64 - alpha))
        .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
    if low < -slack - 1e-15 {
        return Err(Error::Precondition(format!(
            "row {worst} has E_y[A - alpha] = {low} below -eps^2 alpha / 36 = {}",
            -slack
        )));
    }
    let centered = GridFunction::new(a.rows(), a.cols(), a.data().iter().map(|v| v - alpha).collect())?;
    let deviation = Float::powf(Float::abs(grid_power_2k(&centered, k)?), 1.0 / (2 * k) as f64);
    let e4 = Float::powi(eps, 4);
    let p = 36 * Float::ceil(k as f64 / e4) as u32;
    let norm_p = grid_norm_2_large(a, p);
    let hypothesis = alpha > 0.0 && deviation >= eps * alpha;
    let conclusion = hypothesis.then(|| InequalityReport::new((1.0 + eps * eps / 36.0) * alpha, norm_p, 1e-12));
    Ok(SpectralReport { alpha, deviation, p, norm_p, hypothesis, conclusion })
}

/// `Pr[V <= (1 - gamma) E V] <= rho / (gamma + rho)` when `V <= (1 + rho) E V`.
///
/// `weights` defaults to uniform.
pub fn reverse_markov(rho: f64, gamma: f64, values: &[f64], weights: Option<&[f64]>) -> Result<InequalityReport> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Precondition(format!("rho = {rho} must be positive")));
    }
    check_unit_interval("gamma", gamma, true)?;
    if values.is_empty() {
        return Err(Error::EmptySubset);
    }
    let uniform;
    let w = match weights {
        Some(w) => w,
        None => {
            uniform = vec![1.0; values.len()];
            &uniform
        }
    };
    if w.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: w.len() });
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|&x| x < 0.0) {
        return Err(Error::Precondition("weights must be nonnegative with positive sum".into()));
    }
    let mean = values.iter().zip(w).map(|(v, p)| v * p).sum::<f64>() / total;
    let top = (1.0 + rho) * mean;
    let tol = 1e-12 * mean.abs().max(1e-300);
    if let Some(i) = values.iter().zip(w).position(|(&v, &p)| p > 0.0 && v > top + tol) {
        return Err(Error::Precondition(format!(
            "sample {i} = {} exceeds (1 + rho) E[V] = {top}",
            values[i]
        )));
    }
    let cut = (1.0 - gamma) * mean + tol;
    let pr = values.iter().zip(w).filter(|(&v, _)| v <= cut).map(|(_, p)| p).sum::<f64>() / total;
    Ok(InequalityReport::new(pr, rho / (gamma + rho), 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multisets_in_order() {
        let mut v = vec![0usize; 2];
        let mut seen = vec![v.clone()];
        while next_multiset(&mut v, 3) {
            seen.push(v.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 2]);
        assert_eq!(multiset_count(3, 2), 6.0);
    }

    #[test]
    fn chain_has_right_length() {
        let (base, added) = telescope_chain(2, 3);
        assert_eq!(base.len(), 2);
        assert_eq!(added.len(), 4);
        assert_eq!(*added.last().unwrap(), (1, 2));
    }

    #[test]
    fn unbalancing_survives_large_exponents() {
        // p = 6 * 200 = 1200; C(1200, 600) alone overflows f64.
        let (eps, k) = (0.02, 4);
        let xs = [0.05, -0.03, 0.04, 0.0];
        let m = moments(&xs, &[1.0; 4], unbalancing_exponent(eps, k)).unwrap();
        let rep = check_unbalancing(&m, eps, k).unwrap();
        let direct = xs.iter().map(|x| Float::powi((1.0 + x) / (1.0 + eps / 2.0), 1200)).sum::<f64>() / 4.0;
        assert!(rep.rhs.is_finite());
        assert!((rep.rhs / direct - 1.0).abs() < 1e-9);
    }
}
