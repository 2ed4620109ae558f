// SPDX-License-Identifier: MIT OR Apache-2.0
//! Density increment for corners in `F_2^n`, at toy scale.
//!
//! A container is `S(X, Y, D) = {(x, y) : x in X, y in Y, x + y in D}` with
//! `X ⊆ W + x0`, `Y ⊆ W + y0`, `D ⊆ W + x0 + y0` for a linear subspace `W`.
//! Subsets of `F_2^n x F_2^n` are indexed by `a * 2^n + b`.
//!
//! Every step recounts its conclusion. Asymptotic conclusions that the toy
//! scale cannot reach are reported as failed [`Check`]s next to the exact
//! finite forms that always hold.

use alloc::{collections::BTreeMap, format, vec, vec::Vec};

use num_rational::Ratio;
use num_traits::Float;

use crate::corners::phi;
use crate::error::{Error, Result};
use crate::gridnorm::grid_norm_2k;
use crate::group::{AffineSubspace, Group};
use crate::setfun::{GridFunction, SubsetInd};
use crate::sift::{extract_correlation, relative_sift, Regime, SpreadMajorant};
use crate::spread::{
    is_alg_spread_f2, is_asym_spread, spread_extract_f2, AlgMode, BilinearMode, Counterexample,
};

/// Largest supported `n`.
pub const MAX_DIM: usize = 8;
/// `C` in the iteration bound `C eps^-1 ln(1/alpha)` of [`obtain_spreadness`].
pub const C_ITER: f64 = 2.0;
/// [`obtain_spreadness`] errors after this many times its iteration bound.
pub const GUARD_FACTOR: usize = 10;
/// Bilinear spreadness is searched exactly when the smaller side is at most this.
pub const AUTO_EXACT_SIDE: usize = 14;
/// Work cap on the blocks processed by [`partition_2dim`].
pub const PARTITION_BLOCK_LIMIT: usize = 200_000;

const TOL: f64 = 1e-9;

fn at_least(value: f64, bound: f64) -> bool {
    value >= bound - TOL * bound.abs().max(1.0)
}

fn check_eps(name: &str, eps: f64, hi: f64) -> Result<()> {
    if !(eps > 0.0 && eps < hi) {
        return Err(Error::Precondition(format!("{name} = {eps} must lie in (0, {hi})")));
    }
    Ok(())
}

fn subset_of_coset(s: &SubsetInd, coset: &AffineSubspace) -> bool {
    s.iter().all(|p| coset.contains(p as u64))
}

/// A bounded numerical conclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl Check {
    /// `value >= bound` up to rounding.
    pub fn at_least(value: f64, bound: f64) -> Self {
        Self { value, bound, holds: at_least(value, bound) }
    }

    /// `value <= bound` up to rounding.
    pub fn at_most(value: f64, bound: f64) -> Self {
        Self { value, bound, holds: at_least(bound, value) }
    }
}

/// `S(X, Y, D)` over `W`. `X`, `Y`, `D` are nonempty and lie in their cosets.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    w: AffineSubspace,
    x_shift: u64,
    y_shift: u64,
    x: SubsetInd,
    y: SubsetInd,
    d: SubsetInd,
}

impl Container {
    pub fn new(w: AffineSubspace, x_shift: u64, y_shift: u64, x: SubsetInd, y: SubsetInd, d: SubsetInd) -> Result<Self> {
        let n = w.ambient_dim();
        if n > MAX_DIM {
            return Err(Error::Refused(format!("n = {n} exceeds {MAX_DIM}")));
        }
        if w.shift() != 0 {
            return Err(Error::Precondition("W must be a linear subspace".into()));
        }
        for s in [&x, &y, &d] {
            if s.domain() != 1 << n {
                return Err(Error::DimensionMismatch { expected: 1 << n, got: s.domain() });
            }
            if s.is_empty() {
                return Err(Error::EmptySubset);
            }
        }
        let (xc, yc) = (w.translate_to(x_shift), w.translate_to(y_shift));
        let dc = w.translate_to(x_shift ^ y_shift);
        for (name, s, c) in [("X", &x, &xc), ("Y", &y, &yc), ("D", &d, &dc)] {
            if !subset_of_coset(s, c) {
                return Err(Error::Precondition(format!("{name} leaves its coset of W")));
            }
        }
        Ok(Self { w, x_shift: xc.shift(), y_shift: yc.shift(), x, y, d })
    }

    /// `X = Y = D = W = F_2^n`.
    pub fn full(n: usize) -> Result<Self> {
        let all = SubsetInd::full(1 << n);
        if n > MAX_DIM {
            return Err(Error::Refused(format!("n = {n} exceeds {MAX_DIM}")));
        }
        Self::new(AffineSubspace::full(n), 0, 0, all.clone(), all.clone(), all)
    }

    pub fn n(&self) -> usize {
        self.w.ambient_dim()
    }

    pub fn w(&self) -> &AffineSubspace {
        &self.w
    }

    pub fn x_shift(&self) -> u64 {
        self.x_shift
    }

    pub fn y_shift(&self) -> u64 {
        self.y_shift
    }

    pub fn x(&self) -> &SubsetInd {
        &self.x
    }

    pub fn y(&self) -> &SubsetInd {
        &self.y
    }

    pub fn d(&self) -> &SubsetInd {
        &self.d
    }

    pub fn x_coset(&self) -> AffineSubspace {
        self.w.translate_to(self.x_shift)
    }

    pub fn y_coset(&self) -> AffineSubspace {
        self.w.translate_to(self.y_shift)
    }

    pub fn d_coset(&self) -> AffineSubspace {
        self.w.translate_to(self.x_shift ^ self.y_shift)
    }

    pub fn delta_x(&self) -> f64 {
        self.x.card() as f64 / self.w.size() as f64
    }

    pub fn delta_y(&self) -> f64 {
        self.y.card() as f64 / self.w.size() as f64
    }

    pub fn delta_d(&self) -> f64 {
        self.d.card() as f64 / self.w.size() as f64
    }

    /// `delta_X delta_Y delta_D`.
    pub fn delta(&self) -> f64 {
        self.delta_x() * self.delta_y() * self.delta_d()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.x.contains(a) && self.y.contains(b) && self.d.contains(a ^ b)
    }

    /// `|S(X, Y, D)|`.
    pub fn size(&self) -> usize {
        let ys = self.y.to_vec();
        self.x.iter().map(|a| ys.iter().filter(|&&b| self.d.contains(a ^ b)).count()).sum()
    }

    /// `S(X, Y, D)` as a subset of the `4^n` pairs.
    pub fn pairs(&self) -> SubsetInd {
        let side = 1usize << self.n();
        let ys = self.y.to_vec();
        let mut s = SubsetInd::empty(side * side);
        for a in self.x.iter() {
            for &b in &ys {
                if self.d.contains(a ^ b) {
                    s.insert(a * side + b);
                }
            }
        }
        s
    }
}

/// Kind of a recorded restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    CombIncrement,
    GridIncrement,
    Pseudorandomize,
    RowCull,
}

/// One restriction of the container.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub kind: StepKind,
    pub alpha_before: f64,
    pub alpha_after: f64,
    pub dim: usize,
    /// `(delta_X, delta_Y, delta_D)` after the step.
    pub densities: (f64, f64, f64),
}

/// A set `A ⊆ S(X, Y, D)` with the restrictions that produced its container.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementState {
    container: Container,
    a: SubsetInd,
    pub history: Vec<Step>,
}

impl IncrementState {
    /// Errors unless `A ⊆ S(X, Y, D)`.
    pub fn new(container: Container, a: SubsetInd) -> Result<Self> {
        let side = 1usize << container.n();
        if a.domain() != side * side {
            return Err(Error::DimensionMismatch { expected: side * side, got: a.domain() });
        }
        if let Some(p) = a.iter().find(|&p| !container.contains(p / side, p % side)) {
            return Err(Error::Precondition(format!("A contains ({}, {}) outside S", p / side, p % side)));
        }
        Ok(Self { container, a, history: Vec::new() })
    }

    /// `A` inside the full container on `F_2^n`.
    pub fn from_set(a: &SubsetInd, n: usize) -> Result<Self> {
        Self::new(Container::full(n)?, a.clone())
    }

    pub fn container(&self) -> &Container {
        &self.container
    }

    pub fn a(&self) -> &SubsetInd {
        &self.a
    }

    /// `alpha = |A| |W| / (|X| |Y| |D|)`.
    pub fn alpha(&self) -> f64 {
        let c = &self.container;
        self.a.card() as f64 * c.w.size() as f64 / (c.x.card() as f64 * c.y.card() as f64 * c.d.card() as f64)
    }

    /// `A ⊆ S` by recount.
    pub fn verify(&self) -> bool {
        let side = 1usize << self.container.n();
        self.a.iter().all(|p| self.container.contains(p / side, p % side))
    }

    /// Restricts to `c`, keeping `A ∩ S(c)`, and records the step.
    pub fn restrict(&self, c: Container, kind: StepKind) -> Result<Self> {
        if c.n() != self.container.n() {
            return Err(Error::DimensionMismatch { expected: self.container.n(), got: c.n() });
        }
        let side = 1usize << c.n();
        let kept = self.a.iter().filter(|&p| c.contains(p / side, p % side));
        let a = SubsetInd::from_indices(side * side, kept)?;
        let mut history = self.history.clone();
        let mut next = Self { container: c, a, history: Vec::new() };
        let cc = &next.container;
        history.push(Step {
            kind,
            alpha_before: self.alpha(),
            alpha_after: next.alpha(),
            dim: cc.w.dim(),
            densities: (cc.delta_x(), cc.delta_y(), cc.delta_d()),
        });
        next.history = history;
        Ok(next)
    }

    fn grid(&self, rows: &[usize], cols: &[usize], pair: impl Fn(usize, usize) -> (usize, usize)) -> GridFunction {
        let side = 1usize << self.container.n();
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for &c in cols {
                let (a, b) = pair(r, c);
                data.push(if self.a.contains(a * side + b) { 1.0 } else { 0.0 });
            }
        }
        GridFunction::new(rows.len(), cols.len(), data).expect("shape matches")
    }

    /// `F1(y, z) = 1_A(y + z, y)` on `Y x D`, in increasing index order.
    pub fn f1(&self) -> GridFunction {
        let (ys, ds) = (self.container.y.to_vec(), self.container.d.to_vec());
        self.grid(&ys, &ds, |y, z| (y ^ z, y))
    }

    /// `F2(x, z) = 1_A(x, x + z)` on `X x D`, in increasing index order.
    pub fn f2(&self) -> GridFunction {
        let (xs, ds) = (self.container.x.to_vec(), self.container.d.to_vec());
        self.grid(&xs, &ds, |x, z| (x, x ^ z))
    }

    /// `(y, |{x : (x, y) in A}|)` for every `y in Y`.
    pub fn row_counts(&self) -> Vec<(usize, usize)> {
        let side = 1usize << self.container.n();
        let mut counts: BTreeMap<usize, usize> = self.container.y.iter().map(|y| (y, 0)).collect();
        for p in self.a.iter() {
            *counts.get_mut(&(p % side)).expect("A ⊆ S") += 1;
        }
        counts.into_iter().collect()
    }
}

/// Smallest `eps'` for which `set` is `(r, eps')`-algebraically spread in `coset`.
pub fn spread_parameter(set: &SubsetInd, coset: &AffineSubspace, r: usize) -> Result<f64> {
    if coset.dim() == 0 {
        return Ok(0.0);
    }
    let cert = is_alg_spread_f2(set, coset, r, 0.0, AlgMode::Exact)?;
    let delta = set.card() as f64 / coset.size() as f64;
    Ok((-cert.margin).max(0.0) / delta)
}

/// Which of `X`, `Y` the size estimate assumes spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sides {
    One,
    Two,
}

/// Outcome of [`container_size_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SizeReport {
    pub size: usize,
    /// `delta |W|^2`.
    pub expected: f64,
    /// `(1 + eps) delta |W|^2`.
    pub upper: f64,
    /// `(1 - eps) delta |W|^2`, two-sided only.
    pub lower: Option<f64>,
    /// Spread parameters of `X` and `Y` at codimension `r`.
    pub eps_x: f64,
    pub eps_y: f64,
    /// `(r, eps/8)` spreadness of one side, or `(r, eps/16)` of both.
    pub hypothesis: bool,
    /// Upper bound on `| |S| - delta |W|^2 |` from codimension-1 spreadness.
    pub fourier_dev: f64,
    /// Hypothesis holds and the Fourier bound alone implies the conclusion.
    pub toy_proven: bool,
    /// `None` when the hypothesis fails.
    pub holds: Option<bool>,
}

/// Compares `|S(X, Y, D)|` with `delta |W|^2`.
///
/// The Fourier bound uses `|hat 1_X(chi)| <= eps_1 delta_X |W|` for `chi` nontrivial on
/// `W`, where `eps_1` is the codimension-1 spread parameter, then Cauchy-Schwarz and
/// Parseval on the other two sets.
pub fn container_size_check(c: &Container, r: usize, eps: f64, sides: Sides) -> Result<SizeReport> {
    check_eps("eps", eps, 1.0)?;
    let (xc, yc) = (c.x_coset(), c.y_coset());
    let r = r.min(c.w.dim());
    let eps_x = spread_parameter(&c.x, &xc, r)?;
    let eps_y = spread_parameter(&c.y, &yc, r)?;
    let hypothesis = match sides {
        Sides::One => eps_x.min(eps_y) <= eps / 8.0,
        Sides::Two => eps_x.max(eps_y) <= eps / 16.0,
    };
    let w2 = Float::powi(c.w.size() as f64, 2);
    let (dx, dy, dd) = (c.delta_x(), c.delta_y(), c.delta_d());
    let (e1x, e1y) = (spread_parameter(&c.x, &xc, 1)?, spread_parameter(&c.y, &yc, 1)?);
    let fourier_dev = (e1x * dx * Float::sqrt(dy * dd)).min(e1y * dy * Float::sqrt(dx * dd)) * w2;
    let size = c.size();
    let expected = c.delta() * w2;
    let upper = (1.0 + eps) * expected;
    let lower = (sides == Sides::Two).then(|| (1.0 - eps) * expected);
    let s = size as f64;
    let ok = at_least(upper, s) && lower.map_or(true, |l| at_least(s, l));
    Ok(SizeReport {
        size,
        expected,
        upper,
        lower,
        eps_x,
        eps_y,
        hypothesis,
        fourier_dev,
        toy_proven: hypothesis && at_least(eps * expected, fourier_dev),
        holds: hypothesis.then_some(ok),
    })
}

/// Outcome of [`cull_sparse_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct CullReport {
    /// `|L|` for `L = {y : row density < (1 - eps_t) alpha delta_X delta_D}`.
    pub sparse: usize,
    pub removed: Vec<usize>,
    pub alpha_before: f64,
    pub alpha_after: f64,
    /// `(1 + eps_t eps_l / 2) alpha`, the guaranteed density when rows are removed.
    pub bound: f64,
    pub applied: bool,
}

/// Removes the `ceil(eps_l |Y|)` sparsest rows when at least that many are sparse.
pub fn cull_sparse_rows(st: &IncrementState, eps_t: f64, eps_l: f64) -> Result<(IncrementState, CullReport)> {
    check_eps("eps_t", eps_t, 1.0)?;
    check_eps("eps_l", eps_l, 0.5)?;
    let c = &st.container;
    let alpha = st.alpha();
    let thr = (1.0 - eps_t) * alpha * c.x.card() as f64 * c.d.card() as f64 / c.w.size() as f64;
    let mut rows = st.row_counts();
    let sparse = rows.iter().filter(|&&(_, k)| (k as f64) < thr).count();
    let quota = Float::ceil(eps_l * c.y.card() as f64) as usize;
    let bound = (1.0 + eps_t * eps_l / 2.0) * alpha;
    if sparse < quota {
        let rep = CullReport { sparse, removed: Vec::new(), alpha_before: alpha, alpha_after: alpha, bound, applied: false };
        return Ok((st.clone(), rep));
    }
    rows.sort_by_key(|&(y, k)| (k, y));
    let removed: Vec<usize> = rows[..quota].iter().map(|&(y, _)| y).collect();
    let mut y = c.y.clone();
    for &r in &removed {
        y.remove(r);
    }
    if y.is_empty() {
        return Err(Error::EmptySubset);
    }
    let next = Container::new(c.w.clone(), c.x_shift, c.y_shift, c.x.clone(), y, c.d.clone())?;
    let out = st.restrict(next, StepKind::RowCull)?;
    let alpha_after = out.alpha();
    if !at_least(alpha_after, bound) {
        return Err(Error::NotFound(format!("row cull reached {alpha_after}, below {bound}")));
    }
    Ok((out, CullReport { sparse, removed, alpha_before: alpha, alpha_after, bound, applied: true }))
}

/// Which grid function the increment reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `F1(y, z) = 1_A(y + z, y)`; restricts `Y` and `D`.
    F1,
    /// `F2(x, z) = 1_A(x, x + z)`; restricts `X` and `D`.
    F2,
}

/// Statistics of a successful [`grid_increment`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub side: Side,
    pub norm: f64,
    pub threshold: f64,
    /// Majorant density `(1 + eps/64) delta_X`.
    pub tau: f64,
    pub gamma: f64,
    /// Codimension-1 spread parameter of `X`; the majorant is pseudorandom when it is at most `eps/512`.
    pub spread_param: f64,
    pub regime: Regime,
    pub alpha_before: f64,
    pub alpha_after: f64,
    /// `(1 + eps/128) alpha`.
    pub target: f64,
    /// Masses of the kept rows and columns within the old ones.
    pub masses: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridOutcome {
    NoIncrement { norm: f64, threshold: f64 },
    Increment(IncrementState, GridReport),
}

/// Density increment from a large grid norm of `F1` or `F2`.
pub fn grid_increment(st: &IncrementState, k: u32, eps: f64, side: Side) -> Result<GridOutcome> {
    check_eps("eps", eps, 1.0)?;
    let alpha = st.alpha();
    if alpha <= 0.0 {
        return Err(Error::EmptySubset);
    }
    let c = &st.container;
    let (f, rows, threshold) = match side {
        Side::F1 => (st.f1(), c.y.to_vec(), (1.0 + eps / 32.0) * alpha * c.delta_x()),
        Side::F2 => (st.f2(), c.x.to_vec(), 2.0 * alpha * c.delta_y()),
    };
    let norm = grid_norm_2k(&f, k)?;
    if norm < threshold {
        return Ok(GridOutcome::NoIncrement { norm, threshold });
    }
    let cols = c.d.to_vec();
    let mut t = SubsetInd::empty(rows.len() * cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (j, &z) in cols.iter().enumerate() {
            let hit = match side {
                Side::F1 => c.x.contains(r ^ z),
                Side::F2 => c.y.contains(r ^ z),
            };
            if hit {
                t.insert(i * cols.len() + j);
            }
        }
    }
    let base = match side {
        Side::F1 => c.delta_x(),
        Side::F2 => c.delta_y(),
    };
    let tau = ((1.0 + eps / 64.0) * base).min(1.0);
    let gamma = (eps / 64.0) * tau / 256.0;
    let spread_param = match side {
        Side::F1 => spread_parameter(&c.x, &c.x_coset(), 1)?,
        Side::F2 => spread_parameter(&c.y, &c.y_coset(), 1)?,
    };
    let maj = SpreadMajorant::new(rows.len(), cols.len(), t, tau, gamma)?;
    let eps_sift = eps / 256.0;
    let a_sift = (norm / tau).min(1.0);
    let rep = relative_sift(&f, &maj, k, eps_sift, a_sift)?;
    let (g1, g2) = extract_correlation(&f, &rep.witness.g1, &rep.witness.g2, (1.0 - eps_sift) * a_sift * tau)?;
    let side_n = 1usize << c.n();
    let keep = |list: &[usize], g: &[bool]| {
        SubsetInd::from_indices(side_n, list.iter().zip(g).filter(|(_, &b)| b).map(|(&p, _)| p))
    };
    let (new_rows, new_d) = (keep(&rows, &g1)?, keep(&cols, &g2)?);
    let masses = (new_rows.card() as f64 / rows.len() as f64, new_d.card() as f64 / cols.len() as f64);
    let next = match side {
        Side::F1 => Container::new(c.w.clone(), c.x_shift, c.y_shift, c.x.clone(), new_rows, new_d)?,
        Side::F2 => Container::new(c.w.clone(), c.x_shift, c.y_shift, new_rows, c.y.clone(), new_d)?,
    };
    let out = st.restrict(next, StepKind::GridIncrement)?;
    let alpha_after = out.alpha();
    let target = (1.0 + eps / 128.0) * alpha;
    if !at_least(alpha_after, target) {
        return Err(Error::NotFound(format!("grid increment reached {alpha_after}, below {target}")));
    }
    let report = GridReport {
        side,
        norm,
        threshold,
        tau,
        gamma,
        spread_param,
        regime: rep.regime,
        alpha_before: alpha,
        alpha_after,
        target,
        masses,
    };
    Ok(GridOutcome::Increment(out, report))
}

/// One product piece `X_i x Y_i` of a partition, with `X_i ⊆ V + x_shift`, `Y_i ⊆ V + y_shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPiece {
    /// Linear subspace `V_i`.
    pub v: AffineSubspace,
    pub x_shift: u64,
    pub y_shift: u64,
    pub x: SubsetInd,
    pub y: SubsetInd,
    /// `|X_i| |Y_i| / (|X| |Y|)`.
    pub weight: Ratio<u64>,
    /// Recursion level that produced the piece.
    pub depth: usize,
}

/// Outcome of [`partition_2dim`].
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub pieces: Vec<PartitionPiece>,
    /// `|X| |Y| - sum |X_i| |Y_i|`.
    pub leftover: u64,
    pub total: u64,
    pub eta: f64,
    pub depth_limit: usize,
    /// Leftover is at most `eta |X| |Y|` and the work cap was not hit.
    pub complete: bool,
    /// Per-level product density factor `eta^6 / 1000`.
    pub floor_factor: f64,
}

#[derive(Debug, Clone)]
struct Block {
    v: AffineSubspace,
    x_shift: u64,
    y_shift: u64,
    x: SubsetInd,
    y: SubsetInd,
}

fn peel(set: &SubsetInd, coset: &AffineSubspace, r: usize, eps: f64, floor: f64) -> Result<Vec<(AffineSubspace, SubsetInd)>> {
    let mut rest = set.clone();
    let mut out = Vec::new();
    while !rest.is_empty() && rest.card() as f64 > floor {
        let e = spread_extract_f2(&rest, coset, r.min(coset.dim()), eps)?;
        rest = rest.difference(&e.set)?;
        out.push((e.subspace, e.set));
    }
    Ok(out)
}

fn group_by_coset(set: &SubsetInd, l: &AffineSubspace) -> BTreeMap<u64, SubsetInd> {
    let mut out: BTreeMap<u64, SubsetInd> = BTreeMap::new();
    for p in set.iter() {
        out.entry(l.coset_rep(p as u64)).or_insert_with(|| SubsetInd::empty(set.domain())).insert(p);
    }
    out
}

fn certified(set: &SubsetInd, coset: &AffineSubspace, r: usize, eps: f64) -> Result<bool> {
    if coset.dim() == 0 {
        return Ok(true);
    }
    Ok(is_alg_spread_f2(set, coset, r.min(coset.dim()), eps, AlgMode::Exact)?.is_spread())
}

/// Splits a block into good pieces and pieces to refine further.
fn one_round(b: &Block, r: usize, eps: f64, eta: f64) -> Result<(Vec<Block>, Vec<Block>)> {
    let vsize = b.v.size() as f64;
    let (dx, dy) = (b.x.card() as f64 / vsize, b.y.card() as f64 / vsize);
    let (mut good, mut bad) = (Vec::new(), Vec::new());
    let e2 = eta * eta;
    let xs = peel(&b.x, &b.v.translate_to(b.x_shift), r, eps / 5.0, e2 / 10.0 * b.x.card() as f64)?;
    for (wt, xt) in xs {
        let lt = wt.linear_part();
        let dt = xt.card() as f64 / lt.size() as f64;
        for (rep, yc) in group_by_coset(&b.y, &lt) {
            let floor = e2 / 10.0 * dy * lt.size() as f64;
            for (wy, yp) in peel(&yc, &lt.translate_to(rep), r, eps, floor)? {
                let l2 = wy.linear_part();
                for (xrep, xp) in group_by_coset(&xt, &l2) {
                    let dens = xp.card() as f64 / l2.size() as f64;
                    if dens < e2 * e2 / 100.0 * dx {
                        continue;
                    }
                    let blk = Block { v: l2.clone(), x_shift: xrep, y_shift: wy.shift(), x: xp, y: yp.clone() };
                    let spread = certified(&blk.x, &l2.translate_to(xrep), r, eps)?
                        && certified(&blk.y, &wy, r, eps)?;
                    if at_least(dens, (1.0 - 3.0 * eps / 5.0) * dt) && spread {
                        good.push(blk);
                    } else {
                        bad.push(blk);
                    }
                }
            }
        }
    }
    Ok((good, bad))
}

/// Partitions most of `X x Y` into products of `(r, eps)`-spread sets on common subspaces.
pub fn partition_2dim(
    x: &SubsetInd,
    y: &SubsetInd,
    w: &AffineSubspace,
    x_shift: u64,
    y_shift: u64,
    r: usize,
    eps: f64,
    eta: f64,
) -> Result<Partition> {
    check_eps("eps", eps, 1.0)?;
    if !(eta > 0.0) {
        return Err(Error::Precondition(format!("eta = {eta} must be positive")));
    }
    if w.shift() != 0 {
        return Err(Error::Precondition("W must be a linear subspace".into()));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySubset);
    }
    let (xc, yc) = (w.translate_to(x_shift), w.translate_to(y_shift));
    if x.domain() != 1 << w.ambient_dim() || y.domain() != x.domain() {
        return Err(Error::DimensionMismatch { expected: 1 << w.ambient_dim(), got: x.domain() });
    }
    if !subset_of_coset(x, &xc) || !subset_of_coset(y, &yc) {
        return Err(Error::Precondition("X or Y leaves its coset of W".into()));
    }
    let total = (x.card() * y.card()) as u64;
    let depth_limit = if eta >= 1.0 { 0 } else { (Float::ceil(2.0 * Float::log2(1.0 / eta)) as usize).max(1) };
    let floor_factor = Float::powi(eta, 6) / 1000.0;
    let mut queue = vec![Block { v: w.clone(), x_shift: xc.shift(), y_shift: yc.shift(), x: x.clone(), y: y.clone() }];
    let mut pieces = Vec::new();
    let mut processed = 0usize;
    let mut exhausted = false;
    'levels: for depth in 0..depth_limit {
        let mut next = Vec::new();
        for blk in &queue {
            processed += 1;
            if processed > PARTITION_BLOCK_LIMIT {
                exhausted = true;
                break 'levels;
            }
            let (good, bad) = one_round(blk, r, eps, eta)?;
            pieces.extend(good.into_iter().map(|b| (b, depth)));
            next.extend(bad);
        }
        queue = next;
        if queue.is_empty() {
            break;
        }
    }
    let (dx, dy) = (x.card() as f64 / w.size() as f64, y.card() as f64 / w.size() as f64);
    let mut out = Vec::with_capacity(pieces.len());
    for (b, depth) in pieces {
        let vs = b.v.size() as f64;
        let prod = b.x.card() as f64 * b.y.card() as f64 / (vs * vs);
        let floor = dx * dy * Float::powi(floor_factor, depth as i32 + 1);
        if !at_least(prod, floor) {
            return Err(Error::NotFound(format!("piece product density {prod} below {floor}")));
        }
        let weight = Ratio::new((b.x.card() * b.y.card()) as u64, total);
        out.push(PartitionPiece { v: b.v, x_shift: b.x_shift, y_shift: b.y_shift, x: b.x, y: b.y, weight, depth });
    }
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            let (p, q) = (&out[i], &out[j]);
            if !p.x.intersect(&q.x)?.is_empty() && !p.y.intersect(&q.y)?.is_empty() {
                return Err(Error::NotFound(format!("partition pieces {i} and {j} overlap")));
            }
        }
    }
    let covered: u64 = out.iter().map(|p| (p.x.card() * p.y.card()) as u64).sum();
    let leftover = total - covered;
    let complete = !exhausted && leftover as f64 <= eta * total as f64;
    Ok(Partition { pieces: out, leftover, total, eta, depth_limit, complete, floor_factor })
}

/// Outcome of [`pseudorandomize`].
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoReport {
    pub piece: usize,
    pub pieces: usize,
    pub partition_complete: bool,
    pub dim_drop: usize,
    /// `|S'| / (delta' |W'|^2)` for the new container.
    pub rho: f64,
    /// `delta_D' >= (eps alpha / 2) delta_D`.
    pub d_density: Check,
    /// `delta_D' >= (eps alpha / rho) delta_D`; always holds.
    pub d_density_exact: Check,
    /// `delta_X' delta_Y' >= delta_X delta_Y (eta^6/1000)^(depth+1)`.
    pub product_density: Check,
    /// `X'` and `Y'` are both `(r, eps)`-spread.
    pub spread: bool,
    /// `alpha' >= (1 - 5 eps) alpha`.
    pub density: Check,
    /// `alpha' >= (1 - 4 eps) rho alpha`; always holds.
    pub density_exact: Check,
}

/// Passes to a piece of a spread partition where `A` keeps most of its density.
pub fn pseudorandomize(st: &IncrementState, r: usize, eps: f64) -> Result<(IncrementState, PseudoReport)> {
    check_eps("eps", eps, 0.2)?;
    let alpha = st.alpha();
    if alpha <= 0.0 {
        return Err(Error::EmptySubset);
    }
    let c = &st.container;
    let r0 = r.min(c.w.dim());
    let x_spread = certified(&c.x, &c.x_coset(), r0, eps / 8.0)?;
    if !x_spread && !certified(&c.y, &c.y_coset(), r0, eps / 8.0)? {
        return Err(Error::Precondition(format!("neither X nor Y is ({r}, eps/8)-spread")));
    }
    let dd = c.delta_d();
    let eta = eps * alpha * dd / 16.0;
    let part = partition_2dim(&c.x, &c.y, &c.w, c.x_shift, c.y_shift, r, eps / 16.0, eta)?;
    let side = 1usize << c.n();
    let hits = |p: &PartitionPiece| {
        st.a.iter().filter(|&q| p.x.contains(q / side) && p.y.contains(q % side)).count()
    };
    let s_of = |p: &PartitionPiece| {
        let ys = p.y.to_vec();
        p.x.iter().map(|a| ys.iter().filter(|&&b| c.d.contains(a ^ b)).count()).sum::<usize>()
    };
    let chosen = part.pieces.iter().enumerate().find(|(_, p)| {
        let rhs = (1.0 - 4.0 * eps) * alpha * s_of(p) as f64 + eps * alpha * dd * (p.x.card() * p.y.card()) as f64;
        at_least(hits(p) as f64, rhs)
    });
    let Some((idx, p)) = chosen else {
        let s = c.size() as f64;
        let w2 = Float::powi(c.w.size() as f64, 2);
        if at_least((1.0 + eps) * c.delta() * w2, s) && part.complete {
            return Err(Error::NotFound("no partition piece meets the averaging bound".into()));
        }
        return Err(Error::Precondition(format!(
            "toy-scale hypothesis failed: |S| = {s} against (1 + eps) delta |W|^2 = {}, partition complete = {}",
            (1.0 + eps) * c.delta() * w2,
            part.complete
        )));
    };
    let dcoset = p.v.translate_to(p.x_shift ^ p.y_shift);
    let d = SubsetInd::from_indices(side, c.d.iter().filter(|&z| dcoset.contains(z as u64)))?;
    if d.is_empty() {
        return Err(Error::EmptySubset);
    }
    let next = Container::new(p.v.clone(), p.x_shift, p.y_shift, p.x.clone(), p.y.clone(), d)?;
    let out = st.restrict(next, StepKind::Pseudorandomize)?;
    let nc = &out.container;
    let w2 = Float::powi(nc.w.size() as f64, 2);
    let rho = nc.size() as f64 / (nc.delta() * w2);
    let alpha_after = out.alpha();
    let ndd = nc.delta_d();
    let spread = certified(&nc.x, &nc.x_coset(), r, eps)? && certified(&nc.y, &nc.y_coset(), r, eps)?;
    let report = PseudoReport {
        piece: idx,
        pieces: part.pieces.len(),
        partition_complete: part.complete,
        dim_drop: c.w.dim() - nc.w.dim(),
        rho,
        d_density: Check::at_least(ndd, eps * alpha / 2.0 * dd),
        d_density_exact: Check::at_least(ndd, eps * alpha / rho * dd),
        product_density: Check::at_least(
            nc.delta_x() * nc.delta_y(),
            c.delta_x() * c.delta_y() * Float::powi(part.floor_factor, p.depth as i32 + 1),
        ),
        spread,
        density: Check::at_least(alpha_after, (1.0 - 5.0 * eps) * alpha),
        density_exact: Check::at_least(alpha_after, (1.0 - 4.0 * eps) * rho * alpha),
    };
    if !report.d_density_exact.holds || !report.density_exact.holds {
        return Err(Error::NotFound("pseudorandomization broke an exact bound".into()));
    }
    Ok((out, report))
}

/// One numbered conclusion of [`obtain_spreadness`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conclusion {
    pub index: u8,
    pub check: Check,
}

/// Outcome of [`obtain_spreadness`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadnessReport {
    pub iterations: usize,
    pub iteration_bound: usize,
    pub alpha: f64,
    /// Density on `S(X, Y, D)` after the loop.
    pub alpha_star: f64,
    /// Density on `S(X, Y+, D)` with the sparse rows dropped.
    pub alpha_plus: f64,
    pub culled: usize,
    /// Conclusions 1 to 6, with toy constants `C = 1`.
    pub conclusions: Vec<Conclusion>,
    /// Some combinatorial spreadness verdict came from the alternating heuristic.
    pub heuristic: bool,
    /// Report of every pseudorandomization step, in order.
    pub steps: Vec<PseudoReport>,
}

impl SpreadnessReport {
    pub fn all_hold(&self) -> bool {
        self.conclusions.iter().all(|c| c.check.holds)
    }
}

fn auto_mode(f: &GridFunction) -> (BilinearMode, bool) {
    if f.rows().min(f.cols()) <= AUTO_EXACT_SIDE {
        (BilinearMode::Exact, false)
    } else {
        (BilinearMode::alternating(), true)
    }
}

fn members_at(list: &[usize], idx: &SubsetInd, side: usize) -> Result<SubsetInd> {
    SubsetInd::from_indices(side, idx.iter().map(|i| list[i]))
}

/// Row density bound `(1 - sqrt eps) alpha delta_X delta_D |W|` and the rows under it.
fn sparse_rows(st: &IncrementState, factor: f64) -> Vec<usize> {
    let c = &st.container;
    let thr = factor * st.alpha() * c.x.card() as f64 * c.d.card() as f64 / c.w.size() as f64;
    st.row_counts().into_iter().filter(|&(_, k)| (k as f64) < thr).map(|(y, _)| y).collect()
}

/// Iterates combinatorial increments and pseudorandomization until `A` is spread in
/// both bilinear directions, then drops sparse rows of `Y`.
pub fn obtain_spreadness(a: &SubsetInd, n: usize, r: usize, s: u32, t: u32, eps: f64) -> Result<(IncrementState, SpreadnessReport)> {
    check_eps("eps", eps, 1.0 / 16.0)?;
    let mut st = IncrementState::from_set(a, n)?;
    let alpha = st.alpha();
    if alpha <= 0.0 {
        return Err(Error::EmptySubset);
    }
    let ln_a = Float::ln(1.0 / alpha);
    let iteration_bound = (Float::ceil(C_ITER * ln_a / eps) as usize).max(1);
    let guard = GUARD_FACTOR * iteration_bound;
    let se = Float::sqrt(eps);
    let side = 1usize << n;
    let (mut iterations, mut culled, mut heuristic) = (0usize, 0usize, false);
    let mut steps = Vec::new();
    loop {
        if iterations > guard {
            return Err(Error::Budget { what: "spreadness iterations", estimate: iterations as f64, limit: guard as f64 });
        }
        let c = st.container.clone();
        let (xs, ys, ds) = (c.x.to_vec(), c.y.to_vec(), c.d.to_vec());
        let mut restricted = None;
        for side_kind in [Side::F2, Side::F1] {
            let f = if side_kind == Side::F2 { st.f2() } else { st.f1() };
            let (mode, h) = auto_mode(&f);
            heuristic |= h;
            let cert = is_asym_spread(&f, (s + 1) as f64, t as f64, eps, mode)?;
            if cert.is_spread() {
                continue;
            }
            let Some(Counterexample::Rectangle { rows, cols }) = cert.counterexample else {
                return Err(Error::NotFound("bilinear violation without a rectangle".into()));
            };
            let d1 = members_at(&ds, &cols, side)?;
            let next = if side_kind == Side::F2 {
                Container::new(c.w.clone(), c.x_shift, c.y_shift, members_at(&xs, &rows, side)?, c.y.clone(), d1)?
            } else {
                Container::new(c.w.clone(), c.x_shift, c.y_shift, c.x.clone(), members_at(&ys, &rows, side)?, d1)?
            };
            restricted = Some(st.restrict(next, StepKind::CombIncrement)?);
            break;
        }
        if let Some(inc) = restricted {
            iterations += 1;
            let (next, rep) = pseudorandomize(&inc, r, eps / 2.0)?;
            steps.push(rep);
            st = next;
            continue;
        }
        let sparse = sparse_rows(&st, 1.0 - se);
        if sparse.len() as f64 > 4.0 * se * c.y.card() as f64 {
            iterations += 1;
            let (next, rep) = cull_sparse_rows(&st, se, (4.0 * se).min(0.49))?;
            culled += rep.removed.len();
            st = next;
            continue;
        }
        let alpha_star = st.alpha();
        let mut plus = st.clone();
        if !sparse.is_empty() {
            let mut y = c.y.clone();
            for &r in &sparse {
                y.remove(r);
            }
            culled += sparse.len();
            plus = st.restrict(Container::new(c.w.clone(), c.x_shift, c.y_shift, c.x.clone(), y, c.d.clone())?, StepKind::RowCull)?;
        }
        let conclusions = spreadness_conclusions(&plus, alpha, alpha_star, r, s, t, eps)?;
        let report = SpreadnessReport {
            iterations,
            iteration_bound,
            alpha,
            alpha_star,
            alpha_plus: plus.alpha(),
            culled,
            conclusions,
            heuristic,
            steps,
        };
        return Ok((plus, report));
    }
}

fn spreadness_conclusions(st: &IncrementState, alpha: f64, alpha_star: f64, r: usize, s: u32, t: u32, eps: f64) -> Result<Vec<Conclusion>> {
    let c = &st.container;
    let se = Float::sqrt(eps);
    let l = Float::ln(1.0 / alpha);
    let dd_bar = Float::exp(-(t as f64 / eps * l + l * l / (eps * eps)));
    let l2 = Float::ln(1.0 / (eps * alpha * dd_bar));
    let d_bar = Float::exp(-(s as f64 / eps * l + l * l2 * l2 / eps));
    let l1 = Float::ln(1.0 / (eps * alpha * dd_bar * d_bar));
    let codim = r as f64 / (eps * eps * eps) * (l1 * l1 * l2 * l + Float::powi(l2, 5) * l);
    let rr = r.min(c.w.dim());
    let spread_x = spread_parameter(&c.x, &c.x_coset(), rr)?;
    let spread_y = spread_parameter(&c.y, &c.y_coset(), rr)?;
    let mut margin = f64::INFINITY;
    for f in [st.f2(), st.f1()] {
        let (mode, _) = auto_mode(&f);
        margin = margin.min(is_asym_spread(&f, s as f64, t as f64, 5.0 * se, mode)?.margin);
    }
    let alpha_plus = st.alpha();
    let floor = (1.0 - 2.0 * se) * alpha_plus * c.delta_x() * c.delta_d() * c.w.size() as f64;
    let row_min = st.row_counts().iter().map(|&(_, k)| k).min().unwrap_or(0) as f64;
    let rows = Check { value: row_min, bound: floor, holds: at_least(row_min, floor) && at_least(alpha_star, alpha) };
    Ok(vec![
        Conclusion { index: 1, check: Check::at_most(spread_x.max(spread_y), 5.0 * se) },
        Conclusion { index: 2, check: Check::at_least(c.delta_d(), dd_bar) },
        Conclusion { index: 3, check: Check::at_least(c.delta_x().min(c.delta_y()), d_bar) },
        Conclusion { index: 4, check: Check::at_least(c.w.dim() as f64, (c.n() as f64 - codim).max(0.0)) },
        Conclusion { index: 5, check: Check::at_least(margin, 0.0) },
        Conclusion { index: 6, check: rows },
    ])
}

/// Outcome of [`von_neumann_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct VonNeumannReport {
    pub norm_f1: f64,
    pub norm_f2: f64,
    /// `min_y E_x 1_A(x, y)` over `x in W + x0`.
    pub row_min: f64,
    /// Corner count `Phi(1_A, 1_A, 1_A)` in local coordinates of `W`.
    pub phi: f64,
    /// `(1 - 4 eps) alpha^3 delta_X^2 delta_Y^2 delta_D^2`.
    pub bound: f64,
    /// Small `F1` norm, small `F2` norm, no sparse rows.
    pub hypotheses: [bool; 3],
    /// `p >= log2(1/(alpha delta_D)) / eps^4`.
    pub p_large: bool,
    pub holds: bool,
}

impl VonNeumannReport {
    pub fn applicable(&self) -> bool {
        self.hypotheses.iter().all(|&h| h) && self.p_large
    }
}

/// Compares the corner count of `A` with `alpha^3 delta_X^2 delta_Y^2 delta_D^2`.
pub fn von_neumann_check(st: &IncrementState, eps: f64, p: u32) -> Result<VonNeumannReport> {
    check_eps("eps", eps, 1.0)?;
    let c = &st.container;
    let alpha = st.alpha();
    let (dx, dy, dd) = (c.delta_x(), c.delta_y(), c.delta_d());
    let (norm_f1, norm_f2) = (grid_norm_2k(&st.f1(), p)?, grid_norm_2k(&st.f2(), p)?);
    let ws = c.w.size();
    let row_min = st.row_counts().iter().map(|&(_, k)| k).min().unwrap_or(0) as f64 / ws as f64;
    let m = c.w.dim();
    let mut data = vec![0.0; ws * ws];
    let side = 1usize << c.n();
    for q in st.a.iter() {
        let (a, b) = ((q / side) as u64, (q % side) as u64);
        let la = c.w.local_coords(a ^ c.x_shift).expect("X ⊆ W + x0") as usize;
        let lb = c.w.local_coords(b ^ c.y_shift).expect("Y ⊆ W + y0") as usize;
        data[la * ws + lb] = 1.0;
    }
    let g = GridFunction::new(ws, ws, data)?;
    let phi_v = phi(&Group::f2(m)?, &g, &g, &g)?;
    let bound = (1.0 - 4.0 * eps) * Float::powi(alpha, 3) * Float::powi(dx * dy * dd, 2);
    let e2 = eps * eps / 36.0;
    let hypotheses = [
        norm_f1 < (1.0 + e2) * alpha * dx,
        norm_f2 < 2.0 * alpha * dy,
        at_least(row_min, (1.0 - e2) * alpha * dx * dd),
    ];
    let p_large = alpha > 0.0 && p as f64 >= Float::log2(1.0 / (alpha * dd)) / Float::powi(eps, 4);
    Ok(VonNeumannReport { norm_f1, norm_f2, row_min, phi: phi_v, bound, hypotheses, p_large, holds: at_least(phi_v, bound) })
}
