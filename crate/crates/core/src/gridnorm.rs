// SPDX-License-Identifier: MIT OR Apache-2.0
//! Grid norms `G(k, l)` and Gowers grid norms over triples of member lists.
//!
//! `‖A‖_{G(k,l)}^{kl} = E_{x ∈ Ω1^k, y ∈ Ω2^l} prod_{i,j} A(x_i, y_j)`. For
//! signed inputs with odd parameters the inner expectation may be negative;
//! the absolute value is taken only at the end.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::setfun::GridFunction;

/// Exact evaluations may touch at most this many entries.
pub const EXACT_WORK_LIMIT: f64 = 1e9;

/// Evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// A grid-norm value with its raw `kl`-th power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// `|power|^{1/(kl)}`.
    pub value: f64,
    /// Signed `E prod A(x_i, y_j)`.
    pub power: f64,
    /// Standard error of `power`; zero in exact mode.
    pub power_stderr: f64,
    /// Delta-method standard error of `value`; zero in exact mode.
    pub stderr: f64,
}

impl NormEstimate {
    fn exact(power: f64, kl: u32) -> Self {
        Self {
            value: root(power, kl),
            power,
            power_stderr: 0.0,
            stderr: 0.0,
        }
    }
}

fn root(power: f64, kl: u32) -> f64 {
    Float::powf(Float::abs(power), 1.0 / kl as f64)
}

/// Work estimate of the collapsed sum over `side^k` tuples with `other`-long inner sums.
fn collapsed_cost(side: usize, k: u32, other: usize) -> f64 {
    Float::powi(side as f64, k as i32) * other as f64
}

/// `E_{x ∈ rows^k} (E_y prod_i A(x_i, y))^l`, enumerating multisets of rows
/// with multinomial weights.
fn collapsed_power(a: &GridFunction, k: u32, l: u32) -> f64 {
    let (r, c) = (a.rows(), a.cols());
    let mut prods = vec![vec![1.0f64; c]; k as usize + 1];
    let mut total = 0.0;
    // factorials up to k for the multinomial weight
    let mut fact = vec![1.0f64; k as usize + 1];
    for i in 1..=k as usize {
        fact[i] = fact[i - 1] * i as f64;
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        a: &GridFunction,
        depth: usize,
        k: usize,
        l: i32,
        start: usize,
        last: usize,
        run: usize,
        denom: f64,
        prods: &mut Vec<Vec<f64>>,
        fact: &[f64],
        total: &mut f64,
    ) {
        if depth == k {
            let inner: f64 = prods[k].iter().sum::<f64>() / a.cols() as f64;
            let weight = fact[k] / (denom * fact[run]);
            *total += weight * Float::powi(inner, l);
            return;
        }
        for x in start..a.rows() {
            let (lower, upper) = prods.split_at_mut(depth + 1);
            let src = &lower[depth];
            let dst = &mut upper[0];
            let row = a.row(x);
            for ((d, s), v) in dst.iter_mut().zip(src.iter()).zip(row) {
                *d = s * v;
            }
            let (run2, denom2) = if depth > 0 && x == last {
                (run + 1, denom)
            } else if depth > 0 {
                (1, denom * fact[run])
            } else {
                (1, 1.0)
            };
            rec(a, depth + 1, k, l, x, x, run2, denom2, prods, fact, total);
        }
    }
    if k == 0 {
        return 1.0;
    }
    rec(a, 0, k as usize, l as i32, 0, usize::MAX, 0, 1.0, &mut prods, &fact, &mut total);
    total / Float::powi(r as f64, k as i32)
}

/// Signed `kl`-th power `E prod_{i,j} A(x_i, y_j)` by the cheaper collapsed side.
pub fn grid_power(a: &GridFunction, k: u32, l: u32) -> Result<f64> {
    if k == 0 || l == 0 {
        return Err(Error::Precondition("grid norm needs k, l >= 1".into()));
    }
    let row_cost = collapsed_cost(a.rows(), k, a.cols());
    let col_cost = collapsed_cost(a.cols(), l, a.rows());
    let cost = row_cost.min(col_cost);
    if cost > EXACT_WORK_LIMIT {
        return Err(Error::Budget {
            what: "exact grid norm",
            estimate: cost,
            limit: EXACT_WORK_LIMIT,
        });
    }
    if row_cost <= col_cost {
        Ok(collapsed_power(a, k, l))
    } else {
        Ok(collapsed_power(&a.transpose(), l, k))
    }
}

/// The `(k, l)` grid norm.
pub fn grid_norm(a: &GridFunction, k: u32, l: u32, mode: NormMode) -> Result<NormEstimate> {
    match mode {
        NormMode::Exact => Ok(NormEstimate::exact(grid_power(a, k, l)?, k * l)),
        NormMode::MonteCarlo { samples, seed } => {
            if k == 0 || l == 0 {
                return Err(Error::Precondition("grid norm needs k, l >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut xs = vec![0usize; k as usize];
            let mut ys = vec![0usize; l as usize];
            let sample = |rng: &mut ChaCha8Rng, xs: &mut Vec<usize>, ys: &mut Vec<usize>| {
                for x in xs.iter_mut() {
                    *x = rng.gen_range(0..a.rows());
                }
                for y in ys.iter_mut() {
                    *y = rng.gen_range(0..a.cols());
                }
                let mut p = 1.0;
                for &x in xs.iter() {
                    for &y in ys.iter() {
                        p *= a.get(x, y);
                    }
                }
                p
            };
            Ok(monte_carlo(samples, k * l, || sample(&mut rng, &mut xs, &mut ys)))
        }
    }
}

fn monte_carlo(samples: u64, kl: u32, mut draw: impl FnMut() -> f64) -> NormEstimate {
    let samples = samples.max(2);
    // Welford accumulation for the mean and variance.
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let v = draw();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    let power_stderr = Float::sqrt(var / samples as f64);
    let value = root(mean, kl);
    let stderr = if mean.abs() > 0.0 {
        value / (kl as f64 * mean.abs()) * power_stderr
    } else {
        0.0
    };
    NormEstimate {
        value,
        power: mean,
        power_stderr,
        stderr,
    }
}

/// `‖A‖_{G(2,k)}` through the codegree matrix `B(x1, x2) = E_y A(x1,y) A(x2,y)`.
///
/// Entries are scaled by the largest codegree first, so large `k` does not underflow.
pub fn grid_norm_2k(a: &GridFunction, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("grid norm needs k >= 1".into()));
    }
    let b = codegree(a);
    let m = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return Ok(0.0);
    }
    let scaled = b.iter().map(|&v| Float::powi(v / m, k as i32)).sum::<f64>() / b.len() as f64;
    Ok(Float::sqrt(m) * root(scaled, 2 * k))
}

/// `‖A‖_{G(2,k)}^{2k} = E_{x1,x2} B(x1,x2)^k`.
pub fn grid_power_2k(a: &GridFunction, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("grid norm needs k >= 1".into()));
    }
    let r = a.rows();
    let mut total = 0.0;
    for x1 in 0..r {
        let row1 = a.row(x1);
        for x2 in x1..r {
            let b: f64 = row1.iter().zip(a.row(x2)).map(|(p, q)| p * q).sum::<f64>() / a.cols() as f64;
            let t = Float::powi(b, k as i32);
            total += if x1 == x2 { t } else { 2.0 * t };
        }
    }
    Ok(total / (r as f64 * r as f64))
}

/// Codegree matrix `B(x1, x2) = E_y A(x1, y) A(x2, y)`, row-major.
pub fn codegree(a: &GridFunction) -> Vec<f64> {
    let r = a.rows();
    let mut b = vec![0.0; r * r];
    for x1 in 0..r {
        for x2 in x1..r {
            let v: f64 = a.row(x1).iter().zip(a.row(x2)).map(|(p, q)| p * q).sum::<f64>() / a.cols() as f64;
            b[x1 * r + x2] = v;
            b[x2 * r + x1] = v;
        }
    }
    b
}

/// `E_{x ∈ B1, y ∈ B2^k, z ∈ B3^l} prod f(x + y_i + z_j)` over member lists.
pub fn gowers_grid_norm(
    g: &Group,
    f: &[f64],
    b1: &[usize],
    b2: &[usize],
    b3: &[usize],
    k: u32,
    l: u32,
    mode: NormMode,
) -> Result<NormEstimate> {
    if f.len() != g.order() {
        return Err(Error::DimensionMismatch {
            expected: g.order(),
            got: f.len(),
        });
    }
    if b1.is_empty() || b2.is_empty() || b3.is_empty() {
        return Err(Error::EmptySubset);
    }
    match mode {
        NormMode::Exact => {
            if b1.len() > 4096 {
                return Err(Error::Refused("exact Gowers grid norm needs |B1| <= 4096".into()));
            }
            let mut acc = 0.0;
            for &x in b1 {
                let mut data = Vec::with_capacity(b2.len() * b3.len());
                for &y in b2 {
                    let xy = g.add(x, y);
                    for &z in b3 {
                        data.push(f[g.add(xy, z)]);
                    }
                }
                let fx = GridFunction::new(b2.len(), b3.len(), data)?;
                acc += grid_power(&fx, k, l)?;
            }
            Ok(NormEstimate::exact(acc / b1.len() as f64, k * l))
        }
        NormMode::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ys = vec![0usize; k as usize];
            let mut zs = vec![0usize; l as usize];
            Ok(monte_carlo(samples, k * l, || {
                let x = b1[rng.gen_range(0..b1.len())];
                for y in ys.iter_mut() {
                    *y = g.add(x, b2[rng.gen_range(0..b2.len())]);
                }
                for z in zs.iter_mut() {
                    *z = b3[rng.gen_range(0..b3.len())];
                }
                let mut p = 1.0;
                for &y in &ys {
                    for &z in &zs {
                        p *= f[g.add(y, z)];
                    }
                }
                p
            }))
        }
    }
}

/// Two sides of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub holds: bool,
}

impl InequalityReport {
    pub fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
            holds: lhs <= rhs + tol,
        }
    }
}

/// `E prod_{i,j} f_ij(x_i, y_j) <= prod_{i,j} ‖f_ij‖_{G(k,l)}`.
///
/// `fs` is a `k x l` array, row-major.
pub fn check_gowers_holder(fs: &[GridFunction], k: u32, l: u32) -> Result<InequalityReport> {
    let (k_, l_) = (k as usize, l as usize);
    if fs.len() != k_ * l_ || k == 0 || l == 0 {
        return Err(Error::DimensionMismatch {
            expected: k_ * l_,
            got: fs.len(),
        });
    }
    let (r, c) = (fs[0].rows(), fs[0].cols());
    if fs.iter().any(|f| f.rows() != r || f.cols() != c) {
        return Err(Error::Precondition("all functions must share one rectangle".into()));
    }
    if fs.iter().any(|f| !f.is_nonneg()) {
        return Err(Error::Precondition("Gowers-Holder needs nonnegative functions".into()));
    }
    let cost = collapsed_cost(r, k, c * l_ * k_);
    if cost > EXACT_WORK_LIMIT {
        return Err(Error::Budget {
            what: "Gowers-Holder left side",
            estimate: cost,
            limit: EXACT_WORK_LIMIT,
        });
    }
    // LHS = E_{x tuple} prod_j E_y prod_i f_ij(x_i, y).
    let mut xs = vec![0usize; k_];
    let mut lhs = 0.0;
    let tuples = Float::powi(r as f64, k as i32) as u64;
    for t in 0..tuples {
        let mut rem = t;
        for x in xs.iter_mut() {
            *x = (rem % r as u64) as usize;
            rem /= r as u64;
        }
        let mut prod = 1.0;
        for j in 0..l_ {
            let mut inner = 0.0;
            for y in 0..c {
                let mut p = 1.0;
                for (i, &x) in xs.iter().enumerate() {
                    p *= fs[i * l_ + j].get(x, y);
                }
                inner += p;
            }
            prod *= inner / c as f64;
        }
        lhs += prod;
    }
    lhs /= tuples as f64;
    let mut rhs = 1.0;
    for f in fs {
        rhs *= root(grid_power(f, k, l)?, k * l);
    }
    Ok(InequalityReport::new(lhs, rhs, 1e-9))
}

/// `‖A‖_{G(k,l)} <= ‖A‖_{G(k',l')}` for `k <= k'`, `l <= l'`.
pub fn check_monotonicity(a: &GridFunction, k: u32, l: u32, k2: u32, l2: u32) -> Result<InequalityReport> {
    if !a.is_nonneg() {
        return Err(Error::Precondition("monotonicity needs a nonnegative function".into()));
    }
    if k > k2 || l > l2 {
        return Err(Error::Precondition("need k <= k' and l <= l'".into()));
    }
    let lhs = root(grid_power(a, k, l)?, k * l);
    let rhs = root(grid_power(a, k2, l2)?, k2 * l2);
    Ok(InequalityReport::new(lhs, rhs, 1e-9))
}

/// `‖A + B‖_{G(k,l)} <= ‖A‖_{G(k,l)} + ‖B‖_{G(k,l)}` for even `k, l`.
///
/// The sum is halved before evaluation to stay inside `[-1, 1]` and the
/// norm is rescaled by homogeneity.
pub fn check_triangle(a: &GridFunction, b: &GridFunction, k: u32, l: u32) -> Result<InequalityReport> {
    if k % 2 == 1 || l % 2 == 1 {
        return Err(Error::Precondition("triangle inequality needs even k and l".into()));
    }
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows() * a.cols(),
            got: b.rows() * b.cols(),
        });
    }
    let half: Vec<f64> = a.data().iter().zip(b.data()).map(|(p, q)| 0.5 * (p + q)).collect();
    let s = GridFunction::new(a.rows(), a.cols(), half)?;
    let lhs = 2.0 * root(grid_power(&s, k, l)?, k * l);
    let rhs = root(grid_power(a, k, l)?, k * l) + root(grid_power(b, k, l)?, k * l);
    Ok(InequalityReport::new(lhs, rhs, 1e-9))
}
