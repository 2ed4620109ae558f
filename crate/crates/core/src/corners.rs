// SPDX-License-Identifier: MIT OR Apache-2.0
//! Corners: counting, the trilinear form, Behrend-type constructions and the
//! nonabelian reductions.
//!
//! A corner in `A ⊆ G x G` is `(x, y), (x + d, y), (x, y + d)` with `d ≠ 0`.
//! Sets on `G x G` are indexed `x * |G| + y`. Integer-grid sets on `[N] x [N]`
//! use the same layout and never wrap around.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::group::{Group, GroupTable};
use crate::setfun::{GridFunction, SubsetInd};
use crate::transform::dft_group;

/// Outcome of a corner count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornerReport {
    /// Ordered triples `(x, y, d)` with `d ≠ 0` forming a corner.
    pub count: u64,
    /// Triples with `d = 0`; always `|A|`.
    pub trivial: u64,
    /// Lexicographically first `(x, y, d)` with `d ≠ 0`, if any.
    pub witness: Option<(usize, usize, usize)>,
}

fn check_square(g: &Group, f: &GridFunction) -> Result<()> {
    if f.rows() != g.order() || f.cols() != g.order() {
        return Err(Error::DimensionMismatch {
            expected: g.order(),
            got: f.rows().max(f.cols()),
        });
    }
    Ok(())
}

/// `E_{x,y,z} f1(x,y) f2(y+z, y) f3(x, x+z)` by the triple loop.
pub fn phi_naive(g: &Group, f1: &GridFunction, f2: &GridFunction, f3: &GridFunction) -> Result<f64> {
    for f in [f1, f2, f3] {
        check_square(g, f)?;
    }
    let n = g.order();
    let mut total = 0.0;
    for x in 0..n {
        for y in 0..n {
            let a = f1.get(x, y);
            if a == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for z in 0..n {
                inner += f2.get(g.add(y, z), y) * f3.get(x, g.add(x, z));
            }
            total += a * inner;
        }
    }
    Ok(total / (n as f64).powi(3))
}

/// `E_{x,y,d} f1(x,y) f2(x+d, y) f3(x, y+d)` by the triple loop.
pub fn phi_corner_naive(
    g: &Group,
    f1: &GridFunction,
    f2: &GridFunction,
    f3: &GridFunction,
) -> Result<f64> {
    for f in [f1, f2, f3] {
        check_square(g, f)?;
    }
    let n = g.order();
    let mut total = 0.0;
    for x in 0..n {
        for y in 0..n {
            let a = f1.get(x, y);
            if a == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for d in 0..n {
                inner += f2.get(g.add(x, d), y) * f3.get(x, g.add(y, d));
            }
            total += a * inner;
        }
    }
    Ok(total / (n as f64).powi(3))
}

/// Table of `e(j / L)` for the exponent `L` of `g`.
fn root_table(g: &Group) -> Vec<Complex64> {
    let l = g.exponent().max(1);
    (0..l)
        .map(|j| {
            let ang = 2.0 * PI * j as f64 / l as f64;
            Complex64::new(Float::cos(ang), Float::sin(ang))
        })
        .collect()
}

/// Numerator of `<k, x>` over the exponent, for character index `k`.
fn pairing(g: &Group, k: usize, x: usize) -> usize {
    let l = g.exponent() as u128;
    let kc = g.coords(k);
    let xc = g.coords(x);
    let mut acc: u128 = 0;
    for ((&a, &b), &n) in kc.iter().zip(&xc).zip(g.factors()) {
        acc += a as u128 * b as u128 * (l / n as u128);
    }
    (acc % l) as usize
}

/// `E_{x,y} f1(x,y) E_u a_y(u) b_x(u + sigma (x - y))` through the transform.
///
/// With normalized coefficients `â(k) = E_u a(u) e(-<k,u>)`, the inner
/// correlation is `sum_k conj(â_y(k)) b̂_x(k) e(<k, sigma (x - y)>)`, which
/// separates in `x` and `y`; the total is one complex matrix product.
fn separable_trilinear(
    g: &Group,
    f1: &GridFunction,
    a: impl Fn(usize, usize) -> f64,
    b: impl Fn(usize, usize) -> f64,
    sigma: i64,
) -> f64 {
    let n = g.order();
    let roots = root_table(g);
    let l = roots.len();
    let inv_n = 1.0 / n as f64;
    let transform_rows = |h: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<Complex64>> {
        (0..n)
            .map(|row| {
                let mut buf: Vec<Complex64> = (0..n).map(|u| Complex64::new(h(row, u), 0.0)).collect();
                dft_group(g, &mut buf, false);
                for v in buf.iter_mut() {
                    *v *= inv_n;
                }
                buf
            })
            .collect()
    };
    let ahat = transform_rows(&a);
    let bhat = transform_rows(&b);
    // P[y][k] = conj(â_y(k) e(<k, sigma y>)), Q[x][k] = b̂_x(k) e(<k, sigma x>).
    let twist = |k: usize, x: usize| -> Complex64 {
        let p = pairing(g, k, g.scale(x, sigma));
        roots[p % l]
    };
    let mut total = 0.0;
    let mut m = vec![Complex64::new(0.0, 0.0); n];
    let p: Vec<Vec<Complex64>> = (0..n)
        .map(|y| (0..n).map(|k| (ahat[y][k] * twist(k, y)).conj()).collect())
        .collect();
    for x in 0..n {
        for v in m.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for y in 0..n {
            let w = f1.get(x, y);
            if w == 0.0 {
                continue;
            }
            for (mk, pk) in m.iter_mut().zip(&p[y]) {
                *mk += pk * w;
            }
        }
        let mut row = 0.0;
        for k in 0..n {
            row += (m[k] * bhat[x][k] * twist(k, x)).re;
        }
        total += row;
    }
    total / (n as f64 * n as f64)
}

/// `E_{x,y,z} f1(x,y) f2(y+z, y) f3(x, x+z)` through the group transform.
pub fn phi_spectral(g: &Group, f1: &GridFunction, f2: &GridFunction, f3: &GridFunction) -> Result<f64> {
    for f in [f1, f2, f3] {
        check_square(g, f)?;
    }
    // u = y + z: f2(u, y) f3(x, u + (x - y)).
    Ok(separable_trilinear(g, f1, |y, u| f2.get(u, y), |x, v| f3.get(x, v), 1))
}

/// `E_{x,y,d} f1(x,y) f2(x+d, y) f3(x, y+d)` through the group transform.
pub fn phi_corner_spectral(
    g: &Group,
    f1: &GridFunction,
    f2: &GridFunction,
    f3: &GridFunction,
) -> Result<f64> {
    for f in [f1, f2, f3] {
        check_square(g, f)?;
    }
    // w = x + d: f2(w, y) f3(x, w + (y - x)).
    Ok(separable_trilinear(g, f1, |y, w| f2.get(w, y), |x, v| f3.get(x, v), -1))
}

/// The trilinear form, choosing the transform path above 48 elements.
pub fn phi(g: &Group, f1: &GridFunction, f2: &GridFunction, f3: &GridFunction) -> Result<f64> {
    if g.order() > 48 {
        phi_spectral(g, f1, f2, f3)
    } else {
        phi_naive(g, f1, f2, f3)
    }
}

/// The corner form, choosing the transform path above 48 elements.
pub fn phi_corner(g: &Group, f1: &GridFunction, f2: &GridFunction, f3: &GridFunction) -> Result<f64> {
    if g.order() > 48 {
        phi_corner_spectral(g, f1, f2, f3)
    } else {
        phi_corner_naive(g, f1, f2, f3)
    }
}

fn check_grid_set(g: &Group, a: &SubsetInd) -> Result<()> {
    let n = g.order();
    if a.domain() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.domain(),
        });
    }
    Ok(())
}

/// First corner `(x, y, d)` in lexicographic order.
pub fn first_corner(g: &Group, a: &SubsetInd) -> Result<Option<(usize, usize, usize)>> {
    check_grid_set(g, a)?;
    let n = g.order();
    for p in a.iter() {
        let (x, y) = (p / n, p % n);
        for d in 1..n {
            if a.contains(g.add(x, d) * n + y) && a.contains(x * n + g.add(y, d)) {
                return Ok(Some((x, y, d)));
            }
        }
    }
    Ok(None)
}

/// Corner count by the triple loop.
pub fn count_corners_naive(g: &Group, a: &SubsetInd) -> Result<CornerReport> {
    check_grid_set(g, a)?;
    let n = g.order();
    let mut count = 0u64;
    let mut witness = None;
    for p in a.iter() {
        let (x, y) = (p / n, p % n);
        for d in 1..n {
            if a.contains(g.add(x, d) * n + y) && a.contains(x * n + g.add(y, d)) {
                count += 1;
                if witness.is_none() {
                    witness = Some((x, y, d));
                }
            }
        }
    }
    Ok(CornerReport {
        count,
        trivial: a.card() as u64,
        witness,
    })
}

/// Packed rows of a set on `G x G`: `rows[x]` is the bitset of `y`.
fn packed_rows(n: usize, a: &SubsetInd) -> Vec<Vec<u64>> {
    let words = n.div_ceil(64);
    let mut rows = vec![vec![0u64; words]; n];
    for p in a.iter() {
        let (x, y) = (p / n, p % n);
        rows[x][y >> 6] |= 1 << (y & 63);
    }
    rows
}

/// `out(y) = row((y + d) mod n)` for an `n`-bit row.
fn rotate_down(row: &[u64], n: usize, d: usize, out: &mut [u64]) {
    for w in out.iter_mut() {
        *w = 0;
    }
    // Low part: out(y) = row(y + d) for y < n - d, a right shift by d.
    let (ws, bs) = (d / 64, d % 64);
    let words = row.len();
    for i in 0..words {
        let lo = row.get(i + ws).copied().unwrap_or(0);
        let hi = row.get(i + ws + 1).copied().unwrap_or(0);
        out[i] = if bs == 0 { lo } else { lo >> bs | hi << (64 - bs) };
    }
    // High part: out(y) = row(y + d - n) for y >= n - d, a left shift by n - d.
    let s = n - d;
    let (ws, bs) = (s / 64, s % 64);
    for i in (0..words).rev() {
        if i < ws {
            break;
        }
        let lo = row[i - ws];
        let prev = if i > ws { row[i - ws - 1] } else { 0 };
        out[i] |= if bs == 0 { lo } else { lo << bs | prev >> (64 - bs) };
    }
    let r = n % 64;
    if r != 0 {
        out[words - 1] &= (1u64 << r) - 1;
    }
}

/// Corner count on `Z/NZ x Z/NZ` with word-parallel rotations.
///
/// For each `d`, counts `x` and `y` with rows `x` and `x + d` both containing
/// `y` and row `x` containing `y + d`.
pub fn count_corners_bitset(g: &Group, a: &SubsetInd) -> Result<u64> {
    check_grid_set(g, a)?;
    if g.factors().len() != 1 {
        return Err(Error::Precondition("bitset corner count needs a cyclic group".into()));
    }
    let n = g.order();
    let rows = packed_rows(n, a);
    let words = n.div_ceil(64);
    let mut rot = vec![0u64; words];
    let mut total = 0u64;
    for d in 1..n {
        for x in 0..n {
            let other = &rows[(x + d) % n];
            let row = &rows[x];
            if row.iter().all(|&w| w == 0) {
                continue;
            }
            rotate_down(row, n, d, &mut rot);
            for i in 0..words {
                total += (row[i] & other[i] & rot[i]).count_ones() as u64;
            }
        }
    }
    Ok(total)
}

/// Corner count through the transform: `round(Φ_corner |G|^3) - |A|`.
pub fn count_corners_spectral(g: &Group, a: &SubsetInd) -> Result<u64> {
    check_grid_set(g, a)?;
    let n = g.order();
    let f = GridFunction::from_subset(n, n, a)?;
    let phi = phi_corner_spectral(g, &f, &f, &f)?;
    let total = Float::round(phi * (n as f64).powi(3));
    Ok((total as u64).saturating_sub(a.card() as u64))
}

/// Ordered corner count with the first witness.
///
/// Uses the triple loop up to 512 elements; beyond that the count comes
/// from the bitset path (cyclic) or the transform path, and the witness from
/// a direct scan.
pub fn count_corners(g: &Group, a: &SubsetInd) -> Result<CornerReport> {
    if g.order() <= 512 {
        return count_corners_naive(g, a);
    }
    let count = if g.factors().len() == 1 {
        count_corners_bitset(g, a)?
    } else {
        count_corners_spectral(g, a)?
    };
    let witness = if count > 0 { first_corner(g, a)? } else { None };
    Ok(CornerReport {
        count,
        trivial: a.card() as u64,
        witness,
    })
}

/// Corners on the integer grid `[N] x [N]` with `d ≠ 0` of either sign and
/// no wraparound. The witness reports `d` as a signed integer.
pub fn count_corners_grid(n: usize, a: &SubsetInd) -> Result<(u64, Option<(usize, usize, i64)>)> {
    if a.domain() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.domain(),
        });
    }
    let mut count = 0u64;
    let mut witness = None;
    for p in a.iter() {
        let (x, y) = (p / n, p % n);
        for d in -(n as i64) + 1..n as i64 {
            if d == 0 {
                continue;
            }
            let (xd, yd) = (x as i64 + d, y as i64 + d);
            if xd < 0 || yd < 0 || xd >= n as i64 || yd >= n as i64 {
                continue;
            }
            if a.contains(xd as usize * n + y) && a.contains(x * n + yd as usize) {
                count += 1;
                if witness.is_none() {
                    witness = Some((x, y, d));
                }
            }
        }
    }
    Ok((count, witness))
}

/// Image of `A ⊆ [N] x [N]` inside `Z/4NZ x Z/4NZ`.
pub fn embed_grid_cyclic(n: usize, a: &SubsetInd) -> Result<(Group, SubsetInd)> {
    let m = 4 * n;
    let g = Group::cyclic(m as u64)?;
    let img = SubsetInd::from_indices(m * m, a.iter().map(|p| (p / n) * m + p % n))?;
    Ok((g, img))
}

/// First three-term progression `(a, a + r, a + 2r)` with `r > 0`.
pub fn find_progression(b: &SubsetInd) -> Option<[usize; 3]> {
    let n = b.domain();
    let members = b.to_vec();
    for (i, &a) in members.iter().enumerate() {
        for &c in &members[i + 1..] {
            if (a + c) % 2 == 0 && b.contains((a + c) / 2) {
                let mid = (a + c) / 2;
                debug_assert!(mid < n);
                return Some([a, mid, c]);
            }
        }
    }
    None
}

/// Digit vectors with digits in `0..=d` and value below `limit`, most
/// significant digit first, as `(value, squared norm)`.
fn shell_candidates(k: usize, d: u64, limit: u64) -> Vec<(u64, u64)> {
    let base = 2 * d + 1;
    let mut out = Vec::new();
    let mut weights = vec![1u64; k];
    for i in (0..k.saturating_sub(1)).rev() {
        weights[i] = weights[i + 1].saturating_mul(base);
    }
    fn rec(
        i: usize,
        k: usize,
        d: u64,
        weights: &[u64],
        value: u64,
        norm: u64,
        limit: u64,
        out: &mut Vec<(u64, u64)>,
    ) {
        if i == k {
            out.push((value, norm));
            return;
        }
        for digit in 0..=d {
            let v = value.saturating_add(digit.saturating_mul(weights[i]));
            if v >= limit {
                break;
            }
            rec(i + 1, k, d, weights, v, norm + digit * digit, limit, out);
        }
    }
    rec(0, k, d, &weights, 0, 0, limit, &mut out);
    out
}

/// The sphere construction alone: the largest fixed-norm shell of digit
/// vectors (base `2d + 1`, digits `0..=d`) below `N`, over all `(k, d)`.
///
/// Returns the set together with `(k, d, norm)`. Ties prefer the smaller
/// norm, then smaller `d`, then smaller `k`.
pub fn behrend_shell(n: usize) -> Result<(SubsetInd, (usize, u64, u64))> {
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let limit = n as u64;
    let mut best: (usize, (usize, u64, u64), Vec<u64>) = (1, (1, 0, 0), vec![0]);
    let mut d = 1u64;
    while d < limit {
        let base = 2 * d + 1;
        let mut k = 1usize;
        loop {
            // Smallest value using k digits is base^(k-1) when the top digit is 1.
            let top = base.checked_pow(k as u32 - 1);
            let Some(top) = top.filter(|&t| k == 1 || t < limit) else {
                break;
            };
            // The norm fixes the last digit, so a shell has at most this many members.
            let lead = (d + 1).min((limit - 1) / top + 1);
            let bound = (d + 1)
                .checked_pow(k.saturating_sub(2) as u32)
                .and_then(|p| p.checked_mul(if k == 1 { 1 } else { lead }))
                .unwrap_or(u64::MAX);
            if bound < best.0 as u64 {
                k += 1;
                continue;
            }
            let mut shells: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
            for (v, norm) in shell_candidates(k, d, limit) {
                shells.entry(norm).or_default().push(v);
            }
            for (norm, vals) in shells {
                let better = vals.len() > best.0
                    || (vals.len() == best.0 && (norm, d, k) < (best.1 .2, best.1 .1, best.1 .0));
                if better {
                    best = (vals.len(), (k, d, norm), vals);
                }
            }
            k += 1;
        }
        d += 1;
    }
    let set = SubsetInd::from_indices(n, best.2.iter().map(|&v| v as usize))?;
    Ok((set, best.1))
}

/// Greedily adds `0, 1, ..., N-1` to an AP-free set while it stays AP-free.
pub fn complete_apfree(b: &SubsetInd) -> SubsetInd {
    let n = b.domain();
    let mut s = b.clone();
    for v in 0..n {
        if s.contains(v) {
            continue;
        }
        let blocked = s.iter().any(|a| {
            // v as an endpoint with a the other endpoint, or v as the midpoint.
            let (lo, hi) = if a < v { (a, v) } else { (v, a) };
            ((lo + hi) % 2 == 0 && s.contains((lo + hi) / 2))
                || (2 * a >= v && 2 * a - v < n && s.contains(2 * a - v))
                || (2 * v >= a && 2 * v - a < n && s.contains(2 * v - a))
        });
        if !blocked {
            s.insert(v);
        }
    }
    s
}

/// A 3-AP-free subset of `{0, .., N-1}`: the best Behrend shell, then greedily
/// completed to a maximal AP-free set.
///
/// AP-freeness is re-verified for `N <= 10^4`.
pub fn behrend_apfree(n: usize) -> Result<SubsetInd> {
    let (shell, _) = behrend_shell(n)?;
    let s = complete_apfree(&shell);
    if n <= 10_000 {
        if let Some([a, b, c]) = find_progression(&s) {
            return Err(Error::HasProgression([a as i64, b as i64, c as i64]));
        }
    }
    Ok(s)
}

/// `{(x, y) ∈ [N]^2 : x + 2y ∈ B}`; a corner with step `d` maps to the
/// progression `v, v + d, v + 2d` with `v = x + 2y`.
pub fn cornerfree_from_apfree(b: &SubsetInd) -> Result<SubsetInd> {
    if let Some([a, m, c]) = find_progression(b) {
        return Err(Error::HasProgression([a as i64, m as i64, c as i64]));
    }
    let n = b.domain();
    let mut out = SubsetInd::empty(n * n);
    for x in 0..n {
        for y in 0..n {
            let v = x + 2 * y;
            if v < n && b.contains(v) {
                out.insert(x * n + y);
            }
        }
    }
    Ok(out)
}

/// Which nonabelian corner pattern to look for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerVariant {
    /// `(x, y), (xg, y), (x, gy)`.
    Bmz,
    /// `(x, y), (xg, y), (x, yg)`.
    Naive,
}

/// First `(x, y, g)` with `g` not the identity forming the chosen pattern.
pub fn find_bmz_corner(
    t: &GroupTable,
    a: &SubsetInd,
    variant: CornerVariant,
) -> Result<Option<(usize, usize, usize)>> {
    let n = t.order();
    if n > 24 {
        return Err(Error::Refused(format!("corner scan needs order <= 24, got {n}")));
    }
    if a.domain() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.domain(),
        });
    }
    let e = t.identity();
    for p in a.iter() {
        let (x, y) = (p / n, p % n);
        for g in 0..n {
            if g == e {
                continue;
            }
            let third = match variant {
                CornerVariant::Bmz => t.mul(g, y),
                CornerVariant::Naive => t.mul(y, g),
            };
            if a.contains(t.mul(x, g) * n + y) && a.contains(x * n + third) {
                return Ok(Some((x, y, g)));
            }
        }
    }
    Ok(None)
}

/// `S = {(x, y) : x^{-1} y ∈ A}`.
pub fn roth_nonabelian_lift(t: &GroupTable, a: &SubsetInd) -> Result<SubsetInd> {
    let n = t.order();
    if n > 24 {
        return Err(Error::Refused(format!("lift needs order <= 24, got {n}")));
    }
    if a.domain() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.domain() });
    }
    let mut s = SubsetInd::empty(n * n);
    for x in 0..n {
        let xi = t.inv(x);
        for y in 0..n {
            if a.contains(t.mul(xi, y)) {
                s.insert(x * n + y);
            }
        }
    }
    Ok(s)
}

/// First `(u, v, w)` in `A`, not all equal, with `u v = w^2`.
pub fn find_square_relation(t: &GroupTable, a: &SubsetInd) -> Option<(usize, usize, usize)> {
    let members = a.to_vec();
    for &u in &members {
        for &v in &members {
            for &w in &members {
                if !(u == v && v == w) && t.mul(u, v) == t.mul(w, w) {
                    return Some((u, v, w));
                }
            }
        }
    }
    None
}

/// Projection of `A ⊆ G x G` onto an abelian subgroup `H` through `(x, y)`.
///
/// BMZ form: `{(h1, h2) : (x h1, h2 y) ∈ A}`; naive form:
/// `{(h1, h2) : (x h1, y h2) ∈ A}`. Indexed by positions in `h`.
pub fn projection_set(
    t: &GroupTable,
    a: &SubsetInd,
    h: &[usize],
    x: usize,
    y: usize,
    variant: CornerVariant,
) -> Result<SubsetInd> {
    let n = t.order();
    if a.domain() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.domain(),
        });
    }
    let k = h.len();
    let mut out = SubsetInd::empty(k * k);
    for (i, &h1) in h.iter().enumerate() {
        for (j, &h2) in h.iter().enumerate() {
            let second = match variant {
                CornerVariant::Bmz => t.mul(h2, y),
                CornerVariant::Naive => t.mul(y, h2),
            };
            if a.contains(t.mul(x, h1) * n + second) {
                out.insert(i * k + j);
            }
        }
    }
    Ok(out)
}
