// SPDX-License-Identifier: MIT OR Apache-2.0
//! Brute-force reference computations.
//!
//! Nothing here calls a core kernel beyond group arithmetic and set
//! membership; each function is the definition written as nested loops.

use corners_lab_core::corners::CornerVariant;
use corners_lab_core::group::{Group, GroupTable};
use corners_lab_core::nof::Coloring;
use corners_lab_core::setfun::{GridFunction, SubsetInd};
use num_rational::Ratio;

/// `#{(x, y, d) : d != 0, (x, y), (x + d, y), (x, y + d) in A}` over `G x G`.
pub fn corner_count(g: &Group, a: &SubsetInd) -> u64 {
    let m = g.order();
    let mut count = 0;
    for x in 0..m {
        for y in 0..m {
            if !a.contains(x * m + y) {
                continue;
            }
            for d in 1..m {
                if a.contains(g.add(x, d) * m + y) && a.contains(x * m + g.add(y, d)) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Corners in `[N] x [N]` with `d` of either sign and no wraparound.
pub fn grid_corner_count(n: usize, a: &SubsetInd) -> u64 {
    let mut count = 0;
    for x in 0..n {
        for y in 0..n {
            if !a.contains(x * n + y) {
                continue;
            }
            for d in 1..n {
                if x + d < n && y + d < n && a.contains((x + d) * n + y) && a.contains(x * n + y + d) {
                    count += 1;
                }
                if x >= d && y >= d && a.contains((x - d) * n + y) && a.contains(x * n + y - d) {
                    count += 1;
                }
            }
        }
    }
    count
}

fn next_tuple(t: &mut [usize], base: usize) -> bool {
    for v in t.iter_mut() {
        *v += 1;
        if *v < base {
            return true;
        }
        *v = 0;
    }
    false
}

/// `E_{x_1..x_k, y_1..y_l} prod_{i,j} f_ij(x_i, y_j)` for a row-major `k x l`
/// array of functions on one rectangle, by enumerating every tuple.
pub fn grid_product_mean(fs: &[&GridFunction], k: usize, l: usize) -> f64 {
    assert_eq!(fs.len(), k * l);
    let (r, c) = (fs[0].rows(), fs[0].cols());
    let mut xs = vec![0usize; k];
    let mut total = 0.0;
    loop {
        let mut ys = vec![0usize; l];
        loop {
            let mut p = 1.0;
            for i in 0..k {
                for j in 0..l {
                    p *= fs[i * l + j].get(xs[i], ys[j]);
                }
            }
            total += p;
            if !next_tuple(&mut ys, c) {
                break;
            }
        }
        if !next_tuple(&mut xs, r) {
            break;
        }
    }
    total / ((r as f64).powi(k as i32) * (c as f64).powi(l as i32))
}

/// `‖f‖_{G(k,l)}^{kl}` by full enumeration.
pub fn grid_power(f: &GridFunction, k: usize, l: usize) -> f64 {
    grid_product_mean(&vec![f; k * l], k, l)
}

/// `‖f‖_{G(k,l)}`; the power is clamped at zero before the root.
pub fn grid_norm(f: &GridFunction, k: usize, l: usize) -> f64 {
    grid_power(f, k, l).max(0.0).powf(1.0 / (k * l) as f64)
}

/// `E[f g1 g2] / (E g1 E g2)` and the two masses.
pub fn sift_eval(f: &GridFunction, g1: &[f64], g2: &[f64]) -> (f64, f64, f64) {
    let (r, c) = (f.rows(), f.cols());
    let mut s = 0.0;
    for x in 0..r {
        for y in 0..c {
            s += f.get(x, y) * g1[x] * g2[y];
        }
    }
    let m1 = g1.iter().sum::<f64>() / r as f64;
    let m2 = g2.iter().sum::<f64>() / c as f64;
    (s / (r * c) as f64 / (m1 * m2), m1, m2)
}

/// `(E_{x, x'} (E_y f(x, y) f(x', y))^m)^{1/(2m)}` with the codegree scaled by
/// its maximum so large `m` stays finite.
pub fn norm_2m(f: &GridFunction, m: u32) -> f64 {
    let (r, c) = (f.rows(), f.cols());
    let mut b = Vec::with_capacity(r * r);
    for x in 0..r {
        for x2 in 0..r {
            b.push((0..c).map(|y| f.get(x, y) * f.get(x2, y)).sum::<f64>() / c as f64);
        }
    }
    let top = b.iter().fold(0.0f64, |t, v| t.max(v.abs()));
    if top == 0.0 {
        return 0.0;
    }
    let s = b.iter().map(|v| (v / top).powf(m as f64)).sum::<f64>() / b.len() as f64;
    top.sqrt() * s.max(0.0).powf(1.0 / (2 * m) as f64)
}

/// Some `a < b < c` in `B` with `a + c = 2b`, by scanning pairs.
pub fn has_3ap(b: &SubsetInd) -> bool {
    let n = b.domain();
    let members = b.to_vec();
    for (i, &a) in members.iter().enumerate() {
        for &m in &members[i + 1..] {
            let c = 2 * m - a;
            if c < n && b.contains(c) {
                return true;
            }
        }
    }
    false
}

/// Size of the largest 3-AP-free subset of `{0, .., n-1}`, by branch and bound.
pub fn r3_max(n: usize) -> usize {
    fn go(i: usize, n: usize, chosen: &mut Vec<usize>, in_set: &mut [bool], best: &mut usize) {
        if chosen.len() + (n - i) <= *best {
            return;
        }
        if i == n {
            *best = chosen.len();
            return;
        }
        // `i` closes a progression with two chosen elements only as its top.
        let ok = chosen.iter().all(|&m| 2 * m < i || !in_set[2 * m - i]);
        if ok {
            chosen.push(i);
            in_set[i] = true;
            go(i + 1, n, chosen, in_set, best);
            in_set[i] = false;
            chosen.pop();
        }
        go(i + 1, n, chosen, in_set, best);
    }
    let mut best = 0;
    go(0, n, &mut Vec::new(), &mut vec![false; n], &mut best);
    best
}

/// Exact regularity test: `|B(rho (1 + c))| / |B(rho)|` lies within
/// `1 ± 100 d |c|` for every `|c| <= 1/(100 d)`.
///
/// Distances `||a x / N||` are multiples of `1/N`, so the size is a step
/// function of `c`; it is checked at every jump, just beside it, and at the
/// ends of the window.
pub fn bohr_regular(n: u64, freqs: &[u64], radius: Ratio<u64>) -> bool {
    type R = Ratio<i128>;
    let d = freqs.len() as i128;
    if d == 0 {
        return true;
    }
    let n_i = n as i128;
    let mut dist: Vec<i128> = (0..n)
        .map(|x| {
            freqs
                .iter()
                .map(|&a| {
                    let v = ((a as u128 * x as u128) % n as u128) as u64;
                    v.min(n - v) as i128
                })
                .max()
                .unwrap_or(0)
        })
        .collect();
    dist.sort_unstable();
    let rho = R::new(*radius.numer() as i128, *radius.denom() as i128);
    // `#{x : dist_x / N <= t}`.
    let within = |t: R| dist.partition_point(|&k| R::new(k, n_i) <= t) as i128;
    let size = within(rho);
    if size == 0 {
        return false;
    }
    let delta = R::new(1, 100 * d);
    let hair = R::new(1, 1 << 40);
    let one = R::from_integer(1);
    let mut cs = vec![-delta, delta, R::from_integer(0)];
    let mut last = None;
    for &k in &dist {
        if last == Some(k) {
            continue;
        }
        last = Some(k);
        let b = R::new(k, n_i) / rho - one;
        if abs(b) <= delta + hair {
            cs.extend([b, b - hair, b + hair]);
        }
    }
    cs.into_iter().filter(|c| *c >= -delta && *c <= delta).all(|c| {
        let ratio = R::new(within(rho * (one + c)), size);
        let w = R::from_integer(100 * d) * abs(c);
        ratio <= one + w && ratio >= one - w
    })
}

fn abs(r: Ratio<i128>) -> Ratio<i128> {
    if r < Ratio::from_integer(0) { -r } else { r }
}

/// `|B(rho)| >= rho^d N`, in integers.
pub fn bohr_size_bound(card: usize, n: usize, d: usize, radius: Ratio<u64>) -> Option<bool> {
    let (p, q) = (*radius.numer() as u128, *radius.denom() as u128);
    let lhs = (card as u128).checked_mul(q.checked_pow(d as u32)?)?;
    let rhs = p.checked_pow(d as u32)?.checked_mul(n as u128)?;
    Some(lhs >= rhs)
}

/// A corner `(x, y), (x g, y), (x, g y)` (BMZ) or `(x, y g)` (naive) with `g != e`.
pub fn table_corner(t: &GroupTable, a: &SubsetInd, variant: CornerVariant) -> bool {
    let n = t.order();
    for x in 0..n {
        for y in 0..n {
            if !a.contains(x * n + y) {
                continue;
            }
            for g in (0..n).filter(|&g| g != t.identity()) {
                let third = match variant {
                    CornerVariant::Bmz => t.mul(g, y),
                    CornerVariant::Naive => t.mul(y, g),
                };
                if a.contains(t.mul(x, g) * n + y) && a.contains(x * n + third) {
                    return true;
                }
            }
        }
    }
    false
}

/// Some `u, v, w in A`, not all equal, with `u v = w^2`.
pub fn square_relation(t: &GroupTable, a: &SubsetInd) -> bool {
    let m = a.to_vec();
    m.iter().any(|&u| m.iter().any(|&v| m.iter().any(|&w| !(u == v && v == w) && t.mul(u, v) == t.mul(w, w))))
}

/// A monochromatic `(x,y,z), (x+d,y,z), (x,y+d,z), (x,y,z+d)` with `d != 0`
/// among colored cells of `G^3`.
pub fn mono_3d_corner(g: &Group, col: &Coloring) -> bool {
    let m = g.order();
    let cell = |x: usize, y: usize, z: usize| (x * m + y) * m + z;
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                let Some(c) = col.color(cell(x, y, z)) else { continue };
                for d in 1..m {
                    let same = |p: usize| col.color(p) == Some(c);
                    if same(cell(g.add(x, d), y, z)) && same(cell(x, g.add(y, d), z)) && same(cell(x, y, g.add(z, d))) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// `#{(x, y, d) : (x, y), (x + d, y), (x, y + d) in S}`, `d = 0` included.
pub fn corners_with_trivial(g: &Group, s: &SubsetInd) -> u64 {
    let m = g.order();
    let mut count = 0;
    for x in 0..m {
        for y in 0..m {
            if !s.contains(x * m + y) {
                continue;
            }
            for d in 0..m {
                if s.contains(g.add(x, d) * m + y) && s.contains(x * m + g.add(y, d)) {
                    count += 1;
                }
            }
        }
    }
    count
}
