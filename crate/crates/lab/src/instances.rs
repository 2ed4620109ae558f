// SPDX-License-Identifier: MIT OR Apache-2.0
//! Seeded random instance generators shared by the suites and tests.

use corners_lab_core::group::GroupTable;
use corners_lab_core::setfun::{GridFunction, SubsetInd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each point independently with probability `p`.
pub fn random_subset<R: Rng>(rng: &mut R, n: usize, p: f64) -> SubsetInd {
    SubsetInd::from_bools(&(0..n).map(|_| rng.gen_bool(p)).collect::<Vec<_>>())
}

/// Uniform entries in `[lo, hi)`.
pub fn random_grid<R: Rng>(rng: &mut R, rows: usize, cols: usize, lo: f64, hi: f64) -> GridFunction {
    GridFunction::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect()).expect("values in range")
}

/// A `block x block` square of density `dense` on a background of density `bg`.
pub fn planted<R: Rng>(rng: &mut R, n: usize, block: usize, bg: f64, dense: f64) -> GridFunction {
    let r0 = rng.gen_range(0..=n - block);
    let c0 = rng.gen_range(0..=n - block);
    let data = (0..n * n)
        .map(|i| {
            let (x, y) = (i / n, i % n);
            let inside = (r0..r0 + block).contains(&x) && (c0..c0 + block).contains(&y);
            let p = if inside { dense } else { bg };
            if rng.gen_bool(p) { 1.0 } else { 0.0 }
        })
        .collect();
    GridFunction::new(n, n, data).expect("0/1 values")
}

/// A random majorant `T` and the part of it inside a random half-size square.
pub fn planted_majorant<R: Rng>(rng: &mut R, n: usize, p: f64) -> (SubsetInd, GridFunction) {
    let t = random_subset(rng, n * n, p);
    let h = n / 2;
    let r0 = rng.gen_range(0..h);
    let c0 = rng.gen_range(0..h);
    let data = (0..n * n)
        .map(|i| {
            let (x, y) = (i / n, i % n);
            let inside = (r0..r0 + h).contains(&x) && (c0..c0 + h).contains(&y);
            if inside && t.contains(i) { 1.0 } else { 0.0 }
        })
        .collect();
    (t, GridFunction::new(n, n, data).expect("0/1 values"))
}

fn perm_table(perms: &[Vec<usize>]) -> GroupTable {
    let n = perms.len();
    let index = |p: &Vec<usize>| perms.iter().position(|q| q == p).expect("closed under composition");
    let mut mul = Vec::with_capacity(n * n);
    for a in perms {
        for b in perms {
            let ab: Vec<usize> = b.iter().map(|&i| a[i]).collect();
            mul.push(index(&ab) as u32);
        }
    }
    GroupTable::from_mul(n, mul).expect("permutation group")
}

/// The alternating group on four points.
pub fn alternating4() -> GroupTable {
    let mut even = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = vec![a, b, c, d];
                    let mut seen = [false; 4];
                    if !p.iter().all(|&v| !std::mem::replace(&mut seen[v], true)) {
                        continue;
                    }
                    let inversions = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
                    if inversions % 2 == 0 {
                        even.push(p);
                    }
                }
            }
        }
    }
    perm_table(&even)
}

/// The dicyclic group of order 12: `<a, x | a^6, x^2 = a^3, x a x^-1 = a^-1>`.
pub fn dicyclic12() -> GroupTable {
    // Element a^i x^j is stored at 2 i + j.
    let mut mul = Vec::with_capacity(144);
    for p in 0..12usize {
        for q in 0..12usize {
            let (i, j, k, l) = (p / 2, p % 2, q / 2, q % 2);
            // x a^k = a^-k x.
            let k2 = if j == 1 { (6 - k) % 6 } else { k };
            let (mut e, f) = ((i + k2) % 6, j + l);
            let f = if f == 2 {
                e = (e + 3) % 6;
                0
            } else {
                f
            };
            mul.push((2 * e + f) as u32);
        }
    }
    GroupTable::from_mul(12, mul).expect("dicyclic group")
}

/// One table per isomorphism class of groups of order at most `max` (at most 12).
pub fn small_tables(max: usize) -> Vec<(String, GroupTable)> {
    let z = GroupTable::cyclic;
    let mut out: Vec<(String, GroupTable)> = Vec::new();
    for n in 1..=max.min(12) {
        out.push((format!("Z{n}"), z(n)));
    }
    let mut extra = vec![
        ("Z2xZ2", z(2).direct_product(&z(2)).unwrap()),
        ("S3", GroupTable::dihedral(3).unwrap()),
        ("Z2xZ4", z(2).direct_product(&z(4)).unwrap()),
        ("Z2xZ2xZ2", z(2).direct_product(&z(2)).unwrap().direct_product(&z(2)).unwrap()),
        ("D4", GroupTable::dihedral(4).unwrap()),
        ("Q8", GroupTable::quaternion()),
        ("Z3xZ3", z(3).direct_product(&z(3)).unwrap()),
        ("D5", GroupTable::dihedral(5).unwrap()),
        ("Z2xZ6", z(2).direct_product(&z(6)).unwrap()),
        ("D6", GroupTable::dihedral(6).unwrap()),
        ("A4", alternating4()),
        ("Dic3", dicyclic12()),
    ];
    extra.retain(|(_, t)| t.order() <= max);
    out.extend(extra.into_iter().map(|(s, t)| (s.to_string(), t)));
    out
}
