// SPDX-License-Identifier: MIT OR Apache-2.0
use corners_lab_core::corners::*;
use corners_lab_core::group::{Group, GroupTable};
use corners_lab_core::setfun::{GridFunction, SubsetInd};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SubsetInd {
    SubsetInd::from_bools(&(0..n).map(|_| rng.gen_bool(p)).collect::<Vec<_>>())
}

fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
    GridFunction::new(n, n, (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

/// Independent corner oracle working on coordinates rather than flat indices.
fn oracle_count(g: &Group, a: &SubsetInd) -> u64 {
    let n = g.order();
    let mut c = 0;
    for x in 0..n {
        for y in 0..n {
            for d in 1..n {
                let ex = g.elem_add(&g.element(x), &g.element(d)).unwrap();
                let ey = g.elem_add(&g.element(y), &g.element(d)).unwrap();
                let (xd, yd) = (g.index(&ex.coords).unwrap(), g.index(&ey.coords).unwrap());
                if a.contains(x * n + y) && a.contains(xd * n + y) && a.contains(x * n + yd) {
                    c += 1;
                }
            }
        }
    }
    c
}

/// Largest 3-AP-free subset of {0..n-1} by branch and bound.
fn r3(n: usize) -> usize {
    fn rec(v: usize, n: usize, chosen: &mut Vec<usize>, best: &mut usize) {
        if chosen.len() + (n - v) <= *best {
            return;
        }
        if v == n {
            *best = chosen.len();
            return;
        }
        let ok = chosen.iter().all(|&a| {
            let mid2 = a + v;
            mid2 % 2 != 0 || !chosen.contains(&(mid2 / 2))
        });
        if ok {
            chosen.push(v);
            rec(v + 1, n, chosen, best);
            chosen.pop();
        }
        rec(v + 1, n, chosen, best);
    }
    let mut best = 0;
    rec(0, n, &mut Vec::new(), &mut best);
    best
}

#[test]
fn r3_oracle_frozen() {
    let want = [1, 2, 2, 3, 4, 4, 4, 4, 5, 5, 6, 6, 7, 8, 8, 8, 8, 8, 8, 9];
    let got: Vec<usize> = (1..=20).map(r3).collect();
    assert_eq!(got, want);
}

#[test]
fn phi_fast_matches_naive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for desc in ["Z5", "Z6", "F2^3", "Z2xZ3", "Z4xZ2", "Z7"] {
        let g = Group::parse(desc).unwrap();
        let n = g.order();
        for _ in 0..5 {
            let (a, b, c) = (random_grid(&mut rng, n), random_grid(&mut rng, n), random_grid(&mut rng, n));
            let (p, q) = (phi_naive(&g, &a, &b, &c).unwrap(), phi_spectral(&g, &a, &b, &c).unwrap());
            assert!((p - q).abs() < 1e-12, "{desc}: {p} vs {q}");
            let (p, q) = (
                phi_corner_naive(&g, &a, &b, &c).unwrap(),
                phi_corner_spectral(&g, &a, &b, &c).unwrap(),
            );
            assert!((p - q).abs() < 1e-12, "{desc}: {p} vs {q}");
        }
    }
}

#[test]
fn phi_forms_agree_in_characteristic_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=4 {
        let g = Group::f2(n).unwrap();
        let a = random_set(&mut rng, g.order() * g.order(), 0.5);
        let f = GridFunction::from_subset(g.order(), g.order(), &a).unwrap();
        let p = phi_naive(&g, &f, &f, &f).unwrap();
        let q = phi_corner_naive(&g, &f, &f, &f).unwrap();
        assert!((p - q).abs() < 1e-14);
    }
}

#[test]
fn phi_identity_and_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for desc in ["Z3", "Z8", "Z9", "Z2xZ4", "F2^3", "Z16", "Z5xZ5"] {
        let g = Group::parse(desc).unwrap();
        let n = g.order();
        for _ in 0..4 {
            let p = rng.gen_range(0.05..0.6);
            let a = random_set(&mut rng, n * n, p);
            let rep = count_corners(&g, &a).unwrap();
            assert_eq!(rep.count, oracle_count(&g, &a), "{desc}");
            assert_eq!(rep.trivial, a.card() as u64);
            let f = GridFunction::from_subset(n, n, &a).unwrap();
            let phi = phi_corner_naive(&g, &f, &f, &f).unwrap();
            let total = (phi * (n as f64).powi(3)).round() as u64;
            assert_eq!(total - a.card() as u64, rep.count);
            assert_eq!(count_corners_spectral(&g, &a).unwrap(), rep.count);
            if g.factors().len() == 1 {
                assert_eq!(count_corners_bitset(&g, &a).unwrap(), rep.count);
            }
            if let Some((x, y, d)) = rep.witness {
                assert!(a.contains(x * n + y) && a.contains(g.add(x, d) * n + y) && a.contains(x * n + g.add(y, d)));
                assert_eq!(first_corner(&g, &a).unwrap(), rep.witness);
            }
        }
    }
}

#[test]
fn behrend_is_apfree_and_dense_enough() {
    for n in 1..=20 {
        let b = behrend_apfree(n).unwrap();
        assert!(find_progression(&b).is_none());
        assert!(2 * b.card() >= r3(n), "N={n}: {} vs {}", b.card(), r3(n));
    }
    for n in (21..=400).chain([511, 1000, 2048, 4096]) {
        let b = behrend_apfree(n).unwrap();
        assert!(find_progression(&b).is_none(), "N={n}");
    }
    let (shell, (k, d, _)) = behrend_shell(4096).unwrap();
    assert!(find_progression(&shell).is_none());
    assert!(k >= 2 && d >= 1);
}

#[test]
fn lifts_are_corner_free() {
    for n in 1..=40 {
        let b = behrend_apfree(n).unwrap();
        let a = cornerfree_from_apfree(&b).unwrap();
        assert_eq!(count_corners_grid(n, &a).unwrap().0, 0, "N={n}");
        let (g, img) = embed_grid_cyclic(n, &a).unwrap();
        if n <= 16 {
            assert_eq!(count_corners(&g, &img).unwrap().count, 0);
        }
    }
    let b = SubsetInd::from_indices(4, [0, 1]).unwrap();
    let a = cornerfree_from_apfree(&b).unwrap();
    assert_eq!(count_corners_grid(4, &a).unwrap().0, 0);
}

#[test]
fn grid_corners_count_both_signs() {
    // (1,1), (0,1), (1,0) is a corner with d = -1.
    let a = SubsetInd::from_indices(4, [3, 1, 2]).unwrap();
    let (c, w) = count_corners_grid(2, &a).unwrap();
    assert_eq!(c, 1);
    assert_eq!(w, Some((1, 1, -1)));
}

fn tables() -> Vec<GroupTable> {
    let mut out = vec![
        GroupTable::cyclic(1),
        GroupTable::cyclic(2),
        GroupTable::cyclic(3),
        GroupTable::cyclic(4),
        GroupTable::dihedral(3).unwrap(),
        GroupTable::quaternion(),
        GroupTable::dihedral(4).unwrap(),
        GroupTable::cyclic(6),
    ];
    out.push(GroupTable::cyclic(2).direct_product(&GroupTable::cyclic(2)).unwrap());
    out.push(GroupTable::dihedral(6).unwrap());
    out
}

#[test]
fn bmz_scan_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for t in tables() {
        let n = t.order();
        for _ in 0..10 {
            let a = random_set(&mut rng, n * n, 0.5);
            for variant in [CornerVariant::Bmz, CornerVariant::Naive] {
                let mut oracle = false;
                for x in 0..n {
                    for y in 0..n {
                        for g in (0..n).filter(|&g| g != t.identity()) {
                            let third = if variant == CornerVariant::Bmz { t.mul(g, y) } else { t.mul(y, g) };
                            oracle |= a.contains(x * n + y) && a.contains(t.mul(x, g) * n + y) && a.contains(x * n + third);
                        }
                    }
                }
                assert_eq!(find_bmz_corner(&t, &a, variant).unwrap().is_some(), oracle);
            }
        }
        if n > 1 {
            assert!(find_bmz_corner(&t, &SubsetInd::full(n * n), CornerVariant::Bmz).unwrap().is_some());
        }
        let single = SubsetInd::from_indices(n * n, [0]).unwrap();
        assert!(find_bmz_corner(&t, &single, CornerVariant::Naive).unwrap().is_none());
    }
}

#[test]
fn roth_lift_equivalence() {
    for t in tables().into_iter().filter(|t| t.order() <= 12) {
        let n = t.order();
        let subsets: Box<dyn Iterator<Item = u64>> = if n <= 8 {
            Box::new(0..1u64 << n)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(15);
            Box::new((0..300).map(move |_| rng.gen::<u64>() & ((1 << n) - 1)))
        };
        for mask in subsets {
            let a = SubsetInd::from_indices(n, (0..n).filter(|i| mask >> i & 1 == 1)).unwrap();
            let s = roth_nonabelian_lift(&t, &a).unwrap();
            let corner = find_bmz_corner(&t, &s, CornerVariant::Naive).unwrap().is_some();
            assert_eq!(corner, find_square_relation(&t, &a).is_some(), "order {n}, mask {mask:#b}");
        }
    }
}

#[test]
fn projections_of_bmz_free_sets_are_corner_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for t in tables().into_iter().filter(|t| t.order() <= 8) {
        let n = t.order();
        let h = t.largest_abelian_subgroup().unwrap();
        let ht = t.subgroup_table(&h).unwrap();
        for _ in 0..20 {
            let mut a = random_set(&mut rng, n * n, 0.4);
            while let Some((x, y, _)) = find_bmz_corner(&t, &a, CornerVariant::Bmz).unwrap() {
                a.remove(x * n + y);
            }
            for x in 0..n {
                for y in 0..n {
                    let p = projection_set(&t, &a, &h, x, y, CornerVariant::Bmz).unwrap();
                    assert!(find_bmz_corner(&ht, &p, CornerVariant::Naive).unwrap().is_none());
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn count_matches_oracle_on_small_cyclic(n in 2u64..9, bits in proptest::collection::vec(any::<bool>(), 64)) {
        let g = Group::cyclic(n).unwrap();
        let m = g.order();
        let a = SubsetInd::from_bools(&bits[..m * m]);
        prop_assert_eq!(count_corners(&g, &a).unwrap().count, oracle_count(&g, &a));
    }
}
