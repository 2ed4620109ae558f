// SPDX-License-Identifier: MIT OR Apache-2.0
use corners_lab_core::bohr::BohrSet;
use corners_lab_core::group::{AffineSubspace, Group};
use corners_lab_core::setfun::{GridFunction, GroupFunction, SubsetInd};
use corners_lab_core::spread::*;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Max of `sum_{x in F, y in G} M(x,y)` over all pairs with size floors, by brute force.
fn brute_bilinear(m: &[f64], rows: usize, cols: usize, min_r: usize, min_c: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for fm in 0u32..1 << rows {
        if (fm.count_ones() as usize) < min_r {
            continue;
        }
        for gm in 0u32..1 << cols {
            if (gm.count_ones() as usize) < min_c {
                continue;
            }
            let mut s = 0.0;
            for x in (0..rows).filter(|x| fm >> x & 1 == 1) {
                for y in (0..cols).filter(|y| gm >> y & 1 == 1) {
                    s += m[x * cols + y];
                }
            }
            best = best.max(s);
        }
    }
    best
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SubsetInd {
    SubsetInd::from_indices(n, (0..n).filter(|_| rng.gen_bool(p))).unwrap()
}

/// Independent recheck of a rectangle counterexample against `T`.
fn recheck_comb(t: &SubsetInd, cols: usize, tau: f64, gamma: f64, f: &SubsetInd, g: &SubsetInd) -> f64 {
    let n = (t.domain()) as f64;
    let mut e = 0.0;
    for x in f.to_vec() {
        for y in g.to_vec() {
            if t.contains(x * cols + y) {
                e += 1.0;
            }
        }
    }
    tau * (f.card() * g.card()) as f64 / n + gamma - e / n
}

fn recheck(t: &SubsetInd, cols: usize, tau: f64, gamma: f64, cert: &SpreadCertificate) {
    if let Some(Counterexample::Rectangle { rows, cols: c }) = &cert.counterexample {
        let m = recheck_comb(t, cols, tau, gamma, rows, c);
        assert!(m <= cert.margin + 1e-9, "recomputed {m} vs stated {}", cert.margin);
        assert!(m < 0.0);
    }
}

#[test]
fn full_set_is_spread() {
    let t = SubsetInd::full(64);
    let c = is_comb_spread(&t, 8, 8, 1.0, 0.0, BilinearMode::Exact).unwrap();
    assert!(c.is_verified_spread());
    assert!(c.margin.abs() < 1e-12);
}

#[test]
fn product_set_is_not_spread() {
    let s: Vec<usize> = (0..8).filter(|x| x % 2 == 0).collect();
    let tp: Vec<usize> = (0..4).collect();
    let t = SubsetInd::from_indices(64, s.iter().flat_map(|&x| tp.iter().map(move |&y| x * 8 + y))).unwrap();
    let c = is_comb_spread(&t, 8, 8, 0.25, 0.01, BilinearMode::Exact).unwrap();
    assert_eq!(c.verdict, Verdict::NotSpread);
    match &c.counterexample {
        Some(Counterexample::Rectangle { rows, cols }) => {
            assert_eq!(rows.to_vec(), s);
            assert_eq!(cols.to_vec(), tp);
        }
        other => panic!("{other:?}"),
    }
    assert!((c.margin - (1.0 / 16.0 + 0.01 - 0.25)).abs() < 1e-12);
    recheck(&t, 8, 0.25, 0.01, &c);
}

#[test]
fn large_gamma_dominates() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let t = random_set(&mut rng, 64, 0.3);
        let c = is_comb_spread(&t, 8, 8, 0.3, 0.2, BilinearMode::Exact).unwrap();
        assert!(c.is_spread());
    }
}

#[test]
fn exact_search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (r, c) in [(5, 7), (7, 5), (6, 6), (4, 9)] {
        for _ in 0..5 {
            let tau = rng.gen_range(0.1..0.7);
            let t = random_set(&mut rng, r * c, tau);
            let m: Vec<f64> = (0..r * c).map(|i| if t.contains(i) { 1.0 - tau } else { -tau }).collect();
            let best = brute_bilinear(&m, r, c, 0, 0) / (r * c) as f64;
            let cert = is_comb_spread(&t, r, c, tau, 0.0, BilinearMode::Exact).unwrap();
            assert!((cert.margin + best).abs() < 1e-12, "{r}x{c}");
            recheck(&t, c, tau, 0.0, &cert);
        }
    }
}

#[test]
fn fractional_functions_never_beat_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let (r, c) = (6, 6);
    let t = random_set(&mut rng, 36, 0.4);
    let tau = 0.35;
    let cert = is_comb_spread(&t, r, c, tau, 0.0, BilinearMode::Exact).unwrap();
    let vertex = -cert.margin;
    for _ in 0..2000 {
        let f: Vec<f64> = (0..r).map(|_| rng.gen()).collect();
        let g: Vec<f64> = (0..c).map(|_| rng.gen()).collect();
        let mut v = 0.0;
        for x in 0..r {
            for y in 0..c {
                let tv = if t.contains(x * c + y) { 1.0 } else { 0.0 };
                v += f[x] * g[y] * (tv - tau);
            }
        }
        assert!(v / 36.0 <= vertex + 1e-12);
    }
}

#[test]
fn alternating_is_sound_and_finds_planted_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (r, c) = (40, 40);
    let mut t = random_set(&mut rng, r * c, 0.2);
    for x in 0..10 {
        for y in 0..10 {
            t.insert(x * c + y);
        }
    }
    let cert = is_comb_spread(&t, r, c, 0.2, 0.01, BilinearMode::alternating()).unwrap();
    assert_eq!(cert.verdict, Verdict::NotSpread);
    assert_eq!(cert.coverage, Coverage::Heuristic { restarts: DEFAULT_RESTARTS });
    recheck(&t, c, 0.2, 0.01, &cert);
    assert!(is_comb_spread(&t, r, c, 0.2, 0.01, BilinearMode::Exact).is_err());
}

#[test]
fn alternating_spread_is_unverified() {
    let t = SubsetInd::full(30 * 30);
    let cert = is_comb_spread(&t, 30, 30, 1.0, 0.0, BilinearMode::alternating()).unwrap();
    assert!(cert.is_spread());
    assert!(!cert.is_verified_spread());
}

/// Every affine subspace of `W` with codimension at most `r`, found by
/// testing each candidate point set for affine closure.
fn brute_affine_max(x: &SubsetInd, w: &AffineSubspace, r: usize) -> f64 {
    let pts = w.members();
    let m = pts.len();
    let mut best: f64 = 0.0;
    for sub in 1u64..1 << m {
        let size = sub.count_ones() as usize;
        if !size.is_power_of_two() || size * (1 << r) < m {
            continue;
        }
        let s: Vec<u64> = (0..m).filter(|i| sub >> i & 1 == 1).map(|i| pts[i]).collect();
        let set: std::collections::HashSet<u64> = s.iter().copied().collect();
        let closed = s.iter().all(|&a| s.iter().all(|&b| s.iter().all(|&c| set.contains(&(a ^ b ^ c)))));
        if !closed {
            continue;
        }
        let k = s.iter().filter(|&&p| x.contains(p as usize)).count();
        best = best.max(k as f64 / size as f64);
    }
    best
}

#[test]
fn alg_examples() {
    let w = AffineSubspace::full(4);
    let all = SubsetInd::full(16);
    for r in 0..=3 {
        assert!(is_alg_spread_f2(&all, &w, r, 0.1, AlgMode::Exact).unwrap().is_verified_spread());
    }
    let half = SubsetInd::from_indices(16, (0..16).filter(|x| x & 1 == 0)).unwrap();
    let c = is_alg_spread_f2(&half, &w, 1, 0.5, AlgMode::Exact).unwrap();
    assert_eq!(c.verdict, Verdict::NotSpread);
    let Some(Counterexample::Subspace(sub)) = &c.counterexample else { panic!() };
    assert_eq!(sub.size(), 8);
    assert!((alg_margin(&half, &w, 0.5, sub).unwrap() - c.margin).abs() < 1e-12);
    assert!((c.margin - (0.75 - 1.0)).abs() < 1e-12);
}

#[test]
fn alg_matches_affine_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    // Proper affine W of dimension 4 inside F2^6.
    let w = AffineSubspace::new(6, &[0b000011, 0b000101, 0b011000, 0b100001], 0b010010).unwrap();
    let pts = w.members();
    for r in 1..=2 {
        for _ in 0..6 {
            let x = SubsetInd::from_indices(64, pts.iter().filter(|_| rng.gen_bool(0.5)).map(|&p| p as usize)).unwrap();
            let cert = is_alg_spread_f2(&x, &w, r, 0.3, AlgMode::Exact).unwrap();
            let best = brute_affine_max(&x, &w, r);
            let expect = 1.3 * x.card() as f64 / 16.0 - best;
            assert!((cert.margin - expect).abs() < 1e-12, "r={r}: {} vs {expect}", cert.margin);
        }
    }
}

#[test]
fn alg_random_half_density_in_f2_6() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let w = AffineSubspace::full(6);
    for _ in 0..5 {
        let x = random_set(&mut rng, 64, 0.5);
        let cert = is_alg_spread_f2(&x, &w, 1, 0.3, AlgMode::Exact).unwrap();
        let mut best: f64 = 0.0;
        for a in 1u32..64 {
            for b in 0..2 {
                let k = (0..64u32).filter(|&p| (p & a).count_ones() % 2 == b && x.contains(p as usize)).count();
                best = best.max(k as f64 / 32.0);
            }
        }
        let expect = 1.3 * x.density() - best;
        assert!((cert.margin - expect).abs() < 1e-12);
        assert_eq!(cert.is_spread(), expect >= -1e-12);
        let sampled = is_alg_spread_f2(&x, &w, 1, 0.3, AlgMode::Sampled { samples: 500, seed: 3 }).unwrap();
        assert!(sampled.margin >= cert.margin - 1e-12);
        if !sampled.is_spread() {
            let Some(Counterexample::Subspace(s)) = &sampled.counterexample else { panic!() };
            assert!((alg_margin(&x, &w, 0.3, s).unwrap() - sampled.margin).abs() < 1e-12);
        }
    }
}

#[test]
fn alg_budget_is_enforced() {
    let w = AffineSubspace::full(16);
    let x = SubsetInd::full(1 << 16);
    assert!(matches!(is_alg_spread_f2(&x, &w, 3, 0.1, AlgMode::Exact), Err(corners_lab_core::Error::Budget { .. })));
}

#[test]
fn asym_examples() {
    let f = GridFunction::constant(6, 6, 0.4).unwrap();
    for (s, t) in [(0.0, 0.0), (1.0, 2.0), (2.5, 0.5)] {
        assert!(is_asym_spread(&f, s, t, 0.0, BilinearMode::Exact).unwrap().is_spread());
    }
    // Planted 3 x 2 block of double density in an 12 x 8 grid at s = 2, t = 2.
    let mut data = vec![0.25; 96];
    for x in 0..3 {
        for y in 0..2 {
            data[x * 8 + y] = 0.5;
        }
    }
    let f = GridFunction::new(12, 8, data).unwrap();
    let cert = is_asym_spread(&f, 2.0, 2.0, 0.5, BilinearMode::Exact).unwrap();
    assert_eq!(cert.verdict, Verdict::NotSpread);
    let Some(Counterexample::Rectangle { rows, cols }) = &cert.counterexample else { panic!() };
    assert_eq!(rows.to_vec(), vec![0, 1, 2]);
    assert_eq!(cols.to_vec(), vec![0, 1]);
    assert!((asym_margin(&f, 0.5, rows, cols).unwrap() - cert.margin).abs() < 1e-12);
    // With s = t = 0 only the full rectangle is admissible.
    let full = is_asym_spread(&f, 0.0, 0.0, 0.0, BilinearMode::Exact).unwrap();
    assert!(full.is_spread());
    assert!(full.margin.abs() < 1e-12);
}

#[test]
fn asym_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for (r, c, s, t) in [(6, 5, 1.0, 2.0), (5, 7, 2.0, 0.5), (6, 6, 3.0, 3.0)] {
        let data: Vec<f64> = (0..r * c).map(|_| rng.gen()).collect();
        let f = GridFunction::new(r, c, data).unwrap();
        let eps = 0.1;
        let kappa = (1.0 + eps) * f.mean();
        let m: Vec<f64> = f.data().iter().map(|v| v - kappa).collect();
        let best = brute_bilinear(&m, r, c, min_card(r, s), min_card(c, t)) / (r * c) as f64;
        let cert = is_asym_spread(&f, s, t, eps, BilinearMode::Exact).unwrap();
        assert!((cert.margin + best).abs() < 1e-12);
    }
}

#[test]
fn extract_examples() {
    let w = AffineSubspace::full(6);
    let all = SubsetInd::full(64);
    let e = spread_extract_f2(&all, &w, 1, 0.5).unwrap();
    assert!(e.trace.is_empty());
    assert_eq!(e.subspace, w);
    let codim2 = SubsetInd::from_indices(64, (0..64).filter(|x| x & 0b11 == 0b01)).unwrap();
    let e = spread_extract_f2(&codim2, &w, 1, 0.5).unwrap();
    assert!(e.trace.len() <= 2);
    assert_eq!(e.set.card(), e.subspace.size());
    assert!(e.certificate.is_verified_spread());
    assert!(spread_extract_f2(&SubsetInd::empty(64), &w, 1, 0.5).is_err());
}

/// Quadratic bent set `{x : x0 x1 + x2 x3 + ... = 0}` in `F_2^n`, `n` even.
fn bent(n: usize) -> SubsetInd {
    SubsetInd::from_indices(
        1 << n,
        (0..1usize << n).filter(|x| (0..n / 2).map(|i| (x >> (2 * i) & 1) & (x >> (2 * i + 1) & 1)).sum::<usize>() % 2 == 0),
    )
    .unwrap()
}

/// Smallest `eps` with `D` `(1, eps/8)`-algebraically spread in `F_2^n`.
fn spread_eps(d: &SubsetInd, n: usize) -> f64 {
    let w = AffineSubspace::full(n);
    let c = is_alg_spread_f2(d, &w, 1, 0.0, AlgMode::Exact).unwrap();
    let tau = d.density();
    8.0 * (-c.margin).max(0.0) / tau
}

fn sum_set(d: &SubsetInd, n: usize) -> SubsetInd {
    let size = 1usize << n;
    SubsetInd::from_indices(size * size, (0..size * size).filter(|i| d.contains((i / size) ^ (i % size)))).unwrap()
}

#[test]
fn bridge_exact_in_f2_4() {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let mut tested = 0;
    let mut sets = vec![bent(4)];
    for _ in 0..40 {
        let p = rng.gen_range(0.2..0.9);
        sets.push(random_set(&mut rng, 16, p));
    }
    for d in sets.into_iter().filter(|d| !d.is_empty()) {
        let eps = spread_eps(&d, 4).max(1e-3);
        let tau = d.density();
        let t = sum_set(&d, 4);
        let gamma = eps * tau / 256.0;
        let cert = is_comb_spread(&t, 16, 16, (1.0 + eps) * tau, gamma, BilinearMode::Exact).unwrap();
        assert!(cert.is_verified_spread(), "tau={tau} eps={eps} margin={}", cert.margin);
        tested += 1;
    }
    assert_eq!(tested, 41);
}

#[test]
fn bridge_heuristic_in_f2_6_and_f2_8() {
    let mut rng = ChaCha8Rng::seed_from_u64(49);
    for n in [6, 8] {
        let mut sets = vec![bent(n)];
        for _ in 0..3 {
            sets.push(random_set(&mut rng, 1 << n, 0.5));
        }
        for d in sets {
            let eps = spread_eps(&d, n).max(1e-3);
            let tau = d.density();
            let t = sum_set(&d, n);
            let size = 1 << n;
            let mode = BilinearMode::Alternating { restarts: 16, seed: 5 };
            let cert = is_comb_spread(&t, size, size, (1.0 + eps) * tau, eps * tau / 256.0, mode).unwrap();
            assert!(cert.is_spread(), "n={n} eps={eps}");
        }
    }
}

#[test]
fn bent_sets_are_spread_at_half() {
    assert!(spread_eps(&bent(8), 8) <= 0.5);
}

fn cyclic_bohr(n: u64, freq: u64, radius: Ratio<u64>) -> BohrSet {
    BohrSet::from_freqs(Group::cyclic(n).unwrap(), &[vec![freq]], radius).unwrap()
}

#[test]
fn l1_examples() {
    let g = Group::cyclic(64).unwrap();
    let b1 = cyclic_bohr(64, 1, Ratio::new(1, 4));
    let b2 = cyclic_bohr(64, 1, Ratio::new(1, 32));
    let c = GroupFunction::new(g.clone(), vec![0.3; 64]).unwrap();
    let cert = is_l1_spread(&c, &b1, &b2, 0.01).unwrap();
    assert!(cert.is_spread());
    assert!((cert.margin - 0.003).abs() < 1e-12);
    // A chunk of two B2-widths inside B1.
    let chunk = SubsetInd::from_indices(64, (0..6).collect::<Vec<_>>()).unwrap();
    let f = GroupFunction::indicator(g.clone(), &chunk).unwrap();
    let cert = is_l1_spread(&f, &b1, &b2, 0.1).unwrap();
    assert_eq!(cert.verdict, Verdict::NotSpread);
    let (dev, mean) = l1_deviation(&f, &b1, &b2).unwrap();
    assert!((cert.margin - (0.1 * mean - dev)).abs() < 1e-15);
    let loose = is_l1_spread(&f, &b1, &b2, 2.0).unwrap();
    assert_eq!(loose.is_spread(), dev <= 2.0 * mean);
    let zero = GroupFunction::new(g, vec![0.0; 64]).unwrap();
    assert!(is_l1_spread(&zero, &b1, &b2, 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extract_trace_increases(seed in any::<u64>(), p in 0.1f64..0.6, eps in 0.2f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_set(&mut rng, 64, p);
        prop_assume!(!x.is_empty());
        let w = AffineSubspace::full(6);
        let e = spread_extract_f2(&x, &w, 1, eps).unwrap();
        let delta = x.density();
        for s in &e.trace {
            prop_assert!(s.density_after > (1.0 + eps) * s.density_before - 1e-12);
        }
        let bound = (1.0 / delta).ln() / (1.0 + eps).ln() + 1.0;
        prop_assert!(e.trace.len() as f64 <= bound);
        prop_assert!(e.subspace.codim() <= e.trace.len());
        prop_assert!(e.set.card() as f64 / e.subspace.size() as f64 >= delta - 1e-12);
        prop_assert!(e.certificate.is_verified_spread());
    }

    #[test]
    fn comb_counterexamples_recheck(seed in any::<u64>(), tau in 0.05f64..0.8, gamma in 0.0f64..0.05) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_set(&mut rng, 8 * 10, tau);
        let cert = is_comb_spread(&t, 8, 10, tau, gamma, BilinearMode::Exact).unwrap();
        recheck(&t, 10, tau, gamma, &cert);
        let heur = is_comb_spread(&t, 8, 10, tau, gamma, BilinearMode::Alternating { restarts: 8, seed }).unwrap();
        prop_assert!(heur.margin >= cert.margin - 1e-12);
        recheck(&t, 10, tau, gamma, &heur);
    }
}
