// SPDX-License-Identifier: MIT OR Apache-2.0
use corners_lab_core::bohr::*;
use corners_lab_core::group::{Character, Group};
use corners_lab_core::setfun::{GroupFunction, SubsetInd};
use corners_lab_core::spread::{Counterexample, Coverage, Verdict};
use num_rational::Ratio;
use num_traits::Signed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type R = Ratio<i128>;

fn bohr(n: u64, freqs: &[u64], radius: Ratio<u64>) -> BohrSet {
    let f: Vec<Vec<u64>> = freqs.iter().map(|&a| vec![a]).collect();
    BohrSet::from_freqs(Group::cyclic(n).unwrap(), &f, radius).unwrap()
}

/// `max_i ||a_i x / n||` as an exact rational.
fn dist(n: u64, freqs: &[u64], x: u64) -> R {
    freqs
        .iter()
        .map(|&a| {
            let v = (a * x) % n;
            R::new(v.min(n - v) as i128, n as i128)
        })
        .max()
        .unwrap_or_else(|| R::from_integer(0))
}

fn count_within(n: u64, freqs: &[u64], rho: R) -> usize {
    (0..n).filter(|&x| dist(n, freqs, x) <= rho).count()
}

/// Regularity by direct recounting at every breakpoint and a hair to either side.
fn oracle_regular(n: u64, freqs: &[u64], radius: Ratio<u64>) -> bool {
    let d = freqs.len() as i128;
    if d == 0 {
        return true;
    }
    let rho = R::new(*radius.numer() as i128, *radius.denom() as i128);
    let delta = R::new(1, 100 * d);
    let size = count_within(n, freqs, rho) as i128;
    let hair = R::new(1, 1_000_000_000_000);
    let mut cs = vec![-delta, delta, R::from_integer(0)];
    for x in 0..n {
        let b = dist(n, freqs, x) / rho - R::from_integer(1);
        cs.extend([b, b - hair, b + hair]);
    }
    cs.into_iter().filter(|c| c.abs() <= delta).all(|c| {
        let ratio = R::new(count_within(n, freqs, rho * (R::from_integer(1) + c)) as i128, size);
        let w = R::from_integer(100 * d) * c.abs();
        ratio <= R::from_integer(1) + w && ratio >= R::from_integer(1) - w
    })
}

#[test]
fn members_small_cyclic() {
    let b = bohr(12, &[1], Ratio::new(1, 5));
    assert_eq!(b.members().to_vec(), vec![0, 1, 2, 10, 11]);
    assert!(b.card() as f64 >= b.size_lower_bound());
    for radius in [Ratio::new(1, 2), Ratio::new(3, 5), Ratio::new(1, 1)] {
        assert_eq!(bohr(12, &[1], radius).card(), 12);
    }
}

#[test]
fn half_radius_with_involution_is_irregular() {
    // 6 has distance exactly 1/2 and drops out for every c < 0.
    let b = bohr(12, &[1], Ratio::new(1, 2));
    assert!(!b.is_regular().regular);
    assert!(!oracle_regular(12, &[1], Ratio::new(1, 2)));
    assert!(bohr(12, &[1], Ratio::new(3, 5)).is_regular().regular);
}

#[test]
fn threshold_crossing_is_irregular() {
    // 10/100 sits just outside radius 999/10000 and enters at c ~ 0.001.
    let b = bohr(100, &[1], Ratio::new(999, 10000));
    let rep = b.is_regular();
    assert!(!rep.regular);
    assert!(rep.worst_slack < 0.0);
    assert!(!oracle_regular(100, &[1], Ratio::new(999, 10000)));
    assert!(!b.regularity_on_grid(10_001).regular);
}

#[test]
fn find_regular_dilate_examples() {
    for (n, freqs, radius) in [(101, vec![1], Ratio::new(3, 10)), (64, vec![1, 5], Ratio::new(1, 4)), (1024, vec![17, 129], Ratio::new(3, 64))] {
        let b = bohr(n, &freqs, radius);
        let reg = b.find_regular_dilate().unwrap();
        let alpha = reg.radius() / radius;
        assert!(alpha >= Ratio::new(1, 2) && alpha <= Ratio::new(1, 1), "{alpha}");
        assert!(reg.is_regular().regular);
        assert!(oracle_regular(n, &freqs, reg.radius()));
        assert_eq!(reg.freqs(), b.freqs());
    }
}

#[test]
fn shift_invariance_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let lam = bohr(1024, &[3], Ratio::new(2, 5)).find_regular_dilate().unwrap();
    let small = lam.dilate(Ratio::new(1, 200)).unwrap();
    assert!(small.card() > 1);
    let g = lam.group().clone();
    let c = Ratio::new(1i64, 200);
    let growth = 2.0 * (lam.dilate_card(c) - lam.card()) as f64 / lam.card() as f64;
    for _ in 0..5 {
        let vals: Vec<f64> = (0..1024).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let f = GroupFunction::new(g.clone(), vals.clone()).unwrap();
        let rep = shift_invariance_error(&f, &lam, &small).unwrap();
        assert!(rep.error <= rep.bound);
        assert!(rep.error <= growth + 1e-12);
        let members = lam.members().to_vec();
        let avg = |s: usize| members.iter().map(|&x| vals[(x + s) % 1024]).sum::<f64>() / members.len() as f64;
        let brute = small.members().iter().map(|s| (avg(0) - avg(s)).abs()).fold(0.0, f64::max);
        assert!((brute - rep.error).abs() < 1e-12);
    }
    let f = GroupFunction::new(g, vec![0.7; 1024]).unwrap();
    assert!(shift_invariance_error(&f, &lam, &small).unwrap().error < 1e-12);
    assert!(shift_invariance_error(&f, &lam, &lam.dilate(Ratio::new(1, 2)).unwrap()).is_err());
}

#[test]
fn sequences() {
    let b1 = bohr(1024, &[1], Ratio::new(1, 2));
    let one = make_sequence(&b1, Ratio::new(1, 4), 1, Exactness::Exact).unwrap();
    assert_eq!(one.sets.len(), 1);
    assert!(one.verify());
    let seq = make_sequence(&b1, Ratio::new(1, 4), 3, Exactness::Exact).unwrap();
    assert_eq!(seq.sets.len(), 3);
    assert!(seq.verify());
    for r in seq.ratios() {
        assert!(r >= Ratio::new(1, 8) && r <= Ratio::new(1, 4));
    }
    for w in seq.sets.windows(2) {
        assert!(w[1].members().iter().all(|x| w[0].contains(x)));
    }
    assert_eq!(seq.degenerate_from, None);
    let tiny = make_sequence(&b1, Ratio::new(1, 1000), 3, Exactness::Small).unwrap();
    assert_eq!(tiny.degenerate_from, Some(1));
    assert_eq!(tiny.sets[1].card(), 1);
    assert!(make_sequence(&b1, Ratio::new(1, 1), 3, Exactness::Small).is_err());
}

fn planted() -> (BohrSet, SubsetInd, PoolSearch) {
    let g = Group::cyclic(1024).unwrap();
    let b = bohr(1024, &[1], Ratio::new(1, 4)).find_regular_dilate().unwrap();
    let extra = Character::new(&g, vec![37]).unwrap();
    let x = b.with_extra(&[extra.clone()]).unwrap().dilate(Ratio::new(1, 2)).unwrap().members();
    (b, x, PoolSearch::new(vec![extra]))
}

fn recheck(x: &SubsetInd, b: &BohrSet, r: usize, eta_s: Ratio<u64>, eps: f64, margin: f64, cex: &Counterexample) {
    let Counterexample::Bohr { set, shift } = cex else { panic!("{cex:?}") };
    assert!((bohr_margin(x, b, eps, set, *shift).unwrap() - margin).abs() < 1e-12);
    assert!(margin < 0.0);
    assert!(set.radius() >= b.radius() * eta_s);
    assert!(set.is_regular().regular);
    assert!(b.freqs().iter().all(|f| set.freqs().contains(f)));
    assert!(set.rank() <= b.rank() + r);
}

#[test]
fn planted_bohr_is_found_through_the_pool() {
    let (b, x, pool) = planted();
    let cert = is_bohr_alg_spread(&x, &b, 1, Ratio::new(1, 4), 0.5, &pool).unwrap();
    assert_eq!(cert.verdict, Verdict::NotSpread);
    assert!(matches!(cert.coverage, Coverage::PoolRelative { pool: 1, .. }));
    let cex = cert.counterexample.as_ref().unwrap();
    recheck(&x, &b, 1, Ratio::new(1, 4), 0.5, cert.margin, cex);
    let Counterexample::Bohr { set, .. } = cex else { unreachable!() };
    assert_eq!(set.rank(), 2);
}

#[test]
fn whole_bohr_set_is_spread() {
    let b = bohr(1024, &[1], Ratio::new(1, 4)).find_regular_dilate().unwrap();
    let cert = is_bohr_alg_spread(&b.members(), &b, 0, Ratio::new(1, 4), 0.1, &PoolSearch::new(vec![])).unwrap();
    assert!(cert.is_spread());
    assert!(!cert.is_verified_spread());
    let outside = SubsetInd::from_indices(1024, [512]).unwrap();
    assert!(is_bohr_alg_spread(&outside, &b, 0, Ratio::new(1, 4), 0.1, &PoolSearch::new(vec![])).is_err());
}

#[test]
fn extraction_on_planted_set() {
    let (b, x, pool) = planted();
    let e = bohr_spread_extract(&x, &b, 1, Ratio::new(1, 4), 0.5, &pool).unwrap();
    assert!(!e.trace.is_empty());
    for s in &e.trace {
        assert!(s.density_after >= 1.25 * s.density_before - 1e-12);
        assert!(s.density_violation > 1.5 * s.density_before - 1e-12);
        assert!(s.set.is_regular().regular);
    }
    assert!(e.certificate.is_spread());
    let g = b.group();
    assert!(e.subset.iter().all(|p| x.contains(p) && e.set.contains(g.sub(p, e.shift))));
    let dens = e.subset.card() as f64 / e.set.card() as f64;
    assert!(dens >= x.card() as f64 / b.card() as f64);
}

#[test]
fn extraction_preconditions() {
    let (b, x, pool) = planted();
    assert!(bohr_spread_extract(&SubsetInd::empty(1024), &b, 1, Ratio::new(1, 4), 0.5, &pool).is_err());
    assert!(bohr_spread_extract(&x, &b, 1, Ratio::new(1, 4), 1.5, &pool).is_err());
    let irregular = bohr(1024, &[1], Ratio::new(1, 2));
    let all = SubsetInd::full(1024);
    assert!(bohr_spread_extract(&all, &irregular, 1, Ratio::new(1, 4), 0.5, &pool).is_err());
    let e = bohr_spread_extract(&b.members(), &b, 0, Ratio::new(1, 4), 0.5, &PoolSearch::new(vec![])).unwrap();
    assert!(e.trace.is_empty());
    assert_eq!(e.set, b);
}

#[test]
fn container_checks_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let b1 = bohr(256, &[1], Ratio::new(1, 2));
    let seq = make_sequence(&b1, Ratio::new(1, 2), 5, Exactness::Exact).unwrap();
    let g = b1.group().clone();
    let (mut applicable, mut skipped) = (0, 0);
    for _ in 0..4 {
        let mut rand_fn = |p: f64| GroupFunction::new(g.clone(), (0..256).map(|_| if rng.gen_bool(p) { 1.0 } else { 0.0 }).collect()).unwrap();
        let (f1, f2, h) = (rand_fn(0.5), rand_fn(0.5), rand_fn(0.3));
        let up = check_upper_bound(&seq, &f1, &f2, &h, 2, 0.5).unwrap();
        assert!(up.hypotheses);
        assert!(up.holds, "{up:?}");
        applicable += 1;
        for c in [
            check_conv_lower_bound(&seq, &f1, &f2, &h, 2, 0.005).unwrap(),
            check_conv_lower_bound_2(&seq, &f1, &f2, &h, 2, 0.005).unwrap(),
            check_product_spread(&seq, &f1, &h, 2, 0.005).unwrap(),
        ] {
            if c.hypotheses {
                assert!(c.holds);
                applicable += 1;
            } else {
                skipped += 1;
            }
        }
    }
    assert_eq!((applicable, skipped), (4, 12));
    let short = make_sequence(&b1, Ratio::new(1, 2), 3, Exactness::Exact).unwrap();
    let f = GroupFunction::new(g, vec![0.5; 256]).unwrap();
    assert!(check_upper_bound(&short, &f, &f, &f, 2, 0.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regularity_matches_oracle(n in 20u64..160, a in 1u64..1000, b2 in proptest::option::of(1u64..1000), num in 1u64..60, den in 60u64..200) {
        let mut freqs = vec![a % n];
        if let Some(b2) = b2 { freqs.push(b2 % n); }
        let radius = Ratio::new(num, den);
        let b = bohr(n, &freqs, radius);
        prop_assert_eq!(b.is_regular().regular, oracle_regular(n, &freqs, radius));
        if let Ok(reg) = b.find_regular_dilate() {
            prop_assert!(oracle_regular(n, &freqs, reg.radius()));
            let alpha = reg.radius() / radius;
            prop_assert!(alpha >= Ratio::new(1, 2) && alpha <= Ratio::new(1, 1));
        }
    }

    #[test]
    fn membership_is_symmetric_and_monotone(n in 2u64..300, a in 0u64..300, num in 1u64..50, den in 50u64..100) {
        let small = bohr(n, &[a % n], Ratio::new(num, den));
        let large = bohr(n, &[a % n], Ratio::new(num + 5, den));
        let g = small.group().clone();
        prop_assert!(small.contains(0));
        for x in small.members().iter() {
            prop_assert!(small.contains(g.neg(x)));
            prop_assert!(large.contains(x));
        }
        prop_assert!(small.card() as f64 >= small.size_lower_bound());
        let direct = count_within(n, &[a % n], R::new(num as i128, den as i128));
        prop_assert_eq!(small.card(), direct);
    }
}
