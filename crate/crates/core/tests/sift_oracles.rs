// SPDX-License-Identifier: MIT OR Apache-2.0
use corners_lab_core::gridnorm::{grid_norm_2k, grid_power};
use corners_lab_core::setfun::{GridFunction, SubsetInd};
use corners_lab_core::sift::*;
use corners_lab_core::Error;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent evaluation of `E[f g1 g2] / (E g1 E g2)` and the two masses.
fn evaluate(f: &GridFunction, g1: &[f64], g2: &[f64]) -> (f64, f64, f64) {
    let (r, c) = (f.rows(), f.cols());
    let mut s = 0.0;
    for x in 0..r {
        for y in 0..c {
            s += f.data()[x * c + y] * g1[x] * g2[y];
        }
    }
    let m1 = g1.iter().sum::<f64>() / r as f64;
    let m2 = g2.iter().sum::<f64>() / c as f64;
    (s / (r * c) as f64 / (m1 * m2), m1, m2)
}

fn norm(f: &GridFunction, k: u32, l: u32) -> f64 {
    grid_power(f, k, l).unwrap().powf(1.0 / (k * l) as f64)
}

fn assert_sift_post(f: &GridFunction, rep: &SiftReport, k: u32, l: u32, eps: f64, alpha: f64) {
    let (ach, m1, m2) = evaluate(f, &rep.witness.g1, &rep.witness.g2);
    assert!((ach - rep.witness.achieved).abs() < 1e-9);
    assert!((m1 - rep.witness.masses.0).abs() < 1e-9 && (m2 - rep.witness.masses.1).abs() < 1e-9);
    assert!(ach >= (1.0 - eps) * alpha - 1e-12, "achieved {ach} vs {}", (1.0 - eps) * alpha);
    assert!(m1 * m2 >= eps * alpha.powf(2.0 * (k + l) as f64) - 1e-15);
    assert!(m1 * m2 >= rep.mass_floor - 1e-15);
    assert!(rep.witness.g1.iter().chain(&rep.witness.g2).all(|v| (0.0..=1.0).contains(v)));
}

fn planted(rng: &mut ChaCha8Rng, n: usize, block: usize, bg: f64, dense: f64) -> GridFunction {
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
    GridFunction::new(n, n, data).unwrap()
}

#[test]
fn constant_function_is_its_own_witness() {
    let f = GridFunction::constant(5, 7, 0.4).unwrap();
    for (k, l) in [(1, 1), (2, 3), (3, 2)] {
        let rep = sift(&f, k, l, 0.2, 0.4).unwrap();
        assert!(rep.witness.g1.iter().chain(&rep.witness.g2).all(|&v| v == 1.0));
        assert!((rep.witness.achieved - 0.4).abs() < 1e-12);
        assert_eq!(rep.level, (1, 1));
    }
}

#[test]
fn rectangle_witness_meets_post() {
    let rows = SubsetInd::from_indices(10, [1, 3, 4, 8]).unwrap();
    let cols = SubsetInd::from_indices(9, [0, 2, 5]).unwrap();
    let f = GridFunction::rectangle(&rows, &cols).unwrap();
    for (k, l) in [(2, 2), (2, 3), (3, 3)] {
        let alpha = norm(&f, k, l);
        let rep = sift(&f, k, l, 0.1, alpha).unwrap();
        assert_sift_post(&f, &rep, k, l, 0.1, alpha);
    }
}

#[test]
fn planted_block_sifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let f = planted(&mut rng, 32, 8, 0.1, 0.9);
        let alpha = norm(&f, 2, 2);
        let rep = sift(&f, 2, 2, 0.1, alpha).unwrap();
        assert_sift_post(&f, &rep, 2, 2, 0.1, alpha);
        assert_eq!(rep.search, Search::Exhaustive);
        assert!(rep.bracket >= rep.bracket_bound * (1.0 - 1e-9));
    }
}

#[test]
fn asymmetric_parameters_and_sampled_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let f = planted(&mut rng, 12, 4, 0.2, 0.95);
    let alpha = norm(&f, 2, 5);
    let rep = sift(&f, 2, 5, 0.1, alpha).unwrap();
    assert_sift_post(&f, &rep, 2, 5, 0.1, alpha);
    let opts = SiftOptions { work_limit: 0.0, samples: 20_000, seed: 3 };
    match sift_with(&f, 2, 5, 0.1, alpha, &opts) {
        Ok(rep) => {
            assert!(matches!(rep.search, Search::Sampled { .. }));
            assert_sift_post(&f, &rep, 2, 5, 0.1, alpha);
        }
        Err(Error::NotFound(_)) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn sift_reports_actual_norm_on_failure() {
    let f = GridFunction::constant(4, 4, 0.3).unwrap();
    match sift(&f, 2, 2, 0.1, 0.5) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("0.3")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn extract_correlation_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let a = GridFunction::new(8, 8, (0..64).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
    let f1: Vec<f64> = (0..8).map(|i| (i % 2) as f64).collect();
    let f2: Vec<f64> = (0..8).map(|i| (i < 5) as u8 as f64).collect();
    let (ach, _, _) = evaluate(&a, &f1, &f2);
    let (g1, g2) = extract_correlation(&a, &f1, &f2, ach).unwrap();
    assert_eq!(g1, f1.iter().map(|&v| v == 1.0).collect::<Vec<_>>());
    assert_eq!(g2, f2.iter().map(|&v| v == 1.0).collect::<Vec<_>>());

    let half = vec![0.5; 8];
    let (ach, _, _) = evaluate(&a, &half, &half);
    let (g1, g2) = extract_correlation(&a, &half, &half, ach).unwrap();
    assert_eq!(g1.iter().filter(|&&b| b).count(), 4);
    assert_eq!(g2.iter().filter(|&&b| b).count(), 4);
    check_extract_post(&a, &half, &half, ach, &g1, &g2);

    for _ in 0..200 {
        let a = GridFunction::new(8, 8, (0..64).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let f1: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
        let f2: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (ach, _, _) = evaluate(&a, &f1, &f2);
        let tau = ach * rng.gen_range(0.5..1.0);
        let (g1, g2) = extract_correlation(&a, &f1, &f2, tau).unwrap();
        check_extract_post(&a, &f1, &f2, tau, &g1, &g2);
    }
    let (ach, _, _) = evaluate(&a, &half, &half);
    assert!(extract_correlation(&a, &half, &half, ach + 0.1).is_err());
}

fn check_extract_post(a: &GridFunction, f1: &[f64], f2: &[f64], tau: f64, g1: &[bool], g2: &[bool]) {
    let b1: Vec<f64> = g1.iter().map(|&b| b as u8 as f64).collect();
    let b2: Vec<f64> = g2.iter().map(|&b| b as u8 as f64).collect();
    let (ach, m1, m2) = evaluate(a, &b1, &b2);
    assert!(ach >= tau - 1e-9, "{ach} < {tau}");
    assert!(m1 >= f1.iter().sum::<f64>() / f1.len() as f64 / 2.0 - 1e-12);
    assert!(m2 >= f2.iter().sum::<f64>() / f2.len() as f64 / 2.0 - 1e-12);
}

#[test]
fn rounding_is_exact_on_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..500 {
        let n = rng.gen_range(1..12);
        let den = rng.gen_range(1..20i64);
        let alpha: Vec<Ratio<i64>> = (0..n).map(|_| Ratio::new(rng.gen_range(0..=den), den)).collect();
        let coeffs: Vec<Ratio<i64>> = (0..n).map(|_| Ratio::new(rng.gen_range(-10..=10), 7)).collect();
        let v = round_to_boolean(&alpha, &coeffs, Ratio::from_integer(0)).unwrap();
        let s: Ratio<i64> = alpha.iter().sum();
        let card = v.iter().filter(|&&b| b).count() as i64;
        assert!(card == s.floor().to_integer() || card == s.ceil().to_integer());
        if s > Ratio::from_integer(0) {
            // E[g] >= E[f] / 2
            assert!(Ratio::from_integer(2 * card) >= s);
        }
        let before: Ratio<i64> = alpha.iter().zip(&coeffs).map(|(a, c)| a * c).sum();
        let after: Ratio<i64> = v.iter().zip(&coeffs).filter(|(b, _)| **b).map(|(_, c)| *c).sum();
        if s >= Ratio::from_integer(1) {
            assert!(after >= before);
        } else if before >= Ratio::from_integer(0) {
            assert!(after >= Ratio::from_integer(0));
        }
    }
}

fn random_majorant(rng: &mut ChaCha8Rng, n: usize, p: f64) -> (SubsetInd, GridFunction) {
    let t = SubsetInd::from_bools(&(0..n * n).map(|_| rng.gen_bool(p)).collect::<Vec<_>>());
    let r0 = rng.gen_range(0..n / 2);
    let c0 = rng.gen_range(0..n / 2);
    let h = n / 2;
    let data = (0..n * n)
        .map(|i| {
            let (x, y) = (i / n, i % n);
            let inside = (r0..r0 + h).contains(&x) && (c0..c0 + h).contains(&y);
            if inside && t.contains(i) { 1.0 } else { 0.0 }
        })
        .collect();
    (t, GridFunction::new(n, n, data).unwrap())
}

fn assert_relative_post(f: &GridFunction, rep: &RelativeReport, tau: f64, eps: f64, alpha: f64) {
    let (ach, m1, m2) = evaluate(f, &rep.witness.g1, &rep.witness.g2);
    assert!((ach - rep.witness.achieved).abs() < 1e-9);
    assert!(ach >= (1.0 - eps) * alpha * tau - 1e-12, "achieved {ach}");
    assert!(m1 >= rep.mass_floors.0 && m2 >= rep.mass_floors.1);
}

#[test]
fn relative_sift_full_majorant_matches_plain_sift() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for k in 1..=3 {
        let f = planted(&mut rng, 16, 6, 0.2, 0.9);
        let alpha = grid_norm_2k(&f, k).unwrap();
        let maj = SpreadMajorant::new(16, 16, SubsetInd::full(256), 1.0, 0.0).unwrap();
        let rel = relative_sift(&f, &maj, k, 0.1, alpha).unwrap();
        let plain = sift(&f, 2, k, 0.1, alpha).unwrap();
        assert_eq!(rel.witness, plain.witness);
        assert_eq!(rel.regime, Regime::Delegated);
    }
}

#[test]
fn relative_sift_planted() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for trial in 0..20 {
        let (t, f) = random_majorant(&mut rng, 16, 0.25);
        let tau = t.density();
        let k = 1 + trial % 3;
        let alpha = (grid_norm_2k(&f, k).unwrap() / tau).min(1.0);
        let maj = SpreadMajorant::new(16, 16, t, tau, 1e-6).unwrap();
        let rep = relative_sift(&f, &maj, k, 0.1, alpha).unwrap();
        assert_relative_post(&f, &rep, tau, 0.1, alpha);
        assert_eq!(rep.regime, Regime::OutOfRegime);
    }
}

#[test]
fn relative_sift_rejects_support_violation() {
    let t = SubsetInd::from_indices(16, [0, 5]).unwrap();
    let f = GridFunction::constant(4, 4, 0.5).unwrap();
    let maj = SpreadMajorant::new(4, 4, t, 0.125, 0.0).unwrap();
    assert!(matches!(relative_sift(&f, &maj, 2, 0.1, 0.5), Err(Error::Precondition(_))));
}

#[test]
fn unbalancing_examples() {
    let (eps, k) = (0.05, 3);
    let p = unbalancing_exponent(eps, k);
    let m = moments(&[eps], &[1.0], p).unwrap();
    let rep = check_unbalancing(&m, eps, k).unwrap();
    assert!(rep.holds);
    let expect = ((1.0 + eps) / (1.0 + eps / 2.0)).powi(p as i32);
    assert!((rep.rhs - expect).abs() < 1e-9 * expect);

    let zero = moments(&[0.0], &[1.0], p).unwrap();
    assert!(matches!(check_unbalancing(&zero, eps, k), Err(Error::Precondition(_))));

    // Codegree fluctuation of a random 0/1 matrix has nonnegative moments.
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let (r, c) = (12, 20);
    let a: Vec<f64> = (0..r * c).map(|_| rng.gen_bool(0.3) as u8 as f64).collect();
    let alpha = a.iter().sum::<f64>() / a.len() as f64;
    let mut b = Vec::new();
    for x in 0..r {
        for x2 in 0..r {
            b.push((0..c).map(|y| (a[x * c + y] - alpha) * (a[x2 * c + y] - alpha)).sum::<f64>() / c as f64);
        }
    }
    let k = 2;
    let p = unbalancing_exponent(eps, k);
    let mk = b.iter().map(|v| v * v).sum::<f64>() / b.len() as f64;
    let scale = eps / mk.powf(0.5);
    let xs: Vec<f64> = b.iter().map(|v| v * scale).collect();
    let m = moments(&xs, &vec![1.0; xs.len()], p).unwrap();
    assert!(check_unbalancing(&m, eps, k).unwrap().holds);
}

#[test]
fn spectral_positivity_examples() {
    let flat = GridFunction::constant(6, 6, 0.4).unwrap();
    let rep = check_spectral_positivity(&flat, 0.09, 2).unwrap();
    assert!(!rep.hypothesis && rep.conclusion.is_none());

    // Two row blocks with opposite column tilts; every row mean equals alpha.
    let (alpha, tilt) = (0.5, 0.2);
    let n = 8;
    let data = (0..n * n)
        .map(|i| {
            let (x, y) = (i / n, i % n);
            let s = if (x < n / 2) == (y < n / 2) { 1.0 } else { -1.0 };
            alpha * (1.0 + s * tilt)
        })
        .collect();
    let a = GridFunction::new(n, n, data).unwrap();
    let rep = check_spectral_positivity(&a, 0.09, 2).unwrap();
    assert!(rep.hypothesis);
    assert!((rep.deviation - alpha * tilt).abs() < 1e-12);
    assert!(rep.conclusion.unwrap().holds);

    let mut data = vec![0.5; 16];
    data[4..8].copy_from_slice(&[0.1; 4]);
    let bad = GridFunction::new(4, 4, data).unwrap();
    match check_spectral_positivity(&bad, 0.09, 2) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("row 1")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn reverse_markov_examples() {
    let rep = reverse_markov(0.3, 0.5, &[2.0; 10], None).unwrap();
    assert_eq!(rep.lhs, 0.0);
    assert!(rep.holds);

    let (rho, m) = (0.25, 3.0);
    let vals = [0.0, (1.0 + rho) * m];
    let w = [rho / (1.0 + rho), 1.0 / (1.0 + rho)];
    let rep = reverse_markov(rho, 1.0, &vals, Some(&w)).unwrap();
    assert!((rep.lhs - rho / (1.0 + rho)).abs() < 1e-12);
    assert!(rep.holds);

    // Uniform on [0, (1 + rho) m] with mean m forces rho = 1.
    let grid: Vec<f64> = (0..=1000).map(|i| 2.0 * i as f64 / 1000.0).collect();
    for gamma in [0.1, 0.5, 0.9, 1.0] {
        let rep = reverse_markov(1.0, gamma, &grid, None).unwrap();
        assert!(rep.holds);
        // Pr[V <= (1 - gamma)] on the grid is about (1 - gamma) / 2.
        assert!((rep.lhs - (1.0 - gamma) / 2.0).abs() < 2e-3);
    }
    assert!(reverse_markov(0.1, 0.5, &[0.0, 10.0], None).is_err());
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
fn min_eigenvalue(mut a: Vec<f64>, n: usize) -> f64 {
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let (c, s) = (1.0 / (t * t + 1.0).sqrt(), t / (t * t + 1.0).sqrt());
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
}

#[test]
fn codegree_kernel_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    for n in [4, 16, 40, 64] {
        let f = GridFunction::new(n, 9, (0..n * 9).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        for m in 1..=3 {
            let kern = codegree_kernel(&f, m);
            assert!(min_eigenvalue(kern, n) >= -1e-9, "n={n} m={m}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sift_post_holds(seed in any::<u64>(), k in 1u32..4, l in 1u32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = planted(&mut rng, 8, 3, 0.3, 0.9);
        let alpha = norm(&f, k, l);
        prop_assume!(alpha > 0.0);
        let rep = sift(&f, k, l, 0.2, alpha).unwrap();
        assert_sift_post(&f, &rep, k, l, 0.2, alpha);
    }

    #[test]
    fn extract_post_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = GridFunction::new(6, 5, (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let f1: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
        let f2: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (ach, _, _) = evaluate(&a, &f1, &f2);
        let (g1, g2) = extract_correlation(&a, &f1, &f2, ach - 0.01).unwrap();
        check_extract_post(&a, &f1, &f2, ach - 0.01, &g1, &g2);
    }
}
