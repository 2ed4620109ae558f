// SPDX-License-Identifier: MIT OR Apache-2.0
use corners_lab_core::gridnorm::*;
use corners_lab_core::group::Group;
use corners_lab_core::setfun::{GridFunction, SubsetInd};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full `k*l`-fold loop over every tuple.
fn naive_power(a: &GridFunction, k: usize, l: usize) -> f64 {
    let (r, c) = (a.rows(), a.cols());
    let total = r.pow(k as u32) * c.pow(l as u32);
    let mut sum = 0.0;
    for t in 0..total {
        let mut rem = t;
        let xs: Vec<usize> = (0..k).map(|_| { let v = rem % r; rem /= r; v }).collect();
        let ys: Vec<usize> = (0..l).map(|_| { let v = rem % c; rem /= c; v }).collect();
        let mut p = 1.0;
        for &x in &xs {
            for &y in &ys {
                p *= a.get(x, y);
            }
        }
        sum += p;
    }
    sum / total as f64
}

fn random_grid(rng: &mut ChaCha8Rng, r: usize, c: usize, signed: bool) -> GridFunction {
    let lo = if signed { -1.0 } else { 0.0 };
    GridFunction::new(r, c, (0..r * c).map(|_| rng.gen_range(lo..1.0)).collect()).unwrap()
}

#[test]
fn collapsed_matches_full_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (r, c) in [(4, 4), (6, 6), (3, 5), (5, 2)] {
        for k in 1..=3 {
            for l in 1..=3 {
                if r > 4 && k * l > 6 {
                    continue;
                }
                let a = random_grid(&mut rng, r, c, true);
                let exact = grid_power(&a, k as u32, l as u32).unwrap();
                let naive = naive_power(&a, k, l);
                assert!((exact - naive).abs() < 1e-9, "{r}x{c} k={k} l={l}");
            }
        }
    }
}

#[test]
fn codegree_path_matches() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for k in 1..=4 {
        let a = random_grid(&mut rng, 5, 7, false);
        let v = grid_norm(&a, 2, k, NormMode::Exact).unwrap().value;
        assert!((grid_norm_2k(&a, k).unwrap() - v).abs() < 1e-12);
    }
}

#[test]
fn constants_and_means() {
    let a = GridFunction::constant(3, 4, 0.3).unwrap();
    for (k, l) in [(1, 1), (2, 3), (3, 2)] {
        assert!((grid_norm(&a, k, l, NormMode::Exact).unwrap().value - 0.3).abs() < 1e-12);
    }
    assert!((grid_norm_2k(&a, 3).unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn monte_carlo_within_four_standard_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = random_grid(&mut rng, 6, 6, false);
    let exact = grid_power(&a, 2, 3).unwrap();
    let mut inside = 0;
    for seed in 0..100 {
        let est = grid_norm(&a, 2, 3, NormMode::MonteCarlo { samples: 20_000, seed }).unwrap();
        if (est.power - exact).abs() <= 4.0 * est.power_stderr {
            inside += 1;
        }
    }
    assert!(inside >= 95, "{inside}/100");
}

#[test]
fn monte_carlo_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let a = random_grid(&mut rng, 5, 5, false);
    let exact = grid_power(&a, 2, 2).unwrap();
    let runs: Vec<_> = (0..50)
        .map(|s| grid_norm(&a, 2, 2, NormMode::MonteCarlo { samples: 2000, seed: 1000 + s }).unwrap())
        .collect();
    let mean = runs.iter().map(|e| e.power).sum::<f64>() / 50.0;
    let pooled = (runs.iter().map(|e| e.power_stderr.powi(2)).sum::<f64>()).sqrt() / 50.0;
    assert!((mean - exact).abs() <= 5.0 * pooled);
}

#[test]
fn gowers_grid_exact_vs_monte_carlo() {
    let g = Group::cyclic(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let f: Vec<f64> = (0..64).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let b1: Vec<usize> = (0..64).filter(|x| x % 64 <= 8 || x % 64 >= 56).collect();
    let b2: Vec<usize> = vec![62, 63, 0, 1, 2];
    let b3: Vec<usize> = vec![63, 0, 1];
    let exact = gowers_grid_norm(&g, &f, &b1, &b2, &b3, 2, 2, NormMode::Exact).unwrap();
    let mc = gowers_grid_norm(&g, &f, &b1, &b2, &b3, 2, 2, NormMode::MonteCarlo { samples: 1_000_000, seed: 7 }).unwrap();
    assert!((exact.power - mc.power).abs() <= 4.0 * mc.power_stderr);
    // k = l = 1 reduces to a mean.
    let one = gowers_grid_norm(&g, &f, &b1, &b2, &b3, 1, 1, NormMode::Exact).unwrap();
    let mut m = 0.0;
    for &x in &b1 {
        for &y in &b2 {
            for &z in &b3 {
                m += f[(x + y + z) % 64];
            }
        }
    }
    m /= (b1.len() * b2.len() * b3.len()) as f64;
    assert!((one.value - m).abs() < 1e-12);
    let c = vec![0.4; 64];
    assert!((gowers_grid_norm(&g, &c, &b1, &b2, &b3, 2, 3, NormMode::Exact).unwrap().value - 0.4).abs() < 1e-12);
}

#[test]
fn holder_equality_and_slack() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let a = random_grid(&mut rng, 3, 3, false);
    let same = vec![a.clone(); 4];
    let rep = check_gowers_holder(&same, 2, 2).unwrap();
    assert!(rep.slack.abs() < 1e-12);
    let one = check_gowers_holder(&[a.clone()], 1, 1).unwrap();
    assert!(one.slack.abs() < 1e-12);
    for _ in 0..50 {
        let fs: Vec<_> = (0..4).map(|_| random_grid(&mut rng, 3, 3, false)).collect();
        assert!(check_gowers_holder(&fs, 2, 2).unwrap().holds);
    }
}

#[test]
fn sparse_support_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..30 {
        let (r, c) = (8, 8);
        let rows = rng.gen_range(1..=3);
        let data: Vec<f64> = (0..r * c)
            .map(|i| if i / c < rows { rng.gen_range(0.0..1.0) } else { 0.0 })
            .collect();
        let a = GridFunction::new(r, c, data).unwrap();
        let gamma = (rows * c) as f64 / (r * c) as f64;
        for l in 1..=3 {
            let v = grid_norm(&a, l, l, NormMode::Exact).unwrap().value;
            assert!(v <= gamma.powf(1.0 / l as f64) + 1e-12);
        }
    }
}

#[test]
fn rectangle_monotone() {
    let rows = SubsetInd::from_indices(6, [0, 2, 4]).unwrap();
    let cols = SubsetInd::from_indices(6, [1]).unwrap();
    let a = GridFunction::rectangle(&rows, &cols).unwrap();
    let rep = check_monotonicity(&a, 1, 2, 2, 3).unwrap();
    let (s, t) = (0.5f64, 1.0 / 6.0);
    assert!((rep.lhs - s.powf(0.5) * t).abs() < 1e-12);
    assert!((rep.rhs - s.powf(1.0 / 3.0) * t.powf(0.5)).abs() < 1e-12);
    assert!(rep.holds);
}

proptest! {
    #[test]
    fn monotone_in_parameters(seed in any::<u64>(), k in 1u32..3, l in 1u32..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_grid(&mut rng, 4, 5, false);
        prop_assert!(check_monotonicity(&a, k, l, k + 1, l).unwrap().holds);
        prop_assert!(check_monotonicity(&a, k, l, k, l + 1).unwrap().holds);
    }

    #[test]
    fn triangle_for_even_parameters(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_grid(&mut rng, 4, 4, true);
        let b = random_grid(&mut rng, 4, 4, true);
        prop_assert!(check_triangle(&a, &b, 2, 2).unwrap().holds);
    }

    #[test]
    fn holder_random(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs: Vec<_> = (0..6).map(|_| random_grid(&mut rng, 3, 4, false)).collect();
        prop_assert!(check_gowers_holder(&fs, 2, 3).unwrap().holds);
    }
}
