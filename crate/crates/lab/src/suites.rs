// SPDX-License-Identifier: MIT OR Apache-2.0
//! Seeded property suites behind `verify`.
//!
//! A suite maps a seed to one instance and returns the inequalities it
//! asserted. Instances whose hypotheses fail are skipped, never passed.
//! Every quantity that has a cheap definition is recomputed from
//! [`crate::oracles`] instead of trusted from the kernel.

use std::collections::BTreeMap;

use corners_lab_core::bohr::{self, BohrSet, Exactness};
use corners_lab_core::corners::{self, CornerVariant};
use corners_lab_core::gridnorm;
use corners_lab_core::group::{AffineSubspace, Group};
use corners_lab_core::increment::{self, Container, IncrementState, Sides};
use corners_lab_core::nof::{self, Coloring, CylinderIntersection};
use corners_lab_core::setfun::{GridFunction, GroupFunction, SubsetInd};
use corners_lab_core::sift::{self, SpreadMajorant};
use corners_lab_core::Error;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::instances::{self, planted, planted_majorant, random_grid, random_subset, rng};
use crate::oracles;
use crate::report::Inequality;

/// Result of one seeded instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass(Vec<Inequality>),
    /// The instance does not meet the statement's hypotheses.
    Skip(String),
    Fail(Vec<Inequality>, String),
}

pub struct Suite {
    pub name: &'static str,
    pub about: &'static str,
    pub run: fn(u64) -> Outcome,
}

pub const SUITES: &[Suite] = &[
    Suite { name: "corners", about: "transform corner counts against the triple loop", run: corners_suite },
    Suite { name: "gridnorm", about: "collapsed grid norms against full enumeration", run: gridnorm_suite },
    Suite { name: "holder", about: "Gowers-Holder inequality for grid norms", run: holder_suite },
    Suite { name: "monotonicity", about: "grid norms grow with both parameters", run: monotonicity_suite },
    Suite { name: "triangle", about: "triangle inequality for even grid norms", run: triangle_suite },
    Suite { name: "unbalancing", about: "moment unbalancing", run: unbalancing_suite },
    Suite { name: "spectral", about: "spectral positivity of high grid norms", run: spectral_suite },
    Suite { name: "markov", about: "reverse Markov inequality", run: markov_suite },
    Suite { name: "containers", about: "container size under algebraic spreadness over F2^n", run: containers_suite },
    Suite { name: "bohr-upper", about: "Bohr container upper bound", run: bohr_upper_suite },
    Suite { name: "bohr-conv", about: "Bohr convolution lower bound", run: bohr_conv_suite },
    Suite { name: "bohr-conv2", about: "Bohr convolution lower bound, second form", run: bohr_conv2_suite },
    Suite { name: "bohr-product", about: "Bohr product spreadness", run: bohr_product_suite },
    Suite { name: "sifting", about: "sifting witnesses on planted blocks", run: sifting_suite },
    Suite { name: "relative-sifting", about: "relative sifting witnesses under sparse majorants", run: relative_sifting_suite },
    Suite { name: "behrend", about: "Behrend sets and their corner-free lifts", run: behrend_suite },
    Suite { name: "nof", about: "compiled Exactly-N protocols, exhaustively", run: nof_suite },
    Suite { name: "spreadness", about: "density-increment loop and its pseudorandomization steps", run: spreadness_suite },
    Suite { name: "vnl", about: "corner counting lemma after the increment loop", run: vnl_suite },
    Suite { name: "bohr-regular", about: "regular dilates, size bounds and Bohr sequences", run: bohr_regular_suite },
    Suite { name: "nonabelian", about: "projections of corner-free sets in small groups", run: nonabelian_suite },
    Suite { name: "lift", about: "nonabelian Roth lift against square relations", run: lift_suite },
    Suite { name: "cylinder", about: "one colour-removal step on cylinder intersections", run: cylinder_suite },
];

pub fn find(name: &str) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub detail: String,
}

/// Aggregated counts of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub first_seed: u64,
    pub seeds: u64,
    pub passed: u64,
    pub failed: u64,
    pub skipped: u64,
    pub skip_reasons: BTreeMap<String, u64>,
    /// The first [`MAX_FAILURES`] failures in seed order.
    pub failures: Vec<Failure>,
    /// Number of times each inequality was asserted.
    pub asserted: BTreeMap<String, u64>,
}

pub const MAX_FAILURES: usize = 20;

/// Runs seeds `first..first + count` in parallel; results merge in seed order.
///
/// The returned inequalities are the worst instance of each name, with
/// `holds` the conjunction over all instances.
pub fn run_suite(suite: &Suite, first: u64, count: u64) -> (SuiteSummary, Vec<Inequality>) {
    let outcomes: Vec<(u64, Outcome)> = (first..first + count).into_par_iter().map(|s| (s, (suite.run)(s))).collect();
    let mut summary = SuiteSummary {
        suite: suite.name.to_string(),
        first_seed: first,
        seeds: count,
        passed: 0,
        failed: 0,
        skipped: 0,
        skip_reasons: BTreeMap::new(),
        failures: Vec::new(),
        asserted: BTreeMap::new(),
    };
    let mut worst: BTreeMap<String, Inequality> = BTreeMap::new();
    let mut merge = |ineqs: &[Inequality], asserted: &mut BTreeMap<String, u64>| {
        for q in ineqs {
            *asserted.entry(q.name.clone()).or_default() += 1;
            match worst.get_mut(&q.name) {
                Some(w) => {
                    let all = w.holds && q.holds;
                    if !(q.margin >= w.margin) {
                        *w = q.clone();
                    }
                    w.holds = all;
                }
                None => {
                    worst.insert(q.name.clone(), q.clone());
                }
            }
        }
    };
    for (seed, o) in outcomes {
        match o {
            Outcome::Pass(q) => {
                summary.passed += 1;
                merge(&q, &mut summary.asserted);
            }
            Outcome::Skip(why) => {
                summary.skipped += 1;
                *summary.skip_reasons.entry(why).or_default() += 1;
            }
            Outcome::Fail(q, detail) => {
                summary.failed += 1;
                merge(&q, &mut summary.asserted);
                if summary.failures.len() < MAX_FAILURES {
                    summary.failures.push(Failure { seed, detail });
                }
            }
        }
    }
    (summary, worst.into_values().collect())
}

fn judge(ineqs: Vec<Inequality>) -> Outcome {
    match ineqs.iter().find(|q| !q.holds) {
        Some(bad) => {
            let detail = format!("{}: lhs {} rhs {}", bad.name, bad.lhs, bad.rhs);
            Outcome::Fail(ineqs, detail)
        }
        None => Outcome::Pass(ineqs),
    }
}

fn failed(detail: impl Into<String>) -> Outcome {
    Outcome::Fail(Vec::new(), detail.into())
}

/// Preconditions become skips; anything else is a failure.
fn from_error(e: Error) -> Outcome {
    match e {
        Error::Precondition(_) | Error::EmptySubset => Outcome::Skip("precondition".into()),
        e => failed(e.to_string()),
    }
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

macro_rules! must {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return failed(e.to_string()),
        }
    };
}

const HYPOTHESIS: &str = "hypothesis not met";

// ---------------------------------------------------------------- corners

pub const A_CORNER_COUNT: &str = "the transform corner count equals the triple loop";
pub const A_PHI: &str = "the corner form times |G|^3 equals the corner count plus |A|";

/// Fast count, triple loop and the corner-form identity on one set.
pub fn corner_checks(g: &Group, a: &SubsetInd) -> corners_lab_core::Result<Vec<Inequality>> {
    let m = g.order();
    let rep = corners::count_corners(g, a)?;
    let naive = oracles::corner_count(g, a);
    let f = GridFunction::from_subset(m, m, a)?;
    let scaled = corners::phi_corner(g, &f, &f, &f)? * (m * m * m) as f64;
    let rounded = scaled.round();
    Ok(vec![
        Inequality::equal("corner count", A_CORNER_COUNT, rep.count, naive),
        Inequality::close("corner form is integral", A_PHI, scaled, rounded, 1e-6),
        Inequality::equal("corner form identity", A_PHI, rounded as u64, naive + a.card() as u64),
    ])
}

fn corners_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let g = if seed % 2 == 0 { Group::cyclic(5 + (seed / 2) % 60) } else { Group::f2(1 + (seed / 2 % 6) as usize) };
    let g = must!(g);
    let m = g.order();
    let p = r.gen_range(0.02..0.7);
    judge(must!(corner_checks(&g, &random_subset(&mut r, m * m, p))))
}

// --------------------------------------------------------------- gridnorm

pub const A_GRID_POWER: &str = "the collapsed grid-norm power equals the full k-by-l enumeration";
pub const A_HOLDER: &str = "Gowers-Holder: a k-by-l product average is at most the product of grid norms";
pub const A_MONOTONE: &str = "grid norms are nondecreasing in k and l for nonnegative functions";
pub const A_TRIANGLE: &str = "grid norms with even parameters satisfy the triangle inequality";

fn gridnorm_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let side = if seed % 2 == 0 { 4 } else { 6 };
    let (k, l) = (1 + (seed / 2 % 3) as u32, 1 + (seed / 6 % 3) as u32);
    let f = random_grid(&mut r, side, side, -1.0, 1.0);
    let power = must!(gridnorm::grid_power(&f, k, l));
    let full = oracles::grid_power(&f, k as usize, l as usize);
    judge(vec![Inequality::close("grid power", A_GRID_POWER, power, full, 1e-9)])
}

fn small_nonneg<R: Rng>(r: &mut R, rows: usize, cols: usize) -> GridFunction {
    if r.gen_bool(0.5) {
        let p = r.gen_range(0.1..0.9);
        GridFunction::new(rows, cols, (0..rows * cols).map(|_| if r.gen_bool(p) { 1.0 } else { 0.0 }).collect()).expect("0/1")
    } else {
        random_grid(r, rows, cols, 0.0, 1.0)
    }
}

fn holder_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let (k, l) = (r.gen_range(1..=3usize), r.gen_range(1..=3usize));
    let budget = 20_000.0f64;
    let (mut rows, mut cols) = (r.gen_range(2..=5usize), r.gen_range(2..=5usize));
    while (rows as f64).powi(k as i32) * (cols as f64).powi(l as i32) > budget {
        if rows > 2 { rows -= 1 } else { cols -= 1 }
    }
    let fs: Vec<GridFunction> = (0..k * l).map(|_| small_nonneg(&mut r, rows, cols)).collect();
    let rep = must!(gridnorm::check_gowers_holder(&fs, k as u32, l as u32));
    let refs: Vec<&GridFunction> = fs.iter().collect();
    let lhs = oracles::grid_product_mean(&refs, k, l);
    let rhs: f64 = fs.iter().map(|f| oracles::grid_norm(f, k, l)).product();
    judge(vec![
        Inequality::from_report("holder (kernel)", A_HOLDER, &rep),
        Inequality::at_most("holder (recomputed)", A_HOLDER, lhs, rhs, 1e-12 * rhs.max(1e-300) + 1e-15),
        Inequality::close("holder average", A_HOLDER, rep.lhs, lhs, 1e-9),
    ])
}

fn monotonicity_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let (rows, cols) = (r.gen_range(2..=5usize), r.gen_range(2..=5usize));
    let f = small_nonneg(&mut r, rows, cols);
    let (k, l) = (r.gen_range(1..=3u32), r.gen_range(1..=3u32));
    let (k2, l2) = (r.gen_range(k..=3u32), r.gen_range(l..=3u32));
    let rep = must!(gridnorm::check_monotonicity(&f, k, l, k2, l2));
    let small = oracles::grid_norm(&f, k as usize, l as usize);
    let large = oracles::grid_norm(&f, k2 as usize, l2 as usize);
    judge(vec![
        Inequality::from_report("monotonicity (kernel)", A_MONOTONE, &rep),
        Inequality::at_most("monotonicity (recomputed)", A_MONOTONE, small, large, 1e-12),
    ])
}

fn triangle_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let (k, l) = *[(2u32, 2u32), (2, 4), (4, 2)].choose(&mut r).expect("nonempty");
    let (rows, cols) = (r.gen_range(2..=4usize), r.gen_range(2..=4usize));
    let a = random_grid(&mut r, rows, cols, -1.0, 1.0);
    let b = random_grid(&mut r, rows, cols, -1.0, 1.0);
    let rep = must!(gridnorm::check_triangle(&a, &b, k, l));
    let half = must!(GridFunction::new(rows, cols, a.data().iter().zip(b.data()).map(|(x, y)| (x + y) / 2.0).collect()));
    let (ku, lu) = (k as usize, l as usize);
    let lhs = 2.0 * oracles::grid_norm(&half, ku, lu);
    let rhs = oracles::grid_norm(&a, ku, lu) + oracles::grid_norm(&b, ku, lu);
    judge(vec![
        Inequality::from_report("triangle (kernel)", A_TRIANGLE, &rep),
        Inequality::at_most("triangle (recomputed)", A_TRIANGLE, lhs, rhs, 1e-12),
    ])
}

// ------------------------------------------------------------ sifting aids

pub const A_UNBALANCING: &str = "unbalancing: E[X^k] >= eps^k and nonnegative moments give E[(1+X)^p] >= (1+eps/2)^p";
pub const A_SPECTRAL: &str = "spectral positivity: a deviating function with balanced rows has a large high-order grid norm";
pub const A_MARKOV: &str = "reverse Markov: Pr[V <= (1-gamma) E V] <= rho/(gamma+rho) when V <= (1+rho) E V";

fn codegree_fluctuation(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let alpha = a.iter().sum::<f64>() / a.len() as f64;
    let mut b = Vec::with_capacity(rows * rows);
    for x in 0..rows {
        for x2 in 0..rows {
            b.push((0..cols).map(|y| (a[x * cols + y] - alpha) * (a[x2 * cols + y] - alpha)).sum::<f64>() / cols as f64);
        }
    }
    b
}

fn unbalancing_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let (rows, cols) = (r.gen_range(4..=12usize), r.gen_range(4..=16usize));
    let p = r.gen_range(0.1..0.9);
    let a: Vec<f64> = (0..rows * cols).map(|_| if r.gen_bool(p) { 1.0 } else { 0.0 }).collect();
    let b = codegree_fluctuation(&a, rows, cols);
    let eps = *[0.02, 0.05, 0.09].choose(&mut r).expect("nonempty");
    let k = *[1u32, 2, 3, 4].choose(&mut r).expect("nonempty");
    let mk = b.iter().map(|v| v.powi(k as i32)).sum::<f64>() / b.len() as f64;
    if !(mk > 1e-12) {
        return Outcome::Skip("degenerate instance".into());
    }
    let scale = eps * r.gen_range(0.8..1.6) / mk.powf(1.0 / k as f64);
    let xs: Vec<f64> = b.iter().map(|v| v * scale).collect();
    let pexp = sift::unbalancing_exponent(eps, k);
    let m = must!(sift::moments(&xs, &vec![1.0; xs.len()], pexp));
    let rep = match sift::check_unbalancing(&m, eps, k) {
        Ok(rep) => rep,
        Err(Error::Precondition(_)) => return Outcome::Skip(HYPOTHESIS.into()),
        Err(e) => return failed(e.to_string()),
    };
    let base = 1.0 + eps / 2.0;
    let lhs = xs.iter().map(|x| ((1.0 + x) / base).powi(pexp as i32)).sum::<f64>() / xs.len() as f64;
    judge(vec![
        Inequality::from_report("unbalancing (kernel)", A_UNBALANCING, &rep),
        Inequality::at_least("unbalancing (recomputed)", A_UNBALANCING, lhs, 1.0, 1e-9),
    ])
}

fn spectral_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let (rows, cols) = (r.gen_range(4..=8usize), r.gen_range(4..=8usize));
    let m = random_grid(&mut r, rows, cols, 0.0, 1.0);
    let means: Vec<f64> = (0..rows).map(|x| m.row(x).iter().sum::<f64>() / cols as f64).collect();
    let t = means.iter().copied().fold(f64::INFINITY, f64::min);
    let data = (0..rows * cols).map(|i| m.data()[i] * t / means[i / cols]).collect();
    let a = must!(GridFunction::new(rows, cols, data));
    let eps = *[0.05, 0.09].choose(&mut r).expect("nonempty");
    let k = *[2u32, 4].choose(&mut r).expect("nonempty");
    let rep = attempt!(sift::check_spectral_positivity(&a, eps, k));
    let Some(conclusion) = rep.conclusion.as_ref().filter(|_| rep.hypothesis) else {
        return Outcome::Skip(HYPOTHESIS.into());
    };
    let alpha = a.mean();
    let centered = must!(GridFunction::new(rows, cols, a.data().iter().map(|v| v - alpha).collect()));
    let deviation = oracles::grid_norm(&centered, 2, k as usize);
    let norm_p = oracles::norm_2m(&a, rep.p);
    judge(vec![
        Inequality::from_report("spectral positivity (kernel)", A_SPECTRAL, conclusion),
        Inequality::close("deviation", A_SPECTRAL, rep.deviation, deviation, 1e-9),
        Inequality::at_least("spectral positivity (recomputed)", A_SPECTRAL, norm_p, (1.0 + eps * eps / 36.0) * alpha, 1e-12),
    ])
}

fn markov_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let len = r.gen_range(1..=200usize);
    let values: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..1.0)).collect();
    let weights: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let top = values.iter().copied().fold(0.0, f64::max);
    let rho = (top / mean - 1.0).max(0.0) + r.gen_range(1e-3..0.5);
    let gamma = r.gen_range(1e-3..=1.0);
    let rep = attempt!(sift::reverse_markov(rho, gamma, &values, Some(&weights)));
    let cut = (1.0 - gamma) * mean;
    let pr = values.iter().zip(&weights).filter(|(v, _)| **v <= cut).map(|(_, w)| w).sum::<f64>() / total;
    judge(vec![
        Inequality::from_report("reverse Markov (kernel)", A_MARKOV, &rep),
        Inequality::at_most("reverse Markov (recomputed)", A_MARKOV, pr, rho / (gamma + rho), 1e-12),
    ])
}

// ------------------------------------------------------------- containers

pub const A_CONTAINER: &str = "container size: spread sides keep |S(X,Y,D)| within (1 ± eps) delta |W|^2";
pub const A_FOURIER: &str = "the Fourier deviation bound on |S(X,Y,D)| - delta |W|^2";

fn containers_suite(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let n = 2 + (seed % 5) as usize;
    let rr = 1 + (seed / 5 % 2) as usize;
    let side = 1usize << n;
    let draw = |r: &mut rand_chacha::ChaCha8Rng| {
        let p = r.gen_range(0.6..1.0);
        random_subset(r, side, p)
    };
    let (x, y, d) = (draw(&mut r), draw(&mut r), draw(&mut r));
    let eps = r.gen_range(0.3..0.95);
    let sides = if r.gen_bool(0.5) { Sides::One } else { Sides::Two };
    let c = attempt!(Container::new(AffineSubspace::full(n), 0, 0, x.clone(), y.clone(), d.clone()));
    let rep = must!(increment::container_size_check(&c, rr, eps, sides));
    let mut brute = 0usize;
    for a in x.iter() {
        for b in y.iter() {
            brute += d.contains(a ^ b) as usize;
        }
    }
    let Some(_) = rep.holds else {
        return Outcome::Skip(HYPOTHESIS.into());
    };
    let mut out = vec![
        Inequality::equal("container size", A_CONTAINER, rep.size as u64, brute as u64),
        Inequality::at_most("Fourier deviation", A_FOURIER, (brute as f64 - rep.expected).abs(), rep.fourier_dev, 1e-9),
        Inequality::at_most("container upper bound", A_CONTAINER, brute as f64, rep.upper, 1e-9),
    ];
    if let Some(lower) = rep.lower {
        out.push(Inequality::at_least("container lower bound", A_CONTAINER, brute as f64, lower, 1e-9));
    }
    judge(out)
}

// ---------------------------------------------------------- Bohr lemmas

pub const A_BOHR_UPPER: &str = "Bohr container upper bound from a small grid norm";
pub const A_BOHR_CONV: &str = "Bohr convolution lower bound";
pub const A_BOHR_CONV2: &str = "Bohr convolution lower bound, second form";
pub const A_BOHR_PRODUCT: &str = "Bohr product spreadness";

struct BohrInstance {
    seq: bohr::BohrSequence,
    f1: GroupFunction,
    f2: GroupFunction,
    g: GroupFunction,
}

fn bohr_instance(seed: u64) -> Result<BohrInstance, Outcome> {
    let mut r = rng(seed);
    let n = 64 + seed % 449;
    let group = Group::cyclic(n).map_err(|e| failed(e.to_string()))?;
    let a = r.gen_range(1..n);
    let b1 = BohrSet::from_freqs(group.clone(), &[vec![a]], Ratio::new(1, 2)).map_err(|e| failed(e.to_string()))?;
    let seq = match bohr::make_sequence(&b1, Ratio::new(1, 2), 5, Exactness::Exact) {
        Ok(s) => s,
        Err(Error::Precondition(_)) | Err(Error::NotFound(_)) => return Err(Outcome::Skip("sequence degenerates".into())),
        Err(e) => return Err(failed(e.to_string())),
    };
    let mut draw = |p: f64| {
        GroupFunction::new(group.clone(), (0..n).map(|_| if r.gen_bool(p) { 1.0 } else { 0.0 }).collect()).expect("0/1")
    };
    let (p1, p2, p3) = (0.2 + 0.6 * (seed % 7) as f64 / 6.0, 0.5, 0.3);
    Ok(BohrInstance { f1: draw(p1), f2: draw(p2), g: draw(p3), seq })
}

fn bohr_outcome(c: corners_lab_core::Result<bohr::ContainerCheck>, name: &str, anchor: &str) -> Outcome {
    let c = attempt!(c);
    if !c.hypotheses {
        return Outcome::Skip(HYPOTHESIS.into());
    }
    judge(vec![Inequality::at_most(name, anchor, c.lhs, c.rhs, 1e-12)])
}

fn bohr_upper_suite(seed: u64) -> Outcome {
    match bohr_instance(seed) {
        Ok(b) => bohr_outcome(bohr::check_upper_bound(&b.seq, &b.f1, &b.f2, &b.g, 2, 0.5), "Bohr upper bound", A_BOHR_UPPER),
        Err(o) => o,
    }
}

fn bohr_conv_suite(seed: u64) -> Outcome {
    match bohr_instance(seed) {
        Ok(b) => bohr_outcome(bohr::check_conv_lower_bound(&b.seq, &b.f1, &b.f2, &b.g, 2, 0.005), "Bohr convolution bound", A_BOHR_CONV),
        Err(o) => o,
    }
}

fn bohr_conv2_suite(seed: u64) -> Outcome {
    match bohr_instance(seed) {
        Ok(b) => bohr_outcome(bohr::check_conv_lower_bound_2(&b.seq, &b.f1, &b.f2, &b.g, 2, 0.005), "Bohr convolution bound 2", A_BOHR_CONV2),
        Err(o) => o,
    }
}

fn bohr_product_suite(seed: u64) -> Outcome {
    match bohr_instance(seed) {
        Ok(b) => bohr_outcome(bohr::check_product_spread(&b.seq, &b.f1, &b.g, 2, 0.005), "Bohr product spreadness", A_BOHR_PRODUCT),
        Err(o) => o,
    }
}

// ---------------------------------------------------------------- sifting

pub const A_SIFT: &str = "sifting: the witness is (1-eps) alpha dense with product mass above the floor";
pub const A_REL_SIFT: &str = "relative sifting: the witness is (1-eps) alpha tau dense with masses above the floors";

/// Planted instance, `(k, l)` and `eps` for seed `seed`.
pub fn sifting_instance(seed: u64) -> (GridFunction, u32, u32, f64) {
    let mut r = rng(seed);
    let n = if seed % 3 == 0 { 8 } else { 16 };
    let block = r.gen_range(n / 4..=n / 2);
    let (bg, dense) = (r.gen_range(0.05..0.4), r.gen_range(0.7..1.0));
    let f = planted(&mut r, n, block, bg, dense);
    let (k, l) = (1 + (seed / 3 % 3) as u32, 1 + (seed / 9 % 3) as u32);
    let eps = *[0.05, 0.1, 0.2].choose(&mut r).expect("nonempty");
    (f, k, l, eps)
}

/// Independent audit of a sifting report.
pub fn sift_audit(f: &GridFunction, rep: &sift::SiftReport, k: u32, l: u32, eps: f64, alpha: f64) -> Vec<Inequality> {
    let w = &rep.witness;
    let (ach, m1, m2) = oracles::sift_eval(f, &w.g1, &w.g2);
    let floor = eps * alpha.powi(2 * (k + l) as i32);
    let unit = w.g1.iter().chain(&w.g2).all(|v| (0.0..=1.0).contains(v));
    vec![
        Inequality::close("reported density", A_SIFT, w.achieved, ach, 1e-9),
        Inequality::at_least("witness density", A_SIFT, ach, (1.0 - eps) * alpha, 1e-12),
        Inequality::at_least("witness mass", A_SIFT, m1 * m2, rep.mass_floor, 1e-15),
        Inequality::at_least("pinned mass floor", A_SIFT, m1 * m2, floor, 1e-15),
        Inequality::flag("witness in [0,1]", A_SIFT, unit),
    ]
}

fn sifting_suite(seed: u64) -> Outcome {
    let (f, k, l, eps) = sifting_instance(seed);
    let alpha = must!(gridnorm::grid_power(&f, k, l)).max(0.0).powf(1.0 / (k * l) as f64);
    if alpha <= 0.0 {
        return Outcome::Skip("zero norm".into());
    }
    let rep = must!(sift::sift(&f, k, l, eps, alpha));
    judge(sift_audit(&f, &rep, k, l, eps, alpha))
}

/// Planted sparse instance: `(f, T, tau, k, eps, alpha)`.
pub fn relative_instance(seed: u64) -> (GridFunction, SubsetInd, f64, u32, f64, f64) {
    let mut r = rng(seed);
    let n = 16;
    let p = r.gen_range(0.15..0.5);
    let (t, f) = planted_majorant(&mut r, n, p);
    let tau = t.density();
    let k = 1 + (seed % 3) as u32;
    let eps = *[0.05, 0.1, 0.2].choose(&mut r).expect("nonempty");
    let alpha = (gridnorm::grid_norm_2k(&f, k).expect("k >= 1") / tau).min(1.0);
    (f, t, tau, k, eps, alpha)
}

pub fn relative_audit(f: &GridFunction, rep: &sift::RelativeReport, tau: f64, k: u32, eps: f64, alpha: f64) -> Vec<Inequality> {
    let w = &rep.witness;
    let (ach, m1, m2) = oracles::sift_eval(f, &w.g1, &w.g2);
    let (p1, p2) = sift::relative_mass_floors(alpha, eps, k);
    vec![
        Inequality::close("reported density", A_REL_SIFT, w.achieved, ach, 1e-9),
        Inequality::at_least("witness density", A_REL_SIFT, ach, (1.0 - eps) * alpha * tau, 1e-12),
        Inequality::at_least("row mass", A_REL_SIFT, m1, rep.mass_floors.0, 0.0),
        Inequality::at_least("column mass", A_REL_SIFT, m2, rep.mass_floors.1, 0.0),
        Inequality::close("pinned row floor", A_REL_SIFT, rep.mass_floors.0, p1, 0.0),
        Inequality::close("pinned column floor", A_REL_SIFT, rep.mass_floors.1, p2, 0.0),
    ]
}

fn relative_sifting_suite(seed: u64) -> Outcome {
    let (f, t, tau, k, eps, alpha) = relative_instance(seed);
    if alpha <= 0.0 {
        return Outcome::Skip("zero norm".into());
    }
    let maj = must!(SpreadMajorant::new(f.rows(), f.cols(), t, tau, 1e-6));
    let rep = attempt!(sift::relative_sift(&f, &maj, k, eps, alpha));
    judge(relative_audit(&f, &rep, tau, k, eps, alpha))
}

// ---------------------------------------------------------------- Behrend

pub const A_APFREE: &str = "Behrend sets contain no three-term progression";
pub const A_R3: &str = "Behrend sets reach half the largest progression-free size";
pub const A_CORNERFREE: &str = "lifts x + 2y in B of progression-free sets are corner-free";

/// Checks for `behrend_apfree(n)`; the optimum comparison runs for `n <= 20`
/// and the lift for `n <= 64`.
pub fn behrend_checks(n: usize) -> corners_lab_core::Result<Vec<Inequality>> {
    let b = corners::behrend_apfree(n)?;
    let mut out = vec![Inequality::flag("progression-free", A_APFREE, !oracles::has_3ap(&b))];
    if n <= 20 {
        let opt = oracles::r3_max(n);
        out.push(Inequality::at_least("half the optimum", A_R3, b.card() as f64, 0.5 * opt as f64, 0.0));
    }
    if n <= 64 {
        let a = corners::cornerfree_from_apfree(&b)?;
        let (count, _) = corners::count_corners_grid(n, &a)?;
        let (g, img) = corners::embed_grid_cyclic(n, &a)?;
        let cyclic = corners::count_corners(&g, &img)?.count;
        out.push(Inequality::equal("grid corners", A_CORNERFREE, count, 0));
        out.push(Inequality::equal("grid corners (recomputed)", A_CORNERFREE, oracles::grid_corner_count(n, &a), 0));
        out.push(Inequality::equal("cyclic corners", A_CORNERFREE, cyclic, 0));
    }
    Ok(out)
}

fn behrend_suite(seed: u64) -> Outcome {
    judge(must!(behrend_checks(1 + (seed % 4096) as usize)))
}

// -------------------------------------------------------------------- NOF

pub const A_PROTOCOL: &str = "the compiled protocol accepts exactly when x + y + z = N";
pub const A_BITS: &str = "the protocol sends at most 3 ceil(log2 L) + 3 bits";
pub const A_CLASSES: &str = "every colour class of the cover is corner-free";

pub fn ceil_log2(l: u32) -> u32 {
    if l <= 1 { 0 } else { 32 - (l - 1).leading_zeros() }
}

/// A monochromatic corner in a coloring of `[N] x [N]`, either sign of `d`.
pub fn mono_grid_corner(n: usize, col: &Coloring) -> bool {
    for x in 0..n {
        for y in 0..n {
            let Some(c) = col.color(x * n + y) else { continue };
            for d in 1..n {
                let same = |p: usize| col.color(p) == Some(c);
                if x + d < n && y + d < n && same((x + d) * n + y) && same(x * n + y + d) {
                    return true;
                }
                if x >= d && y >= d && same((x - d) * n + y) && same(x * n + y - d) {
                    return true;
                }
            }
        }
    }
    false
}

/// Cover, compile and exhaustively replay for one `(N, seed)`.
///
/// Returns the inequalities and the cover report.
pub fn nof_checks(n: usize, seed: u64) -> corners_lab_core::Result<(Vec<Inequality>, nof::CoverReport)> {
    let b = corners::behrend_apfree(n)?;
    let a = corners::cornerfree_from_apfree(&b)?;
    let (col, cover) = nof::coloring_from_cornerfree(&a, n, seed)?;
    let proto = nof::compile_cfl_protocol(&col, n)?;
    let bound = 3 * ceil_log2(col.num_colors()) + 3;
    let (mut wrong, mut max_bits) = (0u64, 0u32);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let t = proto.run(x, y, z)?;
                wrong += (t.accept != (x + y + z == n)) as u64;
                max_bits = max_bits.max(t.bits_total);
            }
        }
    }
    let out = vec![
        Inequality::flag("total colouring", A_CLASSES, col.is_total()),
        Inequality::flag("classes corner-free", A_CLASSES, !mono_grid_corner(n, &col)),
        Inequality::equal("wrong answers", A_PROTOCOL, wrong, 0),
        Inequality::at_most("bits sent", A_BITS, max_bits as f64, bound as f64, 0.0),
    ];
    Ok((out, cover))
}

fn nof_suite(seed: u64) -> Outcome {
    let (q, _) = must!(nof_checks(1 + (seed % 64) as usize, seed / 64));
    judge(q)
}

// -------------------------------------------------------------- increment

pub const A_ITERATIONS: &str = "the increment loop stops within C log(1/alpha)/eps iterations";
pub const A_SPREADNESS: &str = "obtaining spreadness: the final container satisfies all six conclusions";
pub const A_PSEUDO: &str = "pseudorandomization: each step satisfies the five conclusions";
pub const A_VNL: &str = "corner counting: small grid norms and no sparse rows give many corners";
pub const A_STATE: &str = "A stays inside its container and keeps its reported density";

/// `(n, A)` for seed `seed`: `n in {4, 5, 6}`, density in `[0.1, 0.6)`.
pub fn increment_instance(seed: u64) -> (usize, SubsetInd) {
    let mut r = rng(seed);
    let n = 4 + (seed % 3) as usize;
    let p = r.gen_range(0.1..0.6);
    (n, random_subset(&mut r, 1 << (2 * n), p))
}

pub const INCREMENT_PARAMS: (usize, u32, u32, f64) = (1, 2, 2, 0.05);

fn state_checks(st: &IncrementState, original: &SubsetInd) -> Vec<Inequality> {
    let c = st.container();
    let side = 1usize << c.n();
    let inside = st.a().iter().all(|q| {
        let (x, y) = (q / side, q % side);
        original.contains(q) && c.x().contains(x) && c.y().contains(y) && c.d().contains(x ^ y)
    });
    let mut size = 0usize;
    for x in c.x().iter() {
        for y in c.y().iter() {
            size += c.d().contains(x ^ y) as usize;
        }
    }
    let alpha = st.a().card() as f64 / size as f64;
    vec![
        Inequality::flag("A inside S(X,Y,D)", A_STATE, inside),
        Inequality::close("density", A_STATE, st.alpha(), alpha, 1e-12),
    ]
}

/// Checks of one `obtain_spreadness` run, with the final state.
pub fn spreadness_checks(n: usize, a: &SubsetInd) -> corners_lab_core::Result<(Vec<Inequality>, IncrementState)> {
    let (r, s, t, eps) = INCREMENT_PARAMS;
    let (st, rep) = increment::obtain_spreadness(a, n, r, s, t, eps)?;
    let mut out = vec![Inequality::at_most("iterations", A_ITERATIONS, rep.iterations as f64, rep.iteration_bound as f64, 0.0)];
    for c in &rep.conclusions {
        let name = format!("conclusion {}", c.index);
        out.push(if c.index == 1 {
            Inequality::from_upper(&name, A_SPREADNESS, &c.check)
        } else {
            Inequality::from_lower(&name, A_SPREADNESS, &c.check)
        });
    }
    // Pseudorandomization runs at eps / 2 inside the loop.
    let e = eps / 2.0;
    for p in &rep.steps {
        out.push(Inequality::at_most("dimension drop", A_PSEUDO, p.dim_drop as f64, r as f64 / (e * e), 0.0));
        out.push(Inequality::from_lower("D density", A_PSEUDO, &p.d_density));
        out.push(Inequality::from_lower("X Y product density", A_PSEUDO, &p.product_density));
        out.push(Inequality::flag("X and Y spread", A_PSEUDO, p.spread));
        out.push(Inequality::from_lower("density of A", A_PSEUDO, &p.density));
    }
    out.extend(state_checks(&st, a));
    Ok((out, st))
}

fn spreadness_suite(seed: u64) -> Outcome {
    let (n, a) = increment_instance(seed);
    let (q, _) = must!(spreadness_checks(n, &a));
    judge(q)
}

/// `Phi(1_A, 1_A, 1_A)` over the container's subspace, in original coordinates.
pub fn brute_phi(st: &IncrementState) -> f64 {
    let c = st.container();
    let side = 1usize << c.n();
    let w = c.w().members();
    let a = st.a();
    let mut count = 0u64;
    for q in a.iter() {
        let (x, y) = (q / side, q % side);
        for &d in &w {
            let d = d as usize;
            count += (a.contains((x ^ d) * side + y) && a.contains(x * side + (y ^ d))) as u64;
        }
    }
    count as f64 / (w.len() as f64).powi(3)
}

/// Von Neumann check after the loop; `None` when a hypothesis fails.
pub fn vnl_checks(n: usize, a: &SubsetInd) -> corners_lab_core::Result<Option<Vec<Inequality>>> {
    let (r, s, t, eps) = INCREMENT_PARAMS;
    let (st, _) = increment::obtain_spreadness(a, n, r, s, t, eps)?;
    let rep = increment::von_neumann_check(&st, eps, 2)?;
    if !rep.hypotheses.iter().all(|&h| h) {
        return Ok(None);
    }
    let phi = brute_phi(&st);
    Ok(Some(vec![
        Inequality::close("corner density", A_VNL, rep.phi, phi, 1e-12),
        Inequality::at_least("corner lower bound", A_VNL, phi, rep.bound, 1e-12),
    ]))
}

fn vnl_suite(seed: u64) -> Outcome {
    let (n, a) = increment_instance(seed);
    match must!(vnl_checks(n, &a)) {
        Some(q) => judge(q),
        None => Outcome::Skip(HYPOTHESIS.into()),
    }
}

// ------------------------------------------------------------------- Bohr

pub const A_REGULAR: &str = "regular dilates pass the breakpoint regularity test";
pub const A_BOHR_SIZE: &str = "Bohr sets have at least rho^d |G| elements";
pub const A_SEQUENCE: &str = "consecutive radii of an exact Bohr sequence have ratio in [eta/2, eta]";

/// Random Bohr set over `Z/NZ`, `N <= 1024`, rank 1 to 3.
pub fn bohr_regular_instance(seed: u64) -> (u64, Vec<u64>, Ratio<u64>) {
    let mut r = rng(seed);
    let n = r.gen_range(16..=1024u64);
    let d = r.gen_range(1..=3usize);
    let freqs: Vec<u64> = (0..d).map(|_| r.gen_range(1..n)).collect();
    let den = r.gen_range(8..=200u64);
    let num = r.gen_range(1..=den / 2);
    (n, freqs, Ratio::new(num, den))
}

fn size_check(b: &BohrSet, name: &str) -> Inequality {
    let bound = oracles::bohr_size_bound(b.card(), b.group().order(), b.rank(), b.radius());
    let lhs = b.card() as f64;
    let rhs = b.radius_f64().powi(b.rank() as i32) * b.group().order() as f64;
    let mut q = Inequality::at_least(name, A_BOHR_SIZE, lhs, rhs, 0.0);
    q.holds = bound == Some(true);
    q
}

pub fn bohr_regular_checks(n: u64, freqs: &[u64], radius: Ratio<u64>) -> corners_lab_core::Result<Vec<Inequality>> {
    let g = Group::cyclic(n)?;
    let fs: Vec<Vec<u64>> = freqs.iter().map(|&a| vec![a]).collect();
    let b = BohrSet::from_freqs(g, &fs, radius)?;
    let reg = b.find_regular_dilate()?;
    let ratio = reg.radius() / radius;
    let mut out = vec![
        Inequality::flag("regular (recomputed)", A_REGULAR, oracles::bohr_regular(n, freqs, reg.radius())),
        Inequality::flag("dilate in [1/2, 1]", A_REGULAR, ratio >= Ratio::new(1, 2) && ratio <= Ratio::new(1, 1)),
        size_check(&b, "size bound"),
        size_check(&reg, "size bound of the dilate"),
    ];
    let eta = Ratio::new(1, 4);
    match bohr::make_sequence(&reg, eta, 4, Exactness::Exact) {
        Ok(seq) => {
            let ok = seq.ratios().iter().all(|&q| q >= eta / 2 && q <= eta);
            out.push(Inequality::flag("sequence ratios", A_SEQUENCE, ok));
            out.push(Inequality::flag("sequence verifies", A_SEQUENCE, seq.verify()));
            for (i, s) in seq.sets.iter().enumerate() {
                out.push(size_check(s, &format!("size bound of set {}", i + 1)));
            }
        }
        Err(Error::Precondition(_)) | Err(Error::NotFound(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn bohr_regular_suite(seed: u64) -> Outcome {
    let (n, freqs, radius) = bohr_regular_instance(seed);
    judge(attempt!(bohr_regular_checks(n, &freqs, radius)))
}

// ------------------------------------------------------------- nonabelian

pub const A_PROJECTION: &str = "projections of a corner-free set onto an abelian subgroup are corner-free";
pub const A_LIFT: &str = "the lift of A has a corner exactly when u v = w^2 has a nontrivial solution in A";

/// Random `A` in `t`, made corner-free greedily, then every projection onto
/// the largest abelian subgroup checked by the oracle.
pub fn projection_checks(
    t: &corners_lab_core::group::GroupTable,
    variant: CornerVariant,
    seed: u64,
) -> corners_lab_core::Result<Vec<Inequality>> {
    let mut r = rng(seed);
    let n = t.order();
    let p = r.gen_range(0.2..0.7);
    let mut a = random_subset(&mut r, n * n, p);
    while let Some((x, y, _)) = corners::find_bmz_corner(t, &a, variant)? {
        a.remove(x * n + y);
    }
    let h = t.largest_abelian_subgroup()?;
    let ht = t.subgroup_table(&h)?;
    let mut bad = 0u64;
    for x in 0..n {
        for y in 0..n {
            let p = corners::projection_set(t, &a, &h, x, y, variant)?;
            bad += oracles::table_corner(&ht, &p, CornerVariant::Naive) as u64;
        }
    }
    Ok(vec![
        Inequality::flag("A corner-free (recomputed)", A_PROJECTION, !oracles::table_corner(t, &a, variant)),
        Inequality::equal("projections with corners", A_PROJECTION, bad, 0),
    ])
}

pub fn nonabelian_checks(seed: u64) -> corners_lab_core::Result<Vec<Inequality>> {
    let tables = instances::small_tables(8);
    let len = tables.len() as u64;
    let (_, t) = &tables[(seed % len) as usize];
    let variant = if seed / len % 2 == 0 { CornerVariant::Bmz } else { CornerVariant::Naive };
    projection_checks(t, variant, seed)
}

fn nonabelian_suite(seed: u64) -> Outcome {
    judge(must!(nonabelian_checks(seed)))
}

/// Lift equivalence for the subset `mask` of a table.
pub fn lift_check(t: &corners_lab_core::group::GroupTable, mask: u64) -> corners_lab_core::Result<Inequality> {
    let n = t.order();
    let a = SubsetInd::from_indices(n, (0..n).filter(|i| mask >> i & 1 == 1))?;
    let s = corners::roth_nonabelian_lift(t, &a)?;
    let corner = oracles::table_corner(t, &s, CornerVariant::Naive);
    let relation = oracles::square_relation(t, &a);
    Ok(Inequality::flag("lift equivalence", A_LIFT, corner == relation))
}

fn lift_suite(seed: u64) -> Outcome {
    let tables = instances::small_tables(12);
    let (_, t) = &tables[(seed % tables.len() as u64) as usize];
    let mut r = rng(seed);
    let mask = r.gen::<u64>() & ((1u64 << t.order()) - 1);
    judge(vec![must!(lift_check(t, mask))])
}

// ---------------------------------------------------------------- cylinder

pub const A_CYLINDER: &str = "colour removal: A' is the cylinder of the projected slice and lies in A";
pub const A_COLOUR: &str = "colour removal: at most U + |G|^2 points of A' keep colour c or are uncoloured";
pub const A_INJECTION: &str = "colour removal: |A'| is at least the number of corners of S'_XY";
pub const A_PIGEONHOLE: &str = "colour removal: the chosen slice has at least (|A| - U)/(L |G|) points";

/// A cylinder and a colouring without monochromatic 3D corners on it.
///
/// Colours are functions of `x + y + z`; merging two sums is kept only if the
/// merged colouring still has no monochromatic corner on the cylinder.
pub fn cylinder_instance(seed: u64) -> (Group, CylinderIntersection, Coloring) {
    const GROUPS: [&str; 10] = ["Z2", "Z3", "Z4", "Z5", "Z6", "Z7", "Z8", "F2^2", "F2^3", "Z2xZ4"];
    let g = Group::parse(GROUPS[(seed % GROUPS.len() as u64) as usize]).expect("valid descriptor");
    let m = g.order();
    let mut r = rng(seed);
    let dens = r.gen_range(0.5..=1.0);
    let mut side = || {
        let mut s = random_subset(&mut r, m * m, dens);
        for i in 0..m {
            s.insert(i * m + i);
        }
        s
    };
    let cyl = CylinderIntersection::new(m, side(), side(), side()).expect("sizes agree");
    let members = cyl.members();
    let mut r = rng(seed ^ 0x5eed);
    let mut palette: Vec<u32> = (0..m as u32).collect();
    let merges = r.gen_range(0..=m / 2);
    let blank = r.gen_range(0.0..0.3);
    let colour = |palette: &[u32], r: &mut rand_chacha::ChaCha8Rng| {
        let cells = (0..m * m * m)
            .map(|p| {
                let (x, y, z) = (p / (m * m), p / m % m, p % m);
                (members.contains(p) && !r.gen_bool(blank)).then(|| palette[g.add(g.add(x, y), z)])
            })
            .collect();
        Coloring::new(cells, m as u32).expect("palette in range")
    };
    let mut col = colour(&palette, &mut r);
    for _ in 0..merges {
        let (i, j) = (r.gen_range(0..m), r.gen_range(0..m));
        let (target, source) = (palette[i], palette[j]);
        let trial: Vec<u32> = palette.iter().map(|&v| if v == source { target } else { v }).collect();
        let cand = colour(&trial, &mut r);
        if !oracles::mono_3d_corner(&g, &cand) {
            palette = trial;
            col = cand;
        }
    }
    (g, cyl, col)
}

/// One restriction step: the kernel result and every conclusion recomputed.
///
/// Returns `None` when no point of the cylinder is coloured.
pub fn restrict_step(
    g: &Group,
    a: &CylinderIntersection,
    f: &Coloring,
) -> corners_lab_core::Result<Option<(CylinderIntersection, Coloring, nof::RestrictReport, Vec<Inequality>)>> {
    let m = g.order();
    let members = a.members();
    if members.iter().all(|p| f.color(p).is_none()) {
        return Ok(None);
    }
    let on_a: Vec<Option<u32>> = (0..m * m * m).map(|p| if members.contains(p) { f.color(p) } else { None }).collect();
    let fa = Coloring::new(on_a, f.num_colors())?;
    let mut out = vec![Inequality::flag("no monochromatic 3D corner", A_CYLINDER, !oracles::mono_3d_corner(g, &fa))];
    let (a2, f2, rep) = nof::restrict_cylinder(g, a, f)?;
    let members2 = a2.members();
    let mut by_def = SubsetInd::empty(m * m * m);
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                if a2.s_xy.contains(x * m + y) && a2.s_yz.contains(y * m + z) && a2.s_xz.contains(x * m + z) {
                    by_def.insert((x * m + y) * m + z);
                }
            }
        }
    }
    let nested = a2.s_xy.is_subset_of(&a.s_xy) && a2.s_yz.is_subset_of(&a.s_yz) && a2.s_xz.is_subset_of(&a.s_xz);
    out.push(Inequality::flag("projections nested", A_CYLINDER, nested));
    out.push(Inequality::flag("A' is the cylinder", A_CYLINDER, by_def == members2 && members2.is_subset_of(&members)));
    let uncolored = members.iter().filter(|&p| fa.color(p).is_none()).count();
    let c_or_star = members2.iter().filter(|&p| fa.color(p).is_none() || fa.color(p) == Some(rep.color)).count();
    out.push(Inequality::at_most("colour c or uncoloured", A_COLOUR, c_or_star as f64, (uncolored + m * m) as f64, 0.0));
    let corners = oracles::corners_with_trivial(g, &a2.s_xy);
    out.push(Inequality::at_least("corner injection", A_INJECTION, members2.card() as f64, corners as f64, 0.0));
    out.push(Inequality::equal("reported corners", A_INJECTION, rep.corners_2d as u64, corners));
    let pigeon = (members.card() - uncolored) as f64 / (fa.num_colors() as f64 * m as f64);
    out.push(Inequality::at_least("slice size", A_PIGEONHOLE, rep.t_size as f64, pigeon, 0.0));
    Ok(Some((a2, f2, rep, out)))
}

/// Up to three restriction steps, each recomputed from the definitions.
pub fn cylinder_checks(g: &Group, cyl: &CylinderIntersection, col: &Coloring) -> corners_lab_core::Result<Vec<Inequality>> {
    let (mut a, mut f) = (cyl.clone(), col.clone());
    let mut out = Vec::new();
    for _ in 0..3 {
        let Some((a2, f2, _, q)) = restrict_step(g, &a, &f)? else { break };
        out.extend(q);
        if a2.members().is_empty() {
            break;
        }
        a = a2;
        f = f2;
    }
    Ok(out)
}

fn cylinder_suite(seed: u64) -> Outcome {
    let (g, cyl, col) = cylinder_instance(seed);
    judge(must!(cylinder_checks(&g, &cyl, &col)))
}
