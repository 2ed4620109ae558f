// SPDX-License-Identifier: MIT OR Apache-2.0
use std::path::PathBuf;
use std::process::{Command, Output};

use corners_lab::instances::{random_subset, rng};
use corners_lab::io::{self, CylinderFile, ColoringFile, SetFile};
use corners_lab_core::group::Group;
use corners_lab_core::nof::{Coloring, CylinderIntersection};
use corners_lab_core::setfun::{GridFunction, SubsetInd};
use serde_json::Value;

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corners-lab")).args(args).env_remove("CORNERS_LAB_THREADS").output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn p(path: &PathBuf) -> &str {
    path.to_str().unwrap()
}

#[test]
fn full_z5_has_100_corners() {
    let set = tmp("full_z5.json");
    io::write_json(&set, &SetFile::subset("Z5", &SubsetInd::full(25))).unwrap();
    let out = lab(&["corners", "count", "--group", "Z5", "--set", p(&set)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["outputs"]["count"], 100);
    assert_eq!(r["status"], "pass");
    assert!(r.get("timing_ms").is_none());
}

#[test]
fn constant_half_grid_norm() {
    let grid = tmp("const_half.json");
    io::write_json(&grid, &SetFile::grid(&GridFunction::constant(5, 7, 0.5).unwrap())).unwrap();
    let out = lab(&["gridnorm", "--grid", p(&grid), "--k", "3", "--l", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out)["outputs"]["value"].as_f64().unwrap();
    assert!((v - 0.5).abs() < 1e-12);
}

#[test]
fn monte_carlo_report_carries_seed_and_stderr() {
    let grid = tmp("mc_grid.json");
    io::write_json(&grid, &SetFile::grid(&GridFunction::constant(4, 4, 0.25).unwrap())).unwrap();
    let r = report(&lab(&["gridnorm", "--grid", p(&grid), "--k", "2", "--l", "2", "--mc", "500", "9"]));
    assert_eq!(r["seed"], 9);
    assert_eq!(r["outputs"]["mode"], "monte_carlo");
    assert!(r["outputs"]["stderr"].is_number());
}

#[test]
fn increment_run_writes_trace() {
    let mut r = rng(4);
    let set = tmp("increment_a.json");
    io::write_json(&set, &SetFile::subset("F2^4", &random_subset(&mut r, 256, 0.3))).unwrap();
    let trace = tmp("increment_trace.json");
    let args = ["increment", "run", "--n", "4", "--set", p(&set), "--r", "1", "--s", "2", "--t", "2", "--eps", "0.05", "--vnl", "2"];
    let mut args: Vec<&str> = args.to_vec();
    args.extend(["--trace", p(&trace)]);
    let out = lab(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(&out);
    assert_eq!(rep["outputs"]["conclusions"].as_array().unwrap().len(), 6);
    let (t, _): (Value, _) = io::read_json(&trace).unwrap();
    assert!(t["steps"].is_array());
}

#[test]
fn unknown_suite_exits_2() {
    assert_eq!(lab(&["verify", "no-such-suite", "--seeds", "3"]).status.code(), Some(2));
}

#[test]
fn malformed_inputs_exit_2() {
    let bad = tmp("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(lab(&["corners", "count", "--group", "Z5", "--set", p(&bad)]).status.code(), Some(2));
    let set = tmp("z6.json");
    io::write_json(&set, &SetFile::subset("Z6", &SubsetInd::full(36))).unwrap();
    assert_eq!(lab(&["corners", "count", "--group", "Z5", "--set", p(&set)]).status.code(), Some(2));
    assert_eq!(lab(&["gridnorm", "--k", "2"]).status.code(), Some(2));
}

#[test]
fn edited_constant_table_is_refused() {
    let table = tmp("constants.json");
    let text = corners_lab::constants::TABLE.replace("\"sift.C_SIFT\": 2.0", "\"sift.C_SIFT\": 3.0");
    assert_ne!(text, corners_lab::constants::TABLE);
    std::fs::write(&table, text).unwrap();
    let grid = tmp("const_for_table.json");
    io::write_json(&grid, &SetFile::grid(&GridFunction::constant(2, 2, 1.0).unwrap())).unwrap();
    let out = lab(&["--constants", p(&table), "gridnorm", "--grid", p(&grid), "--k", "1", "--l", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sifting_suite_passes_100_seeds() {
    let r = report(&lab(&["verify", "sifting", "--seeds", "100"]));
    assert_eq!(r["outputs"]["passed"], 100);
    assert!(!r["inequalities"].as_array().unwrap().is_empty());
}

#[test]
fn vnl_suite_separates_skips() {
    let out = lab(&["verify", "vnl", "--seeds", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let o = &report(&out)["outputs"];
    assert_eq!(o["failed"], 0);
    assert_eq!(o["passed"].as_u64().unwrap() + o["skipped"].as_u64().unwrap(), 100);
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let a = lab(&["verify", "relative-sifting", "--seeds", "40", "--threads", "1"]);
    let b = lab(&["verify", "relative-sifting", "--seeds", "40", "--threads", "4"]);
    let c = lab(&["verify", "relative-sifting", "--seeds", "40"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn behrend_lift_and_protocol_round_trip() {
    let b = tmp("behrend_24.json");
    let lift = tmp("lift_24.json");
    assert_eq!(lab(&["corners", "behrend", "--n", "24", "--out", p(&b)]).status.code(), Some(0));
    let out = lab(&["corners", "lift", "--apfree", p(&b), "--out", p(&lift)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["inequalities"][0]["lhs"], 0.0);
    let lines = tmp("transcripts_24.jsonl");
    let out = lab(&["nof", "compile", "--n", "24", "--cornerfree", p(&lift), "--seed", "7", "--verify", "--transcripts", p(&lines)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["outputs"]["verified"]["inputs"], 24 * 24 * 24);
    let text = std::fs::read_to_string(&lines).unwrap();
    assert_eq!(text.lines().count(), 24 * 24 * 24);
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["inputs"], serde_json::json!([0, 0, 0]));
}

#[test]
fn restrict_step_from_files() {
    let g = Group::cyclic(4).unwrap();
    let m = 4;
    let cyl = CylinderIntersection::full(m);
    // Colour by x + y + z: no monochromatic 3D corner since d != 0 shifts the sum.
    let cells = (0..m * m * m).map(|p| Some(g.add(g.add(p / 16, p / 4 % 4), p % 4) as u32)).collect();
    let col = Coloring::new(cells, 4).unwrap();
    let (c, f) = (tmp("cyl_z4.json"), tmp("col_z4.json"));
    io::write_json(&c, &CylinderFile::new(&g, &cyl)).unwrap();
    io::write_json(&f, &ColoringFile::new("Z4", &col)).unwrap();
    let out = lab(&["nof", "restrict", "--cyl", p(&c), "--coloring", p(&f)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let one = Coloring::new(vec![Some(0); 64], 1).unwrap();
    io::write_json(&f, &ColoringFile::new("Z4", &one)).unwrap();
    assert_eq!(lab(&["nof", "restrict", "--cyl", p(&c), "--coloring", p(&f)]).status.code(), Some(3));
}

#[test]
fn spread_certificates_recheck() {
    let mut r = rng(11);
    let x = tmp("alg_x.json");
    io::write_json(&x, &SetFile::subset("F2^5", &random_subset(&mut r, 32, 0.5))).unwrap();
    let out = lab(&["spread", "alg", "--set", p(&x), "--r", "1", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert!(rep["outputs"]["verdict"] == "spread" || rep["inequalities"].as_array().unwrap().len() == 2);
    let out = lab(&["spread", "comb", "--set", p(&tmp("alg_x.json")), "--tau", "0.5", "--gamma", "0.1", "--heuristic"]);
    assert_eq!(out.status.code(), Some(2), "heuristic search needs a seed");
}
