// SPDX-License-Identifier: MIT OR Apache-2.0
//! Argument parsing and dispatch for the `corners-lab` binary.
//!
//! Every subcommand produces one [`Report`]. The process exits 0 when all
//! asserted inequalities hold, 1 when one fails, and 2 or 3 on parse errors
//! and refusals (see [`crate::error`]).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use corners_lab_core::bohr::{self, BohrSet, Exactness, PoolSearch};
use corners_lab_core::corners;
use corners_lab_core::gridnorm::{self, NormMode};
use corners_lab_core::group::{AffineSubspace, Character, Group};
use corners_lab_core::increment;
use corners_lab_core::nof::{self, Transcript};
use corners_lab_core::setfun::{GridFunction, SubsetInd};
use corners_lab_core::sift::{self, SpreadMajorant};
use corners_lab_core::spread::{self, AlgMode, BilinearMode, Counterexample, Coverage, SpreadCertificate};
use serde_json::{json, Value};

use crate::constants;
use crate::error::{parse_err, LabError, Result, EXIT_ASSERTION, EXIT_OK, EXIT_PARSE};
use crate::io::{self, BohrFile, ColoringFile, CylinderFile, Domain, SetFile};
use crate::report::{InputDigest, Inequality, Report, Status};
use crate::suites;

#[derive(Debug, Parser)]
#[command(name = "corners-lab", version, about = "Exact, oracle-checked experiments on corner-free sets")]
pub struct Cli {
    /// Worker threads for parallel kernels; results do not depend on it.
    #[arg(long, global = true, env = "CORNERS_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Constant table to check against the compiled constants.
    #[arg(long, global = true, value_name = "PATH")]
    pub constants: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Absolute tolerance for recomputed equalities in reports.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Record wall-clock time in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corner counts, Behrend sets and lifts.
    #[command(subcommand)]
    Corners(CornersCmd),
    /// Grid norms, exact or sampled.
    Gridnorm(GridnormArgs),
    /// Sifting witnesses.
    #[command(subcommand)]
    Sift(SiftCmd),
    /// Spreadness testers and extraction.
    #[command(subcommand)]
    Spread(SpreadCmd),
    /// Bohr sets.
    #[command(subcommand)]
    Bohr(BohrCmd),
    /// The density-increment loop over F2^n.
    #[command(subcommand)]
    Increment(IncrementCmd),
    /// Number-on-forehead protocols and cylinder restriction.
    #[command(subcommand)]
    Nof(NofCmd),
    /// Run a seeded property suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum CornersCmd {
    /// Count corners of a subset of G x G.
    Count {
        #[arg(long)]
        group: String,
        #[arg(long)]
        set: PathBuf,
    },
    /// Build a progression-free subset of [N].
    Behrend {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lift a progression-free set to a corner-free subset of [N] x [N].
    Lift {
        #[arg(long)]
        apfree: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GridnormArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub l: u32,
    /// Monte Carlo estimate from SAMPLES tuples drawn with SEED.
    #[arg(long, num_args = 2, value_names = ["SAMPLES", "SEED"])]
    pub mc: Option<Vec<u64>>,
}

#[derive(Debug, Subcommand)]
pub enum SiftCmd {
    /// Plain sifting of a nonnegative grid function.
    Run {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        eps: f64,
        /// Defaults to the (k, l) grid norm.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Sifting relative to a spread majorant T.
    Relative {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        majorant: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        eps: f64,
        /// Defaults to the (2, k) grid norm divided by tau, capped at 1.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct BilinearArgs {
    /// Use the alternating heuristic instead of exact search.
    #[arg(long)]
    pub heuristic: bool,
    /// Seed for the heuristic restarts.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum SpreadCmd {
    /// Combinatorial spreadness of T in a rectangle.
    Comb {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        mode: BilinearArgs,
    },
    /// Algebraic spreadness of X in F2^n.
    Alg {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        eps: f64,
        /// Sample this many subspaces instead of enumerating.
        #[arg(long, requires = "seed")]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Asymmetric (s, t, eps) spreadness of a grid function.
    Asym {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        mode: BilinearArgs,
    },
    /// l1 spreadness of a group function between two Bohr sets.
    L1 {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        b1: PathBuf,
        #[arg(long)]
        b2: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Descend to a subspace on which X is algebraically spread.
    Extract {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BohrCmd {
    /// Enumerate the members.
    Members {
        #[arg(long)]
        bohr: PathBuf,
    },
    /// Test regularity exactly.
    Regular {
        #[arg(long)]
        bohr: PathBuf,
    },
    /// Find a regular dilate with factor in [1/2, 1].
    Dilate {
        #[arg(long)]
        bohr: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a sequence of regular dilates.
    Sequence {
        #[arg(long)]
        bohr: PathBuf,
        /// Target ratio, e.g. "1/4".
        #[arg(long)]
        eta: String,
        #[arg(long)]
        len: usize,
        /// Only require ratios at most eta.
        #[arg(long)]
        small: bool,
    },
    /// Pool-relative algebraic spreadness of X inside a Bohr set.
    Spread {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        bohr: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        eta_s: String,
        #[arg(long)]
        eps: f64,
        /// Candidate frequencies as JSON, e.g. "[[3],[5]]".
        #[arg(long, default_value = "[]")]
        pool: String,
        /// Run the extraction loop instead of a single test.
        #[arg(long)]
        extract: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum IncrementCmd {
    /// Run the loop on A inside F2^n x F2^n and verify its conclusions.
    Run {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        t: u32,
        #[arg(long)]
        eps: f64,
        /// Write every step with its asserted quantities.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also run the corner-counting check with this grid-norm parameter.
        #[arg(long)]
        vnl: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum NofCmd {
    /// Cover [N] x [N] by translates of a corner-free set and compile the protocol.
    Compile {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cornerfree: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Replay all N^3 inputs.
        #[arg(long)]
        verify: bool,
        /// Write every transcript as one JSON line.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Write the coloring.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One colour-removal step on a coloured cylinder intersection.
    Restrict {
        #[arg(long)]
        cyl: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long)]
        out_cyl: Option<PathBuf>,
        #[arg(long)]
        out_coloring: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: String,
    #[arg(long)]
    pub seeds: u64,
    /// First seed of the run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// What a command contributes to its report.
struct Output {
    subcommand: &'static str,
    seed: Option<u64>,
    digest: InputDigest,
    outputs: Value,
    inequalities: Vec<Inequality>,
}

impl Output {
    fn new(subcommand: &'static str, digest: InputDigest, outputs: Value, inequalities: Vec<Inequality>) -> Self {
        Self { subcommand, seed: None, digest, outputs, inequalities }
    }

    fn seeded(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }
}

/// Parses the process arguments, runs and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("corners-lab: {e}");
            e.exit_code()
        }
    }
}

/// Runs and writes the report; returns 0 or 1.
pub fn execute(cli: &Cli) -> Result<i32> {
    let report = run(cli)?;
    let text = io::to_json_pretty(&report);
    match &cli.report {
        Some(p) => io::write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_ASSERTION })
}

pub fn run(cli: &Cli) -> Result<Report> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(parse_err("--threads must be positive"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (_, constants_digest) = constants::load(cli.constants.as_deref())?;
    let start = Instant::now();
    let out = dispatch(cli)?;
    let elapsed = start.elapsed().as_millis();
    let status = if out.inequalities.iter().all(|q| q.holds) { Status::Pass } else { Status::Fail };
    Ok(Report {
        subcommand: out.subcommand.to_string(),
        seed: out.seed,
        inputs_digest: out.digest.finish(),
        constants_digest,
        outputs: out.outputs,
        inequalities: out.inequalities,
        status,
        timing_ms: cli.timing.then_some(elapsed),
    })
}

fn dispatch(cli: &Cli) -> Result<Output> {
    let tol = cli.tol;
    match &cli.command {
        Command::Corners(c) => corners_cmd(c),
        Command::Gridnorm(a) => gridnorm_cmd(a),
        Command::Sift(c) => sift_cmd(c, tol),
        Command::Spread(c) => spread_cmd(c, tol),
        Command::Bohr(c) => bohr_cmd(c, tol),
        Command::Increment(c) => increment_cmd(c),
        Command::Nof(c) => nof_cmd(c),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn load<T: serde::de::DeserializeOwned>(d: &mut InputDigest, name: &str, path: &Path) -> Result<T> {
    let (v, bytes) = io::read_json(path)?;
    d.file(name, &bytes);
    Ok(v)
}

fn indices(s: &SubsetInd) -> Vec<usize> {
    s.to_vec()
}

fn subspace_json(w: &AffineSubspace) -> Value {
    json!({ "ambient_dim": w.ambient_dim(), "basis": w.basis(), "shift": w.shift() })
}

fn certificate_json(c: &SpreadCertificate) -> Value {
    let coverage = match c.coverage {
        Coverage::Exhaustive => json!({ "kind": "exhaustive" }),
        Coverage::Heuristic { restarts } => json!({ "kind": "heuristic", "restarts": restarts, "verified": false }),
        Coverage::Sampled { samples } => json!({ "kind": "sampled", "samples": samples }),
        Coverage::PoolRelative { pool, radii, candidates } => {
            json!({ "kind": "pool_relative", "pool": pool, "radii": radii, "candidates": candidates })
        }
    };
    let cex = c.counterexample.as_ref().map(|x| match x {
        Counterexample::Rectangle { rows, cols } => json!({ "rows": indices(rows), "cols": indices(cols) }),
        Counterexample::Subspace(w) => subspace_json(w),
        Counterexample::Bohr { set, shift } => json!({ "bohr": BohrFile::from_set(set), "shift": shift }),
    });
    json!({
        "verdict": if c.is_spread() { "spread" } else { "not_spread" },
        "margin": c.margin,
        "coverage": coverage,
        "counterexample": cex,
    })
}

// ---------------------------------------------------------------- corners

const A_BEHREND: &str = suites::A_APFREE;

fn corners_cmd(c: &CornersCmd) -> Result<Output> {
    let mut d = InputDigest::new();
    match c {
        CornersCmd::Count { group, set } => {
            d.arg("group", group);
            let g = Group::parse(group)?;
            let file: SetFile = load(&mut d, "set", set)?;
            let (fg, a) = file.pair_subset()?;
            if fg != g {
                return Err(parse_err(format!("set domain {} does not match --group {group}", fg.descriptor())));
            }
            let m = g.order();
            let rep = corners::count_corners(&g, &a)?;
            let f = GridFunction::from_subset(m, m, &a)?;
            let scaled = corners::phi_corner(&g, &f, &f, &f)? * (m as f64).powi(3);
            let ineqs = vec![Inequality::close(
                "corner form identity",
                suites::A_PHI,
                scaled,
                (rep.count + a.card() as u64) as f64,
                1e-6 * scaled.abs().max(1.0),
            )];
            let outputs = json!({
                "count": rep.count,
                "trivial": rep.trivial,
                "density": a.density(),
                "witness": rep.witness,
            });
            Ok(Output::new("corners count", d, outputs, ineqs))
        }
        CornersCmd::Behrend { n, out } => {
            d.arg("n", n);
            let (_, (k, dd, norm)) = corners::behrend_shell(*n)?;
            let b = corners::behrend_apfree(*n)?;
            let ap = corners::find_progression(&b);
            if let Some(p) = out {
                io::write_json(p, &SetFile::subset(n.to_string(), &b))?;
            }
            let outputs = json!({
                "n": n,
                "size": b.card(),
                "density": b.density(),
                "shell": { "digits": k, "d": dd, "norm": norm },
                "progression": ap,
            });
            let ineqs = vec![Inequality::flag("progression-free", A_BEHREND, ap.is_none())];
            Ok(Output::new("corners behrend", d, outputs, ineqs))
        }
        CornersCmd::Lift { apfree, out } => {
            let file: SetFile = load(&mut d, "apfree", apfree)?;
            let b = file.line_subset()?;
            let n = b.domain();
            if let Some([x, y, z]) = corners::find_progression(&b) {
                return Err(corners_lab_core::Error::HasProgression([x as i64, y as i64, z as i64]).into());
            }
            let a = corners::cornerfree_from_apfree(&b)?;
            let (count, witness) = corners::count_corners_grid(n, &a)?;
            let mut ineqs = vec![Inequality::equal("grid corners", suites::A_CORNERFREE, count, 0)];
            if n <= 1024 {
                let (g, img) = corners::embed_grid_cyclic(n, &a)?;
                ineqs.push(Inequality::equal("cyclic corners", suites::A_CORNERFREE, corners::count_corners(&g, &img)?.count, 0));
            }
            if let Some(p) = out {
                io::write_json(p, &SetFile::subset(format!("{n}x{n}"), &a))?;
            }
            let outputs = json!({ "n": n, "size": a.card(), "density": a.density(), "witness": witness });
            Ok(Output::new("corners lift", d, outputs, ineqs))
        }
    }
}

// --------------------------------------------------------------- gridnorm

fn gridnorm_cmd(a: &GridnormArgs) -> Result<Output> {
    let mut d = InputDigest::new();
    d.arg("k", a.k).arg("l", a.l);
    let file: SetFile = load(&mut d, "grid", &a.grid)?;
    let f = file.grid_function()?;
    let (mode, seed) = match a.mc.as_deref() {
        Some(&[samples, seed]) => {
            d.arg("samples", samples).arg("seed", seed);
            (NormMode::MonteCarlo { samples, seed }, Some(seed))
        }
        Some(_) => return Err(parse_err("--mc takes SAMPLES SEED")),
        None => (NormMode::Exact, None),
    };
    let est = gridnorm::grid_norm(&f, a.k, a.l, mode)?;
    let outputs = match mode {
        NormMode::Exact => json!({ "value": est.value, "power": est.power, "mode": "exact" }),
        NormMode::MonteCarlo { samples, .. } => json!({
            "value": est.value,
            "power": est.power,
            "mode": "monte_carlo",
            "samples": samples,
            "stderr": est.stderr,
            "power_stderr": est.power_stderr,
        }),
    };
    Ok(Output::new("gridnorm", d, outputs, Vec::new()).seeded(seed))
}

// ---------------------------------------------------------------- sifting

fn witness_json(w: &sift::SiftWitness) -> Value {
    json!({ "g1": w.g1, "g2": w.g2, "achieved": w.achieved, "masses": [w.masses.0, w.masses.1], "shift": w.shift })
}

fn sift_cmd(c: &SiftCmd, tol: f64) -> Result<Output> {
    let mut d = InputDigest::new();
    match c {
        SiftCmd::Run { grid, k, l, eps, alpha } => {
            d.arg("k", k).arg("l", l).arg("eps", eps).arg("alpha", format!("{alpha:?}"));
            let file: SetFile = load(&mut d, "grid", grid)?;
            let f = file.grid_function()?;
            let alpha = match alpha {
                Some(a) => *a,
                None => gridnorm::grid_norm(&f, *k, *l, NormMode::Exact)?.value,
            };
            let rep = sift::sift(&f, *k, *l, *eps, alpha)?;
            let mut ineqs = suites::sift_audit(&f, &rep, *k, *l, *eps, alpha);
            relax(&mut ineqs, tol);
            let mut outputs = witness_json(&rep.witness);
            outputs["alpha"] = json!(alpha);
            outputs["mass_floor"] = json!(rep.mass_floor);
            outputs["regime"] = json!("plain");
            Ok(Output::new("sift run", d, outputs, ineqs))
        }
        SiftCmd::Relative { grid, majorant, tau, gamma, k, eps, alpha } => {
            d.arg("tau", tau).arg("gamma", gamma).arg("k", k).arg("eps", eps).arg("alpha", format!("{alpha:?}"));
            let file: SetFile = load(&mut d, "grid", grid)?;
            let f = file.grid_function()?;
            let tfile: SetFile = load(&mut d, "majorant", majorant)?;
            let (rows, cols, t) = tfile.rect_subset()?;
            let alpha = match alpha {
                Some(a) => *a,
                None => (gridnorm::grid_norm_2k(&f, *k)? / tau).min(1.0),
            };
            let maj = SpreadMajorant::new(rows, cols, t, *tau, *gamma)?;
            let rep = sift::relative_sift(&f, &maj, *k, *eps, alpha)?;
            let mut ineqs = suites::relative_audit(&f, &rep, *tau, *k, *eps, alpha);
            relax(&mut ineqs, tol);
            let mut outputs = witness_json(&rep.witness);
            outputs["alpha"] = json!(alpha);
            outputs["mass_floors"] = json!([rep.mass_floors.0, rep.mass_floors.1]);
            outputs["regime"] = json!(format!("{:?}", rep.regime));
            Ok(Output::new("sift relative", d, outputs, ineqs))
        }
    }
}

/// Recomputed equalities get at least the command-line tolerance.
fn relax(ineqs: &mut [Inequality], tol: f64) {
    for q in ineqs.iter_mut().filter(|q| q.name.starts_with("reported")) {
        let gap = (q.lhs - q.rhs).abs();
        q.margin = tol - gap;
        q.holds = gap <= tol;
    }
}

// ------------------------------------------------------------- spreadness

const A_CERT: &str = "a not-spread certificate recomputes to a violation of the stated size";

fn bilinear(mode: &BilinearArgs, d: &mut InputDigest) -> Result<(BilinearMode, Option<u64>)> {
    if !mode.heuristic {
        return Ok((BilinearMode::Exact, None));
    }
    let Some(seed) = mode.seed else {
        return Err(parse_err("--heuristic needs --seed"));
    };
    d.arg("seed", seed);
    Ok((BilinearMode::Alternating { restarts: spread::DEFAULT_RESTARTS, seed }, Some(seed)))
}

fn recheck(cert: &SpreadCertificate, recomputed: Option<f64>, tol: f64) -> Vec<Inequality> {
    match recomputed {
        Some(m) => vec![
            Inequality::close("counterexample margin", A_CERT, m, cert.margin, tol),
            Inequality::at_most("counterexample violates", A_CERT, m, 0.0, 0.0),
        ],
        None => Vec::new(),
    }
}

fn f2_dim(g: &Group) -> Result<usize> {
    if !g.is_f2() {
        return Err(parse_err(format!("expected F2^n, got {}", g.descriptor())));
    }
    Ok(g.rank())
}

fn spread_cmd(c: &SpreadCmd, tol: f64) -> Result<Output> {
    let mut d = InputDigest::new();
    match c {
        SpreadCmd::Comb { set, tau, gamma, mode } => {
            d.arg("tau", tau).arg("gamma", gamma);
            let file: SetFile = load(&mut d, "set", set)?;
            let (rows, cols, t) = file.rect_subset()?;
            let (mode, seed) = bilinear(mode, &mut d)?;
            let cert = spread::is_comb_spread(&t, rows, cols, *tau, *gamma, mode)?;
            let m = match &cert.counterexample {
                Some(Counterexample::Rectangle { rows: f, cols: g }) => Some(spread::comb_margin(&t, rows, cols, *tau, *gamma, f, g)?),
                _ => None,
            };
            let ineqs = recheck(&cert, m, tol);
            Ok(Output::new("spread comb", d, certificate_json(&cert), ineqs).seeded(seed))
        }
        SpreadCmd::Asym { grid, s, t, eps, mode } => {
            d.arg("s", s).arg("t", t).arg("eps", eps);
            let file: SetFile = load(&mut d, "grid", grid)?;
            let f = file.grid_function()?;
            let (mode, seed) = bilinear(mode, &mut d)?;
            let cert = spread::is_asym_spread(&f, *s, *t, *eps, mode)?;
            let m = match &cert.counterexample {
                Some(Counterexample::Rectangle { rows, cols }) => Some(spread::asym_margin(&f, *eps, rows, cols)?),
                _ => None,
            };
            let ineqs = recheck(&cert, m, tol);
            Ok(Output::new("spread asym", d, certificate_json(&cert), ineqs).seeded(seed))
        }
        SpreadCmd::Alg { set, r, eps, samples, seed } => {
            d.arg("r", r).arg("eps", eps);
            let file: SetFile = load(&mut d, "set", set)?;
            let (g, x) = file.group_subset()?;
            let w = AffineSubspace::full(f2_dim(&g)?);
            let mode = match (samples, seed) {
                (Some(samples), Some(seed)) => {
                    d.arg("samples", samples).arg("seed", seed);
                    AlgMode::Sampled { samples: *samples, seed: *seed }
                }
                _ => AlgMode::Exact,
            };
            let cert = spread::is_alg_spread_f2(&x, &w, *r, *eps, mode)?;
            let m = match &cert.counterexample {
                Some(Counterexample::Subspace(sub)) => Some(spread::alg_margin(&x, &w, *eps, sub)?),
                _ => None,
            };
            let ineqs = recheck(&cert, m, tol);
            let seed = samples.and(*seed);
            Ok(Output::new("spread alg", d, certificate_json(&cert), ineqs).seeded(seed))
        }
        SpreadCmd::L1 { function, b1, b2, eps } => {
            d.arg("eps", eps);
            let file: SetFile = load(&mut d, "function", function)?;
            let f = file.group_function_values()?;
            let b1: BohrFile = load(&mut d, "b1", b1)?;
            let b2: BohrFile = load(&mut d, "b2", b2)?;
            let (b1, b2) = (b1.build()?, b2.build()?);
            let cert = spread::is_l1_spread(&f, &b1, &b2, *eps)?;
            let (dev, mean) = spread::l1_deviation(&f, &b1, &b2)?;
            let ineqs = vec![Inequality::close("l1 margin", A_CERT, eps * mean - dev, cert.margin, tol)];
            let mut outputs = certificate_json(&cert);
            outputs["deviation"] = json!(dev);
            outputs["mean"] = json!(mean);
            Ok(Output::new("spread l1", d, outputs, ineqs))
        }
        SpreadCmd::Extract { set, r, eps, out } => {
            d.arg("r", r).arg("eps", eps);
            let file: SetFile = load(&mut d, "set", set)?;
            let (g, x) = file.group_subset()?;
            let w = AffineSubspace::full(f2_dim(&g)?);
            let ex = spread::spread_extract_f2(&x, &w, *r, *eps)?;
            let anchor = "each descent raises the density by more than 1 + eps";
            let mut ineqs: Vec<Inequality> = ex
                .trace
                .iter()
                .map(|s| Inequality::at_least("density step", anchor, s.density_after, (1.0 + eps) * s.density_before, 0.0))
                .collect();
            ineqs.push(Inequality::flag("final set spread", anchor, ex.certificate.is_spread()));
            if let Some(p) = out {
                io::write_json(p, &SetFile::subset(g.descriptor(), &ex.set))?;
            }
            let trace: Vec<Value> = ex
                .trace
                .iter()
                .map(|s| json!({ "subspace": subspace_json(&s.subspace), "density_before": s.density_before, "density_after": s.density_after }))
                .collect();
            let outputs = json!({
                "subspace": subspace_json(&ex.subspace),
                "size": ex.set.card(),
                "trace": trace,
                "certificate": certificate_json(&ex.certificate),
            });
            Ok(Output::new("spread extract", d, outputs, ineqs))
        }
    }
}

// ------------------------------------------------------------------- Bohr

fn bohr_regular_check(b: &BohrSet) -> Inequality {
    let g = b.group();
    if g.rank() == 1 {
        let n = g.order() as u64;
        let freqs: Vec<u64> = b.freqs().iter().map(|c| c.freq[0]).collect();
        Inequality::flag("regular (recomputed)", suites::A_REGULAR, crate::oracles::bohr_regular(n, &freqs, b.radius()))
    } else {
        Inequality::flag("regular", suites::A_REGULAR, b.is_regular().regular)
    }
}

fn size_bound(b: &BohrSet) -> Inequality {
    let rhs = b.radius_f64().powi(b.rank() as i32) * b.group().order() as f64;
    let mut q = Inequality::at_least("size bound", suites::A_BOHR_SIZE, b.card() as f64, rhs, 0.0);
    q.holds = crate::oracles::bohr_size_bound(b.card(), b.group().order(), b.rank(), b.radius()) == Some(true);
    q
}

fn bohr_cmd(c: &BohrCmd, tol: f64) -> Result<Output> {
    let mut d = InputDigest::new();
    match c {
        BohrCmd::Members { bohr } => {
            let file: BohrFile = load(&mut d, "bohr", bohr)?;
            let b = file.build()?;
            let members = b.members();
            let g = b.group();
            let symmetric = members.iter().all(|x| members.contains(g.neg(x)));
            let ineqs = vec![Inequality::flag("symmetric", "Bohr sets are symmetric", symmetric), size_bound(&b)];
            let outputs = json!({ "card": b.card(), "members": indices(&members) });
            Ok(Output::new("bohr members", d, outputs, ineqs))
        }
        BohrCmd::Regular { bohr } => {
            let file: BohrFile = load(&mut d, "bohr", bohr)?;
            let b = file.build()?;
            let rep = b.is_regular();
            let outputs = json!({
                "regular": rep.regular,
                "worst_c": rep.worst_c,
                "worst_ratio": rep.worst_ratio,
                "worst_slack": rep.worst_slack,
                "checked": rep.checked,
            });
            Ok(Output::new("bohr regular", d, outputs, vec![size_bound(&b)]))
        }
        BohrCmd::Dilate { bohr, out } => {
            let file: BohrFile = load(&mut d, "bohr", bohr)?;
            let b = file.build()?;
            let reg = b.find_regular_dilate()?;
            let ratio = reg.radius() / b.radius();
            let ineqs = vec![
                bohr_regular_check(&reg),
                Inequality::flag(
                    "dilate in [1/2, 1]",
                    suites::A_REGULAR,
                    ratio >= num_rational::Ratio::new(1, 2) && ratio <= num_rational::Ratio::new(1, 1),
                ),
                size_bound(&reg),
            ];
            let rf = BohrFile::from_set(&reg);
            if let Some(p) = out {
                io::write_json(p, &rf)?;
            }
            let outputs = json!({ "bohr": rf, "card": reg.card(), "factor": io::format_ratio(ratio) });
            Ok(Output::new("bohr dilate", d, outputs, ineqs))
        }
        BohrCmd::Sequence { bohr, eta, len, small } => {
            d.arg("eta", eta).arg("len", len).arg("small", small);
            let file: BohrFile = load(&mut d, "bohr", bohr)?;
            let b = file.build()?;
            let eta = io::parse_ratio(eta)?;
            let ex = if *small { Exactness::Small } else { Exactness::Exact };
            let seq = bohr::make_sequence(&b, eta, *len, ex)?;
            let ratios = seq.ratios();
            let window = ratios.iter().all(|&q| q <= eta && (*small || q >= eta / 2));
            let mut ineqs = vec![
                Inequality::flag("sequence ratios", suites::A_SEQUENCE, window),
                Inequality::flag("sequence verifies", suites::A_SEQUENCE, seq.verify()),
            ];
            ineqs.extend(seq.sets.iter().map(size_bound));
            let outputs = json!({
                "sets": seq.sets.iter().map(BohrFile::from_set).collect::<Vec<_>>(),
                "cards": seq.sets.iter().map(|s| s.card()).collect::<Vec<_>>(),
                "ratios": ratios.iter().map(|&q| io::format_ratio(q)).collect::<Vec<_>>(),
                "degenerate_from": seq.degenerate_from,
            });
            Ok(Output::new("bohr sequence", d, outputs, ineqs))
        }
        BohrCmd::Spread { set, bohr, r, eta_s, eps, pool, extract } => {
            d.arg("r", r).arg("eta_s", eta_s).arg("eps", eps).arg("pool", pool).arg("extract", extract);
            let file: SetFile = load(&mut d, "set", set)?;
            let (g, x) = file.group_subset()?;
            let bf: BohrFile = load(&mut d, "bohr", bohr)?;
            let b = bf.build()?;
            if b.group() != &g {
                return Err(corners_lab_core::Error::GroupMismatch.into());
            }
            let freqs: Vec<Vec<u64>> = serde_json::from_str(pool).map_err(|e| parse_err(format!("--pool: {e}")))?;
            let chars = freqs.into_iter().map(|f| Character::new(&g, f)).collect::<corners_lab_core::Result<Vec<_>>>()?;
            let search = PoolSearch::new(chars);
            let eta_s = io::parse_ratio(eta_s)?;
            if *extract {
                let ex = bohr::bohr_spread_extract(&x, &b, *r, eta_s, *eps, &search)?;
                let anchor = "each accepted Bohr descent raises the density by at least 1 + eps/2";
                let mut ineqs: Vec<Inequality> = ex
                    .trace
                    .iter()
                    .map(|s| Inequality::at_least("density step", anchor, s.density_after, (1.0 + eps / 2.0) * s.density_before, 1e-12))
                    .collect();
                ineqs.push(Inequality::flag("final set spread", anchor, ex.certificate.is_spread()));
                let outputs = json!({
                    "bohr": BohrFile::from_set(&ex.set),
                    "shift": ex.shift,
                    "size": ex.subset.card(),
                    "steps": ex.trace.len(),
                    "certificate": certificate_json(&ex.certificate),
                });
                Ok(Output::new("bohr spread", d, outputs, ineqs))
            } else {
                let cert = bohr::is_bohr_alg_spread(&x, &b, *r, eta_s, *eps, &search)?;
                let m = match &cert.counterexample {
                    Some(Counterexample::Bohr { set, shift }) => Some(bohr::bohr_margin(&x, &b, *eps, set, *shift)?),
                    _ => None,
                };
                let ineqs = recheck(&cert, m, tol);
                Ok(Output::new("bohr spread", d, certificate_json(&cert), ineqs))
            }
        }
    }
}

// -------------------------------------------------------------- increment

fn check_json(c: &increment::Check) -> Value {
    json!({ "value": c.value, "bound": c.bound, "holds": c.holds })
}

fn increment_cmd(c: &IncrementCmd) -> Result<Output> {
    let IncrementCmd::Run { n, set, r, s, t, eps, trace, vnl } = c;
    let mut d = InputDigest::new();
    d.arg("n", n).arg("r", r).arg("s", s).arg("t", t).arg("eps", eps).arg("vnl", format!("{vnl:?}"));
    let file: SetFile = load(&mut d, "set", set)?;
    let (g, a) = file.pair_subset()?;
    if f2_dim(&g)? != *n {
        return Err(parse_err(format!("set domain {} does not match --n {n}", g.descriptor())));
    }
    let (st, rep) = increment::obtain_spreadness(&a, *n, *r, *s, *t, *eps)?;
    let mut ineqs = vec![Inequality::at_most(
        "iterations",
        suites::A_ITERATIONS,
        rep.iterations as f64,
        rep.iteration_bound as f64,
        0.0,
    )];
    for cl in &rep.conclusions {
        let name = format!("conclusion {}", cl.index);
        ineqs.push(if cl.index == 1 {
            Inequality::from_upper(&name, suites::A_SPREADNESS, &cl.check)
        } else {
            Inequality::from_lower(&name, suites::A_SPREADNESS, &cl.check)
        });
    }
    let e = eps / 2.0;
    for p in &rep.steps {
        ineqs.push(Inequality::at_most("dimension drop", suites::A_PSEUDO, p.dim_drop as f64, *r as f64 / (e * e), 0.0));
        ineqs.push(Inequality::from_lower("D density", suites::A_PSEUDO, &p.d_density));
        ineqs.push(Inequality::from_lower("X Y product density", suites::A_PSEUDO, &p.product_density));
        ineqs.push(Inequality::flag("X and Y spread", suites::A_PSEUDO, p.spread));
        ineqs.push(Inequality::from_lower("density of A", suites::A_PSEUDO, &p.density));
    }
    ineqs.push(Inequality::flag("A inside S(X,Y,D)", suites::A_STATE, st.verify()));
    let cont = st.container();
    let mut outputs = json!({
        "iterations": rep.iterations,
        "iteration_bound": rep.iteration_bound,
        "alpha": rep.alpha,
        "alpha_star": rep.alpha_star,
        "alpha_plus": rep.alpha_plus,
        "culled": rep.culled,
        "heuristic": rep.heuristic,
        "container": {
            "w": subspace_json(cont.w()),
            "x_shift": cont.x_shift(),
            "y_shift": cont.y_shift(),
            "delta_x": cont.delta_x(),
            "delta_y": cont.delta_y(),
            "delta_d": cont.delta_d(),
            "size": cont.size(),
        },
        "a_size": st.a().card(),
        "conclusions": rep.conclusions.iter().map(|c| json!({ "index": c.index, "check": check_json(&c.check) })).collect::<Vec<_>>(),
    });
    if let Some(p) = vnl {
        let v = increment::von_neumann_check(&st, *eps, *p)?;
        if v.hypotheses.iter().all(|&h| h) {
            ineqs.push(Inequality::at_least("corner lower bound", suites::A_VNL, v.phi, v.bound, 1e-12));
        }
        outputs["von_neumann"] = json!({
            "norm_f1": v.norm_f1,
            "norm_f2": v.norm_f2,
            "row_min": v.row_min,
            "phi": v.phi,
            "bound": v.bound,
            "hypotheses": v.hypotheses,
            "p_large": v.p_large,
        });
    }
    if let Some(path) = trace {
        let steps: Vec<Value> = rep
            .steps
            .iter()
            .map(|p| {
                json!({
                    "piece": p.piece,
                    "pieces": p.pieces,
                    "partition_complete": p.partition_complete,
                    "dim_drop": p.dim_drop,
                    "dim_drop_bound": *r as f64 / (e * e),
                    "rho": p.rho,
                    "d_density": check_json(&p.d_density),
                    "d_density_exact": check_json(&p.d_density_exact),
                    "product_density": check_json(&p.product_density),
                    "spread": p.spread,
                    "density": check_json(&p.density),
                    "density_exact": check_json(&p.density_exact),
                })
            })
            .collect();
        io::write_json(path, &json!({ "steps": steps, "conclusions": outputs["conclusions"] }))?;
    }
    Ok(Output::new("increment run", d, outputs, ineqs))
}

// -------------------------------------------------------------------- NOF

fn transcript_line(t: &Transcript) -> Value {
    let msgs: Vec<Value> = t.messages.iter().map(|m| json!({ "player": m.player, "value": m.value, "width": m.width })).collect();
    json!({
        "inputs": [t.inputs.0, t.inputs.1, t.inputs.2],
        "messages": msgs,
        "accept": t.accept,
        "bits_total": t.bits_total,
    })
}

fn nof_cmd(c: &NofCmd) -> Result<Output> {
    let mut d = InputDigest::new();
    match c {
        NofCmd::Compile { n, cornerfree, seed, verify, transcripts, out } => {
            d.arg("n", n).arg("seed", seed).arg("verify", verify);
            let file: SetFile = load(&mut d, "cornerfree", cornerfree)?;
            let (rows, cols, a) = file.rect_subset()?;
            if rows != *n || cols != *n {
                return Err(parse_err(format!("expected a {n}x{n} set, got {rows}x{cols}")));
            }
            let (col, cover) = nof::coloring_from_cornerfree(&a, *n, *seed)?;
            let proto = nof::compile_cfl_protocol(&col, *n)?;
            let mut ineqs = vec![Inequality::flag("classes corner-free", suites::A_CLASSES, !suites::mono_grid_corner(*n, &col))];
            let mut outputs = json!({
                "colors": cover.colors,
                "cover_bound": cover.bound,
                "within_cover_bound": cover.within_bound(),
                "translates": cover.translates,
                "singletons": cover.singletons,
                "bits_bound": proto.bits_bound(),
                "nondeterministic_bits": proto.nondeterministic_bits(),
            });
            if *verify {
                let v = proto.verify_exhaustive()?;
                ineqs.push(Inequality::flag("exhaustively correct", suites::A_PROTOCOL, v.counterexample.is_none()));
                ineqs.push(Inequality::at_most("bits sent", suites::A_BITS, v.max_bits as f64, v.bits_bound as f64, 0.0));
                outputs["verified"] = json!({
                    "inputs": v.inputs,
                    "accepted": v.accepted,
                    "max_bits": v.max_bits,
                    "counterexample": v.counterexample,
                });
            }
            if let Some(p) = transcripts {
                let mut text = String::new();
                for x in 0..*n {
                    for y in 0..*n {
                        for z in 0..*n {
                            let line = serde_json::to_string(&transcript_line(&proto.run(x, y, z)?)).expect("json values serialize");
                            let _ = writeln!(text, "{line}");
                        }
                    }
                }
                io::write_text(p, &text)?;
            }
            if let Some(p) = out {
                io::write_json(p, &ColoringFile::new(format!("{n}x{n}"), &col))?;
            }
            Ok(Output::new("nof compile", d, outputs, ineqs).seeded(Some(*seed)))
        }
        NofCmd::Restrict { cyl, coloring, out_cyl, out_coloring } => {
            let cf: CylinderFile = load(&mut d, "cyl", cyl)?;
            let (g, a) = cf.build()?;
            let colf: ColoringFile = load(&mut d, "coloring", coloring)?;
            let (dom, col) = colf.build()?;
            match dom {
                Domain::Group(h) if h == g => {}
                other => return Err(parse_err(format!("coloring domain {other:?} does not match {}", g.descriptor()))),
            }
            if let Some(w) = nof::find_mono_3dcorner(&g, &restrict_to(&a, &col)?)? {
                return Err(LabError::Refused(format!("monochromatic 3D corner at {w:?}")));
            }
            let Some((a2, f2, rep, ineqs)) = suites::restrict_step(&g, &a, &col)? else {
                return Err(LabError::Refused("no point of the cylinder is coloured".into()));
            };
            if let Some(p) = out_cyl {
                io::write_json(p, &CylinderFile::new(&g, &a2))?;
            }
            if let Some(p) = out_coloring {
                io::write_json(p, &ColoringFile::new(g.descriptor(), &f2))?;
            }
            let outputs = json!({
                "color": rep.color,
                "slice": rep.slice,
                "t_size": rep.t_size,
                "pigeonhole_bound": rep.pigeonhole_bound,
                "a_size": rep.a_size,
                "a_prime_size": rep.a_prime_size,
                "uncolored": rep.uncolored,
                "c_or_star": rep.c_or_star,
                "corners_2d": rep.corners_2d,
            });
            Ok(Output::new("nof restrict", d, outputs, ineqs))
        }
    }
}

fn restrict_to(a: &nof::CylinderIntersection, col: &nof::Coloring) -> Result<nof::Coloring> {
    let members = a.members();
    let cells = (0..col.cells()).map(|p| if members.contains(p) { col.color(p) } else { None }).collect();
    Ok(nof::Coloring::new(cells, col.num_colors())?)
}

// ----------------------------------------------------------------- verify

fn verify_cmd(a: &VerifyArgs) -> Result<Output> {
    let suite = suites::find(&a.suite).ok_or_else(|| LabError::UnknownSuite(a.suite.clone()))?;
    if a.seeds == 0 {
        return Err(parse_err("--seeds must be positive"));
    }
    let mut d = InputDigest::new();
    d.arg("suite", suite.name).arg("seeds", a.seeds).arg("seed", a.seed);
    let (summary, mut ineqs) = suites::run_suite(suite, a.seed, a.seeds);
    ineqs.push(Inequality::equal("failed instances", suite.about, summary.failed, 0));
    let outputs = serde_json::to_value(&summary).expect("summary serializes");
    Ok(Output::new("verify", d, outputs, ineqs).seeded(Some(a.seed)))
}
