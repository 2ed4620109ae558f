// SPDX-License-Identifier: MIT OR Apache-2.0
//! Three-player number-on-forehead protocols from corner-free colorings, and
//! the cylinder-intersection step for monochromatic 3D corners.
//!
//! Grid cells of `[N] x [N]` (with `[N] = {0, .., N-1}`) are indexed `x * N + y`.
//! Cells of `G^3` are indexed `(x * |G| + y) * |G| + z`.
//!
//! Player `i` does not see input `i`. The compiled protocol has a validation
//! round (one bit per player, players 1, 2, 3) and a color round. Player 1
//! announces the color of `(N - y - z, y)`, player 2 of `(x, N - x - z)`,
//! player 3 of `(x, y)`. With `d = N - x - y - z` these are the corner
//! `(x, y), (x, y + d), (x + d, y)`.

use alloc::{format, vec, vec::Vec};

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corners::count_corners_grid;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::setfun::SubsetInd;

/// Largest grid side supported by coloring and protocol compilation.
pub const MAX_GRID: usize = 64;
/// Largest group order for the exhaustive 3D-corner scan.
pub const MAX_SCAN_ORDER: usize = 16;
/// Largest group order accepted by [`restrict_cylinder`].
pub const MAX_RESTRICT_ORDER: usize = 12;
/// Uniformly random translates tried per color.
pub const RANDOM_CANDIDATES: usize = 32;
/// Translates through the first uncolored cell tried per color.
pub const ANCHOR_CANDIDATES: usize = 32;

/// `x + y + z = N`.
pub fn exactly_n(x: usize, y: usize, z: usize, n: usize) -> Result<bool> {
    if x >= n || y >= n || z >= n {
        return Err(Error::Precondition(format!("inputs ({x}, {y}, {z}) must lie in [0, {n})")));
    }
    Ok(x + y + z == n)
}

/// A partial coloring of `cells` points with colors `0..num_colors`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<Option<u32>>,
    num_colors: u32,
}

impl Coloring {
    /// Errors if a color is `>= num_colors`.
    pub fn new(colors: Vec<Option<u32>>, num_colors: u32) -> Result<Self> {
        if let Some(c) = colors.iter().flatten().find(|&&c| c >= num_colors) {
            return Err(Error::Precondition(format!("color {c} out of range {num_colors}")));
        }
        Ok(Self { colors, num_colors })
    }

    pub fn cells(&self) -> usize {
        self.colors.len()
    }

    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }

    pub fn color(&self, i: usize) -> Option<u32> {
        self.colors[i]
    }

    pub fn colors(&self) -> &[Option<u32>] {
        &self.colors
    }

    pub fn is_total(&self) -> bool {
        self.colors.iter().all(Option::is_some)
    }

    /// Cells of color `c`.
    pub fn class(&self, c: u32) -> SubsetInd {
        let it = self.colors.iter().enumerate().filter(|(_, &v)| v == Some(c)).map(|(i, _)| i);
        SubsetInd::from_indices(self.colors.len(), it).expect("indices in range")
    }

    /// Number of uncolored cells.
    pub fn uncolored(&self) -> usize {
        self.colors.iter().filter(|c| c.is_none()).count()
    }
}

/// Statistics of [`coloring_from_cornerfree`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub colors: u32,
    /// `ceil((N^2 / |A|) (2 ln N + 2))`.
    pub bound: u32,
    /// Classes that came from translates of `A`.
    pub translates: u32,
    /// Classes that are single leftover cells.
    pub singletons: u32,
    pub seed: u64,
}

impl CoverReport {
    pub fn within_bound(&self) -> bool {
        self.colors <= self.bound
    }
}

/// `ceil((N^2 / |A|) (2 ln N + 2))`.
pub fn cover_bound(n: usize, a: usize) -> u32 {
    let n2 = (n * n) as f64;
    Float::ceil(n2 / a as f64 * (2.0 * Float::ln(n as f64) + 2.0)) as u32
}

fn grid_rows(a: &SubsetInd, n: usize) -> Vec<u64> {
    let mut rows = vec![0u64; n];
    for p in a.iter() {
        rows[p / n] |= 1 << (p % n);
    }
    rows
}

fn shifted_row(rows: &[u64], mask: u64, x: i64, a: i64, b: i64) -> u64 {
    let sx = x - a;
    if sx < 0 || sx >= rows.len() as i64 {
        return 0;
    }
    let r = rows[sx as usize];
    if b >= 0 {
        (r << b) & mask
    } else {
        r >> -b
    }
}

/// Colors `[N] x [N]` by translates of a corner-free `A`, each class a subset of one translate.
///
/// Every color picks the best of [`RANDOM_CANDIDATES`] uniform translates and
/// [`ANCHOR_CANDIDATES`] translates through the first uncolored cell. After
/// [`cover_bound`] colors the remaining cells become singleton classes.
pub fn coloring_from_cornerfree(a: &SubsetInd, n: usize, seed: u64) -> Result<(Coloring, CoverReport)> {
    if n == 0 || n > MAX_GRID {
        return Err(Error::Refused(format!("grid side {n} outside 1..={MAX_GRID}")));
    }
    if a.domain() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: a.domain() });
    }
    if a.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let (_, Some((x, y, d))) = count_corners_grid(n, a)? {
        return Err(Error::Precondition(format!("A has the corner ({x}, {y}) with d = {d}")));
    }
    let rows = grid_rows(a, n);
    let pts = a.to_vec();
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let bound = cover_bound(n, a.card());
    let mut colors = vec![None; n * n];
    let mut covered = vec![0u64; n];
    let mut left = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = 0u32;
    let ni = n as i64;
    while left > 0 && next < bound {
        let first = (0..n * n).find(|&i| colors[i].is_none()).expect("left > 0");
        let mut best = (0u32, 0i64, 0i64);
        for k in 0..RANDOM_CANDIDATES + ANCHOR_CANDIDATES {
            let (sa, sb) = if k < RANDOM_CANDIDATES {
                (rng.gen_range(-ni + 1..ni), rng.gen_range(-ni + 1..ni))
            } else {
                let p = pts[rng.gen_range(0..pts.len())];
                ((first / n) as i64 - (p / n) as i64, (first % n) as i64 - (p % n) as i64)
            };
            let gain: u32 = (0..ni).map(|x| (shifted_row(&rows, mask, x, sa, sb) & !covered[x as usize]).count_ones()).sum();
            if gain > best.0 {
                best = (gain, sa, sb);
            }
        }
        let (_, sa, sb) = best;
        for x in 0..ni {
            let fresh = shifted_row(&rows, mask, x, sa, sb) & !covered[x as usize];
            covered[x as usize] |= fresh;
            let mut bits = fresh;
            while bits != 0 {
                let y = bits.trailing_zeros() as usize;
                colors[x as usize * n + y] = Some(next);
                bits &= bits - 1;
            }
            left -= fresh.count_ones() as usize;
        }
        next += 1;
    }
    let translates = next;
    for c in colors.iter_mut().filter(|c| c.is_none()) {
        *c = Some(next);
        next += 1;
    }
    let col = Coloring::new(colors, next)?;
    let report = CoverReport { colors: next, bound, translates, singletons: next - translates, seed };
    Ok((col, report))
}

/// One protocol message: `width` bits carrying `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    /// 1, 2 or 3.
    pub player: u8,
    pub value: u64,
    pub width: u32,
}

/// Full record of one protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub inputs: (usize, usize, usize),
    pub messages: Vec<Message>,
    pub accept: bool,
    pub bits_total: u32,
}

/// Deterministic 3-party protocol for Exactly-N compiled from a coloring of `[N] x [N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CflProtocol {
    n: usize,
    coloring: Coloring,
    color_bits: u32,
}

/// `ceil(log2 L)`, zero for `L <= 1`.
pub fn color_bits(l: u32) -> u32 {
    if l <= 1 {
        0
    } else {
        32 - (l - 1).leading_zeros()
    }
}

/// Checks every class of a grid coloring for corners and builds the protocol.
pub fn compile_cfl_protocol(col: &Coloring, n: usize) -> Result<CflProtocol> {
    if n == 0 || n > MAX_GRID {
        return Err(Error::Refused(format!("grid side {n} outside 1..={MAX_GRID}")));
    }
    if col.cells() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: col.cells() });
    }
    if !col.is_total() {
        return Err(Error::Precondition("the coloring must be total".into()));
    }
    for c in 0..col.num_colors() {
        if let (_, Some((x, y, d))) = count_corners_grid(n, &col.class(c))? {
            return Err(Error::Precondition(format!("color {c} has the corner ({x}, {y}) with d = {d}")));
        }
    }
    Ok(CflProtocol { n, coloring: col.clone(), color_bits: color_bits(col.num_colors()) })
}

impl CflProtocol {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coloring(&self) -> &Coloring {
        &self.coloring
    }

    /// `3 ceil(log2 L) + 3`.
    pub fn bits_bound(&self) -> u32 {
        3 * self.color_bits + 3
    }

    /// Cost when the color is guessed instead of exchanged: the guess plus one bit per player.
    pub fn nondeterministic_bits(&self) -> u32 {
        self.color_bits + 3
    }

    /// The point player `player` announces, from the two inputs it sees in order.
    pub fn derived_point(&self, player: u8, visible: (usize, usize)) -> Option<(usize, usize)> {
        let n = self.n as i64;
        let (u, v) = (visible.0 as i64, visible.1 as i64);
        let (px, py) = match player {
            // sees (y, z)
            1 => (n - u - v, u),
            // sees (x, z)
            2 => (u, n - u - v),
            // sees (x, y)
            3 => (u, v),
            _ => return None,
        };
        ((0..n).contains(&px) && (0..n).contains(&py)).then_some((px as usize, py as usize))
    }

    /// Player `player`'s message in the given round. It reads only the visible inputs.
    pub fn message(&self, player: u8, visible: (usize, usize), round: u8) -> Message {
        let p = self.derived_point(player, visible);
        match round {
            0 => Message { player, value: p.is_some() as u64, width: 1 },
            _ => {
                let (a, b) = p.expect("color round runs only after validation");
                let c = self.coloring.color(a * self.n + b).expect("total coloring");
                Message { player, value: c as u64, width: self.color_bits }
            }
        }
    }

    fn visible(player: u8, (x, y, z): (usize, usize, usize)) -> (usize, usize) {
        match player {
            1 => (y, z),
            2 => (x, z),
            _ => (x, y),
        }
    }

    pub fn run(&self, x: usize, y: usize, z: usize) -> Result<Transcript> {
        let n = self.n;
        if x >= n || y >= n || z >= n {
            return Err(Error::Precondition(format!("inputs ({x}, {y}, {z}) must lie in [0, {n})")));
        }
        let inputs = (x, y, z);
        let mut messages = Vec::with_capacity(6);
        for player in 1..=3u8 {
            messages.push(self.message(player, Self::visible(player, inputs), 0));
        }
        let valid = messages.iter().all(|m| m.value == 1);
        if valid {
            for player in 1..=3u8 {
                messages.push(self.message(player, Self::visible(player, inputs), 1));
            }
        }
        let accept = valid && messages[3].value == messages[4].value && messages[4].value == messages[5].value;
        let bits_total = messages.iter().map(|m| m.width).sum();
        Ok(Transcript { inputs, messages, accept, bits_total })
    }

    /// Recomputes every message of `t` from the visibility rule.
    pub fn replay(&self, t: &Transcript) -> Result<bool> {
        Ok(self.run(t.inputs.0, t.inputs.1, t.inputs.2)? == *t)
    }

    /// Runs every input in `[N]^3` against [`exactly_n`].
    pub fn verify_exhaustive(&self) -> Result<ProtocolReport> {
        let n = self.n;
        let (mut max_bits, mut accepted) = (0, 0u64);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let t = self.run(x, y, z)?;
                    if t.accept != exactly_n(x, y, z, n)? {
                        return Ok(ProtocolReport { n, inputs: (n * n * n) as u64, accepted, max_bits, bits_bound: self.bits_bound(), counterexample: Some((x, y, z)) });
                    }
                    accepted += t.accept as u64;
                    max_bits = max_bits.max(t.bits_total);
                }
            }
        }
        Ok(ProtocolReport { n, inputs: (n * n * n) as u64, accepted, max_bits, bits_bound: self.bits_bound(), counterexample: None })
    }
}

/// Outcome of [`CflProtocol::verify_exhaustive`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolReport {
    pub n: usize,
    pub inputs: u64,
    pub accepted: u64,
    pub max_bits: u32,
    pub bits_bound: u32,
    pub counterexample: Option<(usize, usize, usize)>,
}

impl ProtocolReport {
    pub fn correct(&self) -> bool {
        self.counterexample.is_none() && self.max_bits <= self.bits_bound
    }
}

/// `{(x, y, z) : (x, y) in S_XY, (y, z) in S_YZ, (x, z) in S_XZ}` over `G^3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderIntersection {
    order: usize,
    pub s_xy: SubsetInd,
    pub s_yz: SubsetInd,
    pub s_xz: SubsetInd,
}

impl CylinderIntersection {
    pub fn new(order: usize, s_xy: SubsetInd, s_yz: SubsetInd, s_xz: SubsetInd) -> Result<Self> {
        for s in [&s_xy, &s_yz, &s_xz] {
            if s.domain() != order * order {
                return Err(Error::DimensionMismatch { expected: order * order, got: s.domain() });
            }
        }
        Ok(Self { order, s_xy, s_yz, s_xz })
    }

    /// `G^3`.
    pub fn full(order: usize) -> Self {
        let f = SubsetInd::full(order * order);
        Self { order, s_xy: f.clone(), s_yz: f.clone(), s_xz: f }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let m = self.order;
        self.s_xy.contains(x * m + y) && self.s_yz.contains(y * m + z) && self.s_xz.contains(x * m + z)
    }

    /// Members as a subset of the `|G|^3` cells.
    pub fn members(&self) -> SubsetInd {
        let m = self.order;
        let mut s = SubsetInd::empty(m * m * m);
        for x in 0..m {
            for y in 0..m {
                if !self.s_xy.contains(x * m + y) {
                    continue;
                }
                for z in 0..m {
                    if self.s_yz.contains(y * m + z) && self.s_xz.contains(x * m + z) {
                        s.insert((x * m + y) * m + z);
                    }
                }
            }
        }
        s
    }
}

fn cell(m: usize, x: usize, y: usize, z: usize) -> usize {
    (x * m + y) * m + z
}

/// A `(x, y, z, d)`, `d ≠ 0`, with `(x,y,z), (x+d,y,z), (x,y+d,z), (x,y,z+d)` colored alike.
pub fn find_mono_3dcorner(g: &Group, col: &Coloring) -> Result<Option<(usize, usize, usize, usize)>> {
    let m = g.order();
    if m > MAX_SCAN_ORDER {
        return Err(Error::Refused(format!("|G| = {m} exceeds {MAX_SCAN_ORDER}")));
    }
    if col.cells() != m * m * m {
        return Err(Error::DimensionMismatch { expected: m * m * m, got: col.cells() });
    }
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                let Some(c) = col.color(cell(m, x, y, z)) else { continue };
                for d in (0..m).filter(|&d| d != g.zero()) {
                    let same = |i: usize| col.color(i) == Some(c);
                    if same(cell(m, g.add(x, d), y, z)) && same(cell(m, x, g.add(y, d), z)) && same(cell(m, x, y, g.add(z, d))) {
                        return Ok(Some((x, y, z, d)));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Outcome of [`restrict_cylinder`].
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictReport {
    pub color: u32,
    /// The sum `g` of the chosen slice `x + y + z = g`.
    pub slice: usize,
    /// `|T|`.
    pub t_size: usize,
    /// `(|A| - U) / (L |G|)`.
    pub pigeonhole_bound: f64,
    pub a_size: usize,
    pub a_prime_size: usize,
    /// `U`.
    pub uncolored: usize,
    /// `|A' ∩ f^-1({c, *})|`.
    pub c_or_star: usize,
    /// `U + |G|^2`.
    pub c_or_star_bound: usize,
    /// Triples `(x, y, d)` with `(x,y), (x+d,y), (x,y+d)` in `S'_XY`, including `d = 0`.
    pub corners_2d: usize,
    /// `(|A| - U) / (L |G|^3)`.
    pub delta: f64,
}

/// One step of the colour-removal induction on cylinder intersections.
///
/// The coloring is read only on `A`. Returns `A'`, its coloring with `c`
/// replaced by uncolored, and the report. All three conclusions are checked:
/// `S' ⊆ S`, the count of `c` and uncolored points, and the explicit
/// injection from 2D corners of `S'_XY` into `A'`.
pub fn restrict_cylinder(g: &Group, a: &CylinderIntersection, col: &Coloring) -> Result<(CylinderIntersection, Coloring, RestrictReport)> {
    let m = g.order();
    if m > MAX_RESTRICT_ORDER {
        return Err(Error::Refused(format!("|G| = {m} exceeds {MAX_RESTRICT_ORDER}")));
    }
    if a.order != m || col.cells() != m * m * m {
        return Err(Error::DimensionMismatch { expected: m * m * m, got: col.cells() });
    }
    let members = a.members();
    let on_a: Vec<Option<u32>> = (0..m * m * m).map(|i| if members.contains(i) { col.color(i) } else { None }).collect();
    let f = Coloring::new(on_a, col.num_colors())?;
    if let Some((x, y, z, d)) = find_mono_3dcorner(g, &f)? {
        return Err(Error::Precondition(format!("monochromatic 3D corner at ({x}, {y}, {z}) with d = {d}")));
    }
    let l = f.num_colors();
    if l == 0 {
        return Err(Error::EmptySubset);
    }
    let sum3 = |x: usize, y: usize, z: usize| g.add(g.add(x, y), z);
    let mut counts = vec![0usize; l as usize * m];
    for p in members.iter() {
        if let Some(c) = f.color(p) {
            let (x, y, z) = (p / (m * m), p / m % m, p % m);
            counts[c as usize * m + sum3(x, y, z)] += 1;
        }
    }
    let (best, &t_size) = counts.iter().enumerate().rev().max_by_key(|&(_, &k)| k).expect("l >= 1");
    let (c, slice) = ((best / m) as u32, best % m);
    let uncolored = members.iter().filter(|&p| f.color(p).is_none()).count();
    let a_size = members.card();
    let pigeonhole_bound = (a_size - uncolored) as f64 / (l as f64 * m as f64);
    if (t_size as f64) < pigeonhole_bound {
        return Err(Error::NotFound(format!("largest slice {t_size} below the pigeonhole bound {pigeonhole_bound}")));
    }
    let mut t = SubsetInd::empty(m * m * m);
    let (mut s_xy, mut s_yz, mut s_xz) = (SubsetInd::empty(m * m), SubsetInd::empty(m * m), SubsetInd::empty(m * m));
    for p in members.iter() {
        let (x, y, z) = (p / (m * m), p / m % m, p % m);
        if f.color(p) == Some(c) && sum3(x, y, z) == slice {
            t.insert(p);
            s_xy.insert(x * m + y);
            s_yz.insert(y * m + z);
            s_xz.insert(x * m + z);
        }
    }
    if !(s_xy.is_subset_of(&a.s_xy) && s_yz.is_subset_of(&a.s_yz) && s_xz.is_subset_of(&a.s_xz)) {
        return Err(Error::NotFound("projections leave the cylinder".into()));
    }
    let a2 = CylinderIntersection::new(m, s_xy, s_yz, s_xz)?;
    let members2 = a2.members();
    if !members2.is_subset_of(&members) {
        return Err(Error::NotFound("A' is not contained in A".into()));
    }
    let mut c_or_star = 0;
    for p in members2.iter() {
        match f.color(p) {
            None => c_or_star += 1,
            Some(k) if k == c => {
                if !t.contains(p) {
                    return Err(Error::NotFound(format!("point {p} of A' has color {c} outside T")));
                }
                c_or_star += 1;
            }
            _ => {}
        }
    }
    let c_or_star_bound = uncolored + m * m;
    if c_or_star > c_or_star_bound {
        return Err(Error::NotFound(format!("{c_or_star} points of A' are {c} or uncolored, above {c_or_star_bound}")));
    }
    let mut image = SubsetInd::empty(m * m * m);
    let mut corners_2d = 0;
    for x in 0..m {
        for y in 0..m {
            if !a2.s_xy.contains(x * m + y) {
                continue;
            }
            for d in 0..m {
                if a2.s_xy.contains(g.add(x, d) * m + y) && a2.s_xy.contains(x * m + g.add(y, d)) {
                    let z = g.sub(g.sub(slice, g.add(x, y)), d);
                    let p = cell(m, x, y, z);
                    if !members2.contains(p) || image.contains(p) {
                        return Err(Error::NotFound(format!("corner injection fails at ({x}, {y}, {d})")));
                    }
                    image.insert(p);
                    corners_2d += 1;
                }
            }
        }
    }
    let recolored: Vec<Option<u32>> = (0..m * m * m)
        .map(|i| if members2.contains(i) { f.color(i).filter(|&k| k != c) } else { None })
        .collect();
    let report = RestrictReport {
        color: c,
        slice,
        t_size,
        pigeonhole_bound,
        a_size,
        a_prime_size: members2.card(),
        uncolored,
        c_or_star,
        c_or_star_bound,
        corners_2d,
        delta: (a_size - uncolored) as f64 / (l as f64 * (m * m * m) as f64),
    };
    Ok((a2, Coloring::new(recolored, l)?, report))
}
