//! Cell-matching decoder: flush every unit cell into a fixed set of
//! representative excitations, match each type on the coarse torus, and lift
//! the matching with edge generators.

use serde::{Deserialize, Serialize};

use super::{DecodeOutcome, Decoder, Diagnostics};
use crate::code::{CssCode, Sector};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::local::local_solve;
use crate::matching::min_weight_perfect_matching;
use crate::poly::Lattice;

const MAX_CELL_CHECKS: u32 = 16;
const SEARCH_DEPTH: usize = 6;
const SEARCH_BUDGET: u64 = 2_000_000;
/// Cells up to this many steps away in each direction get a direct edge.
const STEP_RANGE: i64 = 2;

/// How a cell's violated checks are moved onto representatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlushRule {
    /// Onto the representatives of the same cell.
    InCell,
    /// Onto whichever representatives (of any nearby cell) a local operator
    /// reaches; used when every check of a kept type is a representative. Each
    /// violated non-representative check is cleared by the adjacent qubit that
    /// leaves the fewest violations around it, with the table as fallback.
    Nearby,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlushEntry {
    /// Local error, placed at the table's origin cell.
    pub error: BitVector,
    /// Class of the cell pattern: bit `i` set when it carries the type-`i`
    /// representative of the cell.
    pub coeffs: u64,
}

/// Flush map for one class of cells, indexed by the local syndrome pattern
/// (bit `x + cx * y` for the check at offset `(x, y)` from the cell corner).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlushTable {
    pub cell: (u32, u32),
    pub origin: (u32, u32),
    pub entries: Vec<FlushEntry>,
}

impl FlushTable {
    pub fn get(&self, pattern: usize) -> &FlushEntry {
        &self.entries[pattern]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_weight(&self) -> usize {
        self.entries.iter().map(|e| e.error.weight()).max().unwrap_or(0)
    }
}

/// Everything the cell-matching decoder needs for one code.
///
/// Cells whose coordinates agree modulo `period` share a class; each class has
/// its own representatives, flush table and edge generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellScheme {
    pub sector: Sector,
    pub lattice: Lattice,
    pub cell: (u32, u32),
    pub grid: (u32, u32),
    pub period: (u32, u32),
    /// `reps[class][i]`: local offset index of the type-`i` representative check.
    pub reps: Vec<Vec<usize>>,
    pub rule: FlushRule,
    pub flush: Vec<FlushTable>,
    /// `steps[class][i]`: lightest local strings moving type `i` from a cell
    /// of that class to each cell of the surrounding 5x5 block.
    pub steps: Vec<Vec<Vec<CoarseStep>>>,
    /// Shortest-path tables of the coarse graph of each type.
    pub graphs: Vec<CoarseGraph>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseStep {
    pub offset: (i64, i64),
    /// Error placed at the class origin cell.
    pub error: BitVector,
    pub weight: u32,
}

/// All-pairs distances on the cells for one excitation type, with two
/// predecessor tables that break ties in opposite step orders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseGraph {
    pub cells: usize,
    pub dist: Vec<u32>,
    pred: [Vec<(u32, u8)>; 2],
}

impl CoarseGraph {
    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.cells + b]
    }
}

impl CellScheme {
    pub fn build(
        code: &CssCode,
        sector: Sector,
        cell: (u32, u32),
        period: (u32, u32),
        reps: Vec<Vec<usize>>,
        rule: FlushRule,
    ) -> Result<Self> {
        let lat = code.lattice();
        let (cx, cy) = cell;
        if cx == 0 || cy == 0 || lat.l % cx != 0 || lat.m % cy != 0 {
            return Err(Error::Unsupported(format!("lattice {}x{} is not tiled by {cx}x{cy} cells", lat.l, lat.m)));
        }
        if cx * cy > MAX_CELL_CHECKS {
            return Err(Error::Unsupported(format!("cell with {} checks is too large to tabulate", cx * cy)));
        }
        let grid = (lat.l / cx, lat.m / cy);
        if period.0 == 0 || period.1 == 0 || grid.0 % period.0 != 0 || grid.1 % period.1 != 0 {
            return Err(Error::Unsupported(format!("class period {period:?} does not divide the cell grid {grid:?}")));
        }
        let classes = (period.0 * period.1) as usize;
        if reps.len() != classes {
            return Err(Error::DimensionMismatch { expected: classes, got: reps.len() });
        }
        let r = reps[0].len();
        if r > 16 || reps.iter().any(|v| v.len() != r || v.iter().any(|&o| o >= (cx * cy) as usize)) {
            return Err(Error::InvalidBasis("representatives must list one in-cell offset per type".into()));
        }
        let mut scheme =
            Self { sector, lattice: lat, cell, grid, period, reps, rule, flush: Vec::new(), steps: Vec::new(), graphs: Vec::new() };

        let elim = code.elimination(sector);
        for k in 0..classes {
            let origin = scheme.class_origin(k);
            let mut entries = Vec::with_capacity(1 << (cx * cy));
            for pattern in 0..1usize << (cx * cy) {
                let s_u = scheme.pattern_vector(origin, pattern);
                let mut found = None;
                for a in 0..1u64 << r {
                    let mut t = s_u.clone();
                    for i in (0..r).filter(|i| (a >> i) & 1 == 1) {
                        t.flip(scheme.rep_check(origin, i));
                    }
                    if elim.in_image(&t)? {
                        found = Some((a, t));
                        break;
                    }
                }
                let (coeffs, target) = found.ok_or_else(|| {
                    Error::Invariant(format!("cell pattern {pattern:#b} is not spanned by the representatives"))
                })?;
                let nearby = match rule {
                    FlushRule::InCell => None,
                    FlushRule::Nearby => scheme.nearby_flush(code, &s_u, origin),
                };
                let error = match nearby {
                    Some(e) => e,
                    None => local_solve(code, sector, &target, SEARCH_DEPTH, SEARCH_BUDGET)
                        .ok_or_else(|| Error::Invariant(format!("no local flush for cell pattern {pattern:#b}")))?,
                };
                entries.push(FlushEntry { error, coeffs });
            }
            scheme.flush.push(FlushTable { cell, origin: (origin.0 * cx, origin.1 * cy), entries });
        }

        for k in 0..classes {
            let origin = scheme.class_origin(k);
            let mut per_type = Vec::with_capacity(r);
            for i in 0..r {
                let mut steps = Vec::new();
                for dy in -STEP_RANGE..=STEP_RANGE {
                    for dx in -STEP_RANGE..=STEP_RANGE {
                        let next = scheme.wrap_cell(origin.0 as i64 + dx, origin.1 as i64 + dy);
                        if next == origin {
                            continue;
                        }
                        let mut t = BitVector::zeros(code.num_checks());
                        t.flip(scheme.rep_check(origin, i));
                        t.flip(scheme.rep_check(next, i));
                        if !elim.in_image(&t)? {
                            continue;
                        }
                        let error = local_solve(code, sector, &t, SEARCH_DEPTH, SEARCH_BUDGET)
                            .ok_or_else(|| Error::Invariant(format!("no edge string for type {i} towards ({dx}, {dy})")))?;
                        let weight = error.weight() as u32;
                        steps.push(CoarseStep { offset: (dx, dy), error, weight });
                    }
                }
                per_type.push(steps);
            }
            scheme.steps.push(per_type);
        }
        for i in 0..r {
            let g = scheme.shortest_paths(i);
            if g.dist.contains(&u32::MAX) {
                return Err(Error::InvalidBasis(format!("type {i} cannot reach every cell")));
            }
            scheme.graphs.push(g);
        }
        Ok(scheme)
    }

    /// Whether check `c` is the representative of some type in its cell.
    pub fn is_rep(&self, c: usize) -> bool {
        let (x, y) = self.lattice.coords(c);
        let u = (x / self.cell.0, y / self.cell.1);
        let offset = (x % self.cell.0 + self.cell.0 * (y % self.cell.1)) as usize;
        self.reps[self.class_of(u)].contains(&offset)
    }

    /// Operator on at most two qubits next to the non-representative checks of
    /// `s_u` that leaves only representatives violated. Preference goes to the
    /// fewest violations left inside the cell, then fewer qubits, then the
    /// fewest violations overall, so a pattern cut out of a one-qubit syndrome
    /// is flushed by that qubit.
    fn nearby_flush(&self, code: &CssCode, s_u: &BitVector, u: (u32, u32)) -> Option<BitVector> {
        let tanner = code.tanner(self.sector);
        let bad: Vec<usize> = s_u.ones_iter().filter(|&c| !self.is_rep(c)).collect();
        if bad.is_empty() {
            return Some(BitVector::zeros(code.n()));
        }
        let mut cand: Vec<usize> = bad.iter().flat_map(|&c| tanner.check_qubits[c].iter().map(|&q| q as usize)).collect();
        cand.sort_unstable();
        cand.dedup();
        fn subsets(cand: &[usize], start: usize, k: usize, pick: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == pick.len() {
                out.push(pick.clone());
                return;
            }
            for a in start..cand.len() {
                pick[k] = cand[a];
                subsets(cand, a + 1, k + 1, pick, out);
            }
        }
        let mut combos = Vec::new();
        for size in 1..=2usize {
            subsets(&cand, 0, 0, &mut vec![0; size], &mut combos);
        }
        let cell_checks: Vec<usize> = (0..(self.cell.0 * self.cell.1) as usize).map(|o| self.local_check(u, o)).collect();
        let mut best: Option<((usize, usize, usize), Vec<usize>)> = None;
        for qs in combos {
            let mut r = s_u.clone();
            for &q in &qs {
                for &c in &tanner.qubit_checks[q] {
                    r.flip(c as usize);
                }
            }
            if r.ones_iter().any(|c| !self.is_rep(c)) {
                continue;
            }
            let inside = cell_checks.iter().filter(|&&c| r.get(c)).count();
            let score = (inside, qs.len(), r.weight());
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((score, qs));
            }
        }
        best.and_then(|(_, qs)| BitVector::from_indices(code.n(), &qs).ok())
    }

    fn shortest_paths(&self, i: usize) -> CoarseGraph {
        let n = (self.grid.0 * self.grid.1) as usize;
        let mut dist = vec![u32::MAX; n * n];
        let mut pred = [vec![(u32::MAX, 0u8); n * n], vec![(u32::MAX, 0u8); n * n]];
        for a in 0..n {
            for (variant, table) in pred.iter_mut().enumerate() {
                let mut d = vec![u32::MAX; n];
                let mut heap = std::collections::BinaryHeap::new();
                d[a] = 0;
                heap.push(std::cmp::Reverse((0u32, a)));
                while let Some(std::cmp::Reverse((du, u))) = heap.pop() {
                    if du > d[u] {
                        continue;
                    }
                    let uc = self.cell_at(u);
                    let steps = &self.steps[self.class_of(uc)][i];
                    let order: Vec<usize> =
                        if variant == 0 { (0..steps.len()).collect() } else { (0..steps.len()).rev().collect() };
                    for k in order {
                        let st = &steps[k];
                        let v = self.cell_index(self.wrap_cell(uc.0 as i64 + st.offset.0, uc.1 as i64 + st.offset.1));
                        let nd = du + st.weight;
                        if nd < d[v] {
                            d[v] = nd;
                            table[a * n + v] = (u as u32, k as u8);
                            heap.push(std::cmp::Reverse((nd, v)));
                        }
                    }
                }
                if variant == 0 {
                    dist[a * n..(a + 1) * n].copy_from_slice(&d);
                }
            }
        }
        CoarseGraph { cells: n, dist, pred }
    }

    /// Toric-code instance: 1x1 cells, the single check is its own representative.
    pub fn toric(code: &CssCode, sector: Sector) -> Result<Self> {
        let dim = code.num_checks() - code.rank(sector);
        if dim != 1 {
            return Err(Error::Unsupported(format!("toric cell scheme needs a one-dimensional cokernel, got {dim}")));
        }
        Self::build(code, sector, (1, 1), (1, 1), vec![vec![0]], FlushRule::InCell)
    }

    /// Hexagonal color-code instance on 3x1 cells: `flushed_color` is removed
    /// by the flush and the other two colors are matched.
    pub fn color(code: &CssCode, sector: Sector, flushed_color: usize) -> Result<Self> {
        if flushed_color > 2 {
            return Err(Error::Unsupported(format!("color {flushed_color} does not exist")));
        }
        let lat = code.lattice();
        let tanner = code.tanner(sector);
        for checks in &tanner.qubit_checks {
            let mut seen = [false; 3];
            for &c in checks {
                seen[check_color(lat, c as usize)] = true;
            }
            if checks.len() != 3 || !seen.iter().all(|&b| b) {
                return Err(Error::Unsupported("checks are not three-colored by (i + j) mod 3".into()));
            }
        }
        if lat.m % 3 != 0 {
            return Err(Error::Unsupported("color cells need m divisible by 3".into()));
        }
        let kept: Vec<usize> = (0..3).filter(|&c| c != flushed_color).collect();
        let reps = (0..3u32)
            .map(|row| kept.iter().map(|&c| (c + 3 - row as usize % 3) % 3).collect())
            .collect();
        Self::build(code, sector, (3, 1), (1, 3), reps, FlushRule::Nearby)
    }

    pub fn num_types(&self) -> usize {
        self.reps[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.reps.len()
    }

    pub fn class_of(&self, u: (u32, u32)) -> usize {
        ((u.0 % self.period.0) + self.period.0 * (u.1 % self.period.1)) as usize
    }

    fn class_origin(&self, k: usize) -> (u32, u32) {
        (k as u32 % self.period.0, k as u32 / self.period.0)
    }

    fn wrap_cell(&self, x: i64, y: i64) -> (u32, u32) {
        (x.rem_euclid(self.grid.0 as i64) as u32, y.rem_euclid(self.grid.1 as i64) as u32)
    }

    fn corner(&self, u: (u32, u32)) -> (u32, u32) {
        (u.0 * self.cell.0, u.1 * self.cell.1)
    }

    fn local_check(&self, u: (u32, u32), offset: usize) -> usize {
        let (x, y) = self.corner(u);
        self.lattice.index(x + offset as u32 % self.cell.0, y + offset as u32 / self.cell.0)
    }

    /// Lattice check of the type-`i` representative in cell `u`.
    pub fn rep_check(&self, u: (u32, u32), i: usize) -> usize {
        self.local_check(u, self.reps[self.class_of(u)][i])
    }

    fn pattern_vector(&self, u: (u32, u32), pattern: usize) -> BitVector {
        let mut s = BitVector::zeros(self.lattice.size());
        for o in (0..(self.cell.0 * self.cell.1) as usize).filter(|o| (pattern >> o) & 1 == 1) {
            s.flip(self.local_check(u, o));
        }
        s
    }

    fn cell_pattern(&self, s: &BitVector, u: (u32, u32)) -> usize {
        let mut p = 0;
        for o in 0..(self.cell.0 * self.cell.1) as usize {
            if s.get(self.local_check(u, o)) {
                p |= 1 << o;
            }
        }
        p
    }

    fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.grid.1).flat_map(move |y| (0..self.grid.0).map(move |x| (x, y)))
    }

    /// Place an error computed at the origin of `u`'s class onto cell `u`.
    fn place(&self, code: &CssCode, e: &BitVector, u: (u32, u32)) -> BitVector {
        let o = self.class_origin(self.class_of(u));
        let dx = (u.0 as i64 - o.0 as i64) * self.cell.0 as i64;
        let dy = (u.1 as i64 - o.1 as i64) * self.cell.1 as i64;
        code.translate_error(e, dx, dy)
    }

    /// Flush every cell of `s`: the accumulated flush error and the coarse
    /// defect set `D_i` of each type. Fails if a non-representative check
    /// is left violated.
    pub fn flush_syndrome(&self, code: &CssCode, s_obs: &BitVector) -> Result<(BitVector, Vec<Vec<(u32, u32)>>)> {
        let mut e = BitVector::zeros(code.n());
        let mut s = s_obs.clone();
        if self.rule == FlushRule::Nearby {
            let tanner = code.tanner(self.sector);
            let pending: Vec<usize> = s.ones_iter().filter(|&c| !self.is_rep(c)).collect();
            for c in pending {
                if !s.get(c) {
                    continue;
                }
                let best = tanner.check_qubits[c]
                    .iter()
                    .filter(|&&q| tanner.qubit_checks[q as usize].iter().all(|&d| d as usize == c || self.is_rep(d as usize)))
                    .min_by_key(|&&q| {
                        let delta: i32 =
                            tanner.qubit_checks[q as usize].iter().map(|&d| if s.get(d as usize) { -1 } else { 1 }).sum();
                        (delta, q)
                    });
                if let Some(&q) = best {
                    e.flip(q as usize);
                    for &d in &tanner.qubit_checks[q as usize] {
                        s.flip(d as usize);
                    }
                }
            }
        }
        let s = &s;
        for u in self.cells() {
            let p = self.cell_pattern(s, u);
            if p == 0 {
                continue;
            }
            let entry = self.flush[self.class_of(u)].get(p);
            if !entry.error.is_zero() {
                e ^= &self.place(code, &entry.error, u);
            }
        }
        let rest = code.syndrome(&e, self.sector)?.xor(s_obs)?;
        let mut defects = vec![Vec::new(); self.num_types()];
        let mut count = 0;
        for u in self.cells() {
            for (i, d) in defects.iter_mut().enumerate() {
                if rest.get(self.rep_check(u, i)) {
                    d.push(u);
                    count += 1;
                }
            }
        }
        if count != rest.weight() {
            return Err(Error::Invariant("flush left a non-representative check violated".into()));
        }
        Ok((e, defects))
    }

    pub fn cell_index(&self, u: (u32, u32)) -> usize {
        (u.0 + self.grid.0 * u.1) as usize
    }

    fn cell_at(&self, k: usize) -> (u32, u32) {
        (k as u32 % self.grid.0, k as u32 / self.grid.0)
    }

    /// Weight of the lightest chain of steps carrying type `i` from `a` to `b`.
    pub fn coarse_distance(&self, i: usize, a: (u32, u32), b: (u32, u32)) -> i64 {
        self.graphs[i].distance(self.cell_index(a), self.cell_index(b)) as i64
    }

    /// Lifts of the stored shortest paths from `a` to `b` (one per tie-breaking
    /// order, duplicates removed).
    pub fn lifts(&self, code: &CssCode, i: usize, a: (u32, u32), b: (u32, u32)) -> Vec<BitVector> {
        let g = &self.graphs[i];
        let (ia, ib) = (self.cell_index(a), self.cell_index(b));
        let mut out: Vec<BitVector> = Vec::with_capacity(2);
        for table in &g.pred {
            let mut e = BitVector::zeros(code.n());
            let mut v = ib;
            while v != ia {
                let (u, k) = table[ia * g.cells + v];
                let uc = self.cell_at(u as usize);
                e ^= &self.place(code, &self.steps[self.class_of(uc)][i][k as usize].error, uc);
                v = u as usize;
            }
            if !out.contains(&e) {
                out.push(e);
            }
        }
        out
    }

    pub fn lift(&self, code: &CssCode, i: usize, a: (u32, u32), b: (u32, u32)) -> BitVector {
        self.lifts(code, i, a, b).swap_remove(0)
    }
}

fn check_color(lat: Lattice, c: usize) -> usize {
    let (i, j) = lat.coords(c);
    ((i + j) % 3) as usize
}

/// Flush tables for the hexagonal color code, one per cell row modulo 3.
pub fn build_color_flush_table(code: &CssCode, sector: Sector, flushed_color: usize) -> Result<Vec<FlushTable>> {
    Ok(CellScheme::color(code, sector, flushed_color)?.flush)
}

pub fn decode_cell_matching(code: &CssCode, scheme: &CellScheme, s_obs: &BitVector) -> Result<DecodeOutcome> {
    if s_obs.len() != code.num_checks() {
        return Err(Error::DimensionMismatch { expected: code.num_checks(), got: s_obs.len() });
    }
    let (mut e, defects) = scheme.flush_syndrome(code, s_obs)?;
    let mut diagnostics = Diagnostics { stage: Some("cell".into()), ..Diagnostics::default() };
    let mut options: Vec<Vec<BitVector>> = Vec::new();
    for (i, d) in defects.iter().enumerate() {
        if d.len() % 2 == 1 {
            return Err(Error::OddVertexCount(d.len()));
        }
        let pairs = min_weight_perfect_matching(d.len(), |a, b| scheme.coarse_distance(i, d[a], d[b]))?;
        for (a, b) in pairs {
            let lifts = scheme.lifts(code, i, d[a], d[b]);
            if lifts.len() == 1 {
                e ^= &lifts[0];
            } else {
                options.push(lifts);
            }
            diagnostics.candidate_sets.push(vec![scheme.rep_check(d[a], i), scheme.rep_check(d[b], i)]);
        }
    }
    e = resolve_ties(e, &options);
    DecodeOutcome::success(e, diagnostics).checked(code, scheme.sector, s_obs)
}

/// Pick one lift per tied pair so that the total correction is lightest:
/// exhaustively for few combinations, otherwise greedily in order.
fn resolve_ties(base: BitVector, options: &[Vec<BitVector>]) -> BitVector {
    const EXHAUSTIVE: usize = 256;
    let combos = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()).filter(|&c| c <= EXHAUSTIVE));
    if combos.is_some() {
        let mut best: Option<BitVector> = None;
        let mut choice = vec![0usize; options.len()];
        loop {
            let mut e = base.clone();
            for (o, &c) in options.iter().zip(&choice) {
                e ^= &o[c];
            }
            if best.as_ref().is_none_or(|b| e.weight() < b.weight()) {
                best = Some(e);
            }
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                return best.expect("at least one combination");
            }
        }
    }
    let mut e = base;
    for o in options {
        let pick = o.iter().map(|l| e.xor(l).expect("equal lengths")).min_by_key(BitVector::weight).expect("nonempty");
        e = pick;
    }
    e
}

pub struct CellMatchingDecoder<'a> {
    pub code: &'a CssCode,
    pub scheme: CellScheme,
}

impl<'a> CellMatchingDecoder<'a> {
    pub fn new(code: &'a CssCode, scheme: CellScheme) -> Self {
        Self { code, scheme }
    }
}

impl Decoder for CellMatchingDecoder<'_> {
    fn name(&self) -> &str {
        "cell"
    }

    fn sector(&self) -> Sector {
        self.scheme.sector
    }

    fn decode(&self, syndrome: &BitVector) -> Result<DecodeOutcome> {
        decode_cell_matching(self.code, &self.scheme, syndrome)
    }
}
