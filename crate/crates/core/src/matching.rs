//! Move sets, penalized shortest-path edge weights and exact minimum-weight
//! perfect matching.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::code::{CssCode, Sector};
use crate::coker::CokerBasisData;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::poly::Lattice;

/// A single-qubit step from the origin check to the check at `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub delta: (i64, i64),
    /// Third check activated by the same qubit, if the column has weight 3.
    pub other: Option<(i64, i64)>,
    /// Qubit index for the move starting at check 0.
    pub qubit: usize,
}

/// All moves out of every check, with per-check lookup tables.
#[derive(Clone, Debug)]
pub struct MoveSet {
    pub moves: Vec<Move>,
    lattice: Lattice,
    target: Vec<u32>,
    other: Vec<u32>,
    qubit: Vec<u32>,
}

const NO_CHECK: u32 = u32::MAX;

/// Enumerate the moves from the columns of the detecting matrix touching check 0.
pub fn compute_move_set(code: &CssCode, sector: Sector) -> Result<MoveSet> {
    let lat = code.lattice();
    let tanner = code.tanner(sector);
    let mut moves: Vec<Move> = Vec::new();
    for &q in &tanner.check_qubits[0] {
        let checks = &tanner.qubit_checks[q as usize];
        if checks.len() > 3 {
            return Err(Error::Unsupported(format!("column weight {} exceeds 3", checks.len())));
        }
        for &d in checks.iter().filter(|&&c| c != 0) {
            let delta = lat.min_displacement(0, d as usize);
            let other = checks
                .iter()
                .find(|&&c| c != 0 && c != d)
                .map(|&c| lat.min_displacement(0, c as usize));
            if moves.iter().any(|m| m.delta == delta) {
                return Err(Error::DuplicateMove((lat.wrap(delta.0, delta.1).0, lat.wrap(delta.0, delta.1).1)));
            }
            moves.push(Move { delta, other, qubit: q as usize });
        }
    }
    Ok(MoveSet::from_moves(moves, lat))
}

impl MoveSet {
    fn from_moves(moves: Vec<Move>, lattice: Lattice) -> Self {
        let n = lattice.size();
        let k = moves.len();
        let mut target = vec![0; n * k];
        let mut other = vec![NO_CHECK; n * k];
        let mut qubit = vec![0; n * k];
        for c in 0..n {
            let (ci, cj) = lattice.coords(c);
            for (t, m) in moves.iter().enumerate() {
                target[c * k + t] = lattice.translate(c, m.delta.0, m.delta.1) as u32;
                if let Some((ox, oy)) = m.other {
                    other[c * k + t] = lattice.translate(c, ox, oy) as u32;
                }
                let (block, site) = (m.qubit / n, m.qubit % n);
                qubit[c * k + t] = (block * n + lattice.translate(site, ci as i64, cj as i64)) as u32;
            }
        }
        Self { moves, lattice, target, other, qubit }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    #[inline]
    pub fn target(&self, c: usize, k: usize) -> usize {
        self.target[c * self.moves.len() + k] as usize
    }

    #[inline]
    pub fn other(&self, c: usize, k: usize) -> Option<usize> {
        let o = self.other[c * self.moves.len() + k];
        (o != NO_CHECK).then_some(o as usize)
    }

    #[inline]
    pub fn qubit(&self, c: usize, k: usize) -> usize {
        self.qubit[c * self.moves.len() + k] as usize
    }

    /// Index of the move undoing move `k`.
    pub fn inverse(&self, k: usize) -> Option<usize> {
        let (dx, dy) = self.moves[k].delta;
        let lat = self.lattice;
        self.moves.iter().position(|m| lat.wrap(m.delta.0, m.delta.1) == lat.wrap(-dx, -dy))
    }

    /// Follow `path` from `start`, returning the visited checks (including both ends).
    pub fn walk(&self, start: usize, path: &[u8]) -> Vec<usize> {
        let mut out = Vec::with_capacity(path.len() + 1);
        let mut c = start;
        out.push(c);
        for &k in path {
            c = self.target(c, k as usize);
            out.push(c);
        }
        out
    }

    /// Error realised by `path` from `start`.
    pub fn path_error(&self, start: usize, path: &[u8]) -> BitVector {
        let mut e = BitVector::zeros(2 * self.lattice.size());
        let mut c = start;
        for &k in path {
            e.flip(self.qubit(c, k as usize));
            c = self.target(c, k as usize);
        }
        e
    }

    /// Unwrapped displacement of `path`.
    pub fn displacement(&self, path: &[u8]) -> (i64, i64) {
        path.iter().fold((0, 0), |(x, y), &k| {
            let d = self.moves[k as usize].delta;
            (x + d.0, y + d.1)
        })
    }
}

/// Nonnegative rational penalty weight `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lambda {
    pub num: i64,
    pub den: i64,
}

impl Lambda {
    pub fn from_f64(x: f64) -> Result<Self> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::Parse(format!("lambda must be a nonnegative number, got {x}")));
        }
        for den in [1i64, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 25, 50, 100, 1000] {
            let num = (x * den as f64).round();
            if (num / den as f64 - x).abs() < 1e-9 {
                return Ok(Self { num: num as i64, den });
            }
        }
        Ok(Self { num: (x * 1000.0).round() as i64, den: 1000 })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Which shortest-path engine to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathSearch {
    /// Dial's bucket queue when the largest move cost is small, else the heap.
    Auto,
    Dial,
    Heap,
}

const DIAL_MAX_COST: i64 = 1 << 12;

/// Complete graph on the violated checks of one basis type.
#[derive(Clone, Debug)]
pub struct MatchingGraph {
    pub basis_index: usize,
    pub vertices: Vec<usize>,
    /// Row-major `|V| x |V|` table in units of `1/unit`.
    pub weights: Vec<i64>,
    /// Scale of the integer weights (one move without penalty costs `unit`).
    pub unit: i64,
    /// Number of moves on the stored path between each pair.
    pub lengths: Vec<u32>,
    /// Per source vertex, the move used to reach each check (255 = none).
    parents: Vec<Vec<u8>>,
    /// Order in which the sources were searched; a search only covers
    /// vertices ranked after its source.
    rank: Vec<u32>,
}

impl MatchingGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn weight(&self, a: usize, b: usize) -> i64 {
        self.weights[a * self.vertices.len() + b]
    }

    /// Weight in move units.
    pub fn weight_f64(&self, a: usize, b: usize) -> f64 {
        self.weight(a, b) as f64 / self.unit as f64
    }

    pub fn set_weight(&mut self, a: usize, b: usize, w: i64) {
        let n = self.vertices.len();
        self.weights[a * n + b] = w;
        self.weights[b * n + a] = w;
    }

    /// Stored optimal move sequence from vertex `a` to vertex `b`.
    pub fn path(&self, moves: &MoveSet, a: usize, b: usize) -> Vec<u8> {
        if self.rank[a] > self.rank[b] {
            let mut p = self.path(moves, b, a);
            p.reverse();
            for k in &mut p {
                *k = moves.inverse(*k as usize).expect("move set closed under inverses") as u8;
            }
            return p;
        }
        let parents = &self.parents[a];
        let start = self.vertices[a];
        let mut c = self.vertices[b];
        let mut rev = Vec::new();
        while c != start {
            let k = parents[c];
            assert!(k != u8::MAX, "no stored path");
            rev.push(k);
            let d = moves.moves[k as usize].delta;
            c = moves.lattice.translate(c, -d.0, -d.1);
        }
        rev.reverse();
        rev
    }

    /// The same graph after translating every check by `(dx, dy)`, with the
    /// vertices re-sorted.
    pub fn translated(&self, lattice: Lattice, dx: i64, dy: i64) -> MatchingGraph {
        let n = self.vertices.len();
        let moved: Vec<usize> = self.vertices.iter().map(|&v| lattice.translate(v, dx, dy)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&k| moved[k]);
        let mut weights = vec![0i64; n * n];
        let mut lengths = vec![0u32; n * n];
        for (na, &oa) in order.iter().enumerate() {
            for (nb, &ob) in order.iter().enumerate() {
                weights[na * n + nb] = self.weights[oa * n + ob];
                lengths[na * n + nb] = self.lengths[oa * n + ob];
            }
        }
        let parents = order
            .iter()
            .map(|&oa| {
                let old = &self.parents[oa];
                let mut p = vec![u8::MAX; old.len()];
                for (c, &k) in old.iter().enumerate() {
                    p[lattice.translate(c, dx, dy)] = k;
                }
                p
            })
            .collect();
        MatchingGraph {
            basis_index: self.basis_index,
            vertices: order.iter().map(|&k| moved[k]).collect(),
            weights,
            unit: self.unit,
            lengths,
            parents,
            rank: order.iter().map(|&k| self.rank[k]).collect(),
        }
    }

    /// Index of check `c` among the vertices.
    pub fn position(&self, c: usize) -> Option<usize> {
        self.vertices.iter().position(|&v| v == c)
    }
}

/// Build `G_i` for the given syndrome with penalty weight `lambda`.
pub fn edge_weights(
    data: &CokerBasisData,
    moves: &MoveSet,
    syndrome: &BitVector,
    basis_index: usize,
    lambda: Lambda,
) -> MatchingGraph {
    edge_weights_with(data, moves, syndrome, basis_index, lambda, PathSearch::Auto)
}

pub fn edge_weights_with(
    data: &CokerBasisData,
    moves: &MoveSet,
    syndrome: &BitVector,
    basis_index: usize,
    lambda: Lambda,
    search: PathSearch,
) -> MatchingGraph {
    let n = syndrome.len();
    let bit = 1u64 << basis_index;
    let mut vertices = Vec::new();
    let mut background = vec![false; n];
    for c in syndrome.ones_iter() {
        if data.dictionary[c] & bit != 0 {
            vertices.push(c);
        } else {
            background[c] = true;
        }
    }
    let k = moves.len();
    let mut cost = vec![0i64; n * k];
    for c in 0..n {
        for t in 0..k {
            let penalty = match moves.other(c, t) {
                Some(o) if !background[o] => 1,
                _ => 0,
            };
            cost[c * k + t] = lambda.den + lambda.num * penalty;
        }
    }
    let max_cost = lambda.den + lambda.num;
    let use_dial = match search {
        PathSearch::Auto => max_cost <= DIAL_MAX_COST,
        PathSearch::Dial => true,
        PathSearch::Heap => false,
    };

    let nv = vertices.len();
    let mut is_target = vec![u32::MAX; n];
    for (idx, &v) in vertices.iter().enumerate() {
        is_target[v] = idx as u32;
    }
    let mut weights = vec![0i64; nv * nv];
    let mut lengths = vec![0u32; nv * nv];
    let mut parents = Vec::with_capacity(nv);
    // Costs are symmetric, so each source only searches for the later
    // vertices; earlier pairs are filled in from the other side.
    let mut scratch = SearchScratch::new(n, &cost);
    for a in 0..nv {
        if a + 1 == nv {
            parents.push(Vec::new());
            break;
        }
        let settled = if use_dial {
            dial(moves, max_cost, vertices[a], a as u32, &is_target, nv - 1 - a, &mut scratch)
        } else {
            heap_search(moves, vertices[a], a as u32, &is_target, nv - 1 - a, &mut scratch)
        };
        debug_assert!(settled);
        for b in a + 1..nv {
            let (d, l) = unpack(scratch.dist[vertices[b]]);
            weights[a * nv + b] = d;
            weights[b * nv + a] = d;
            lengths[a * nv + b] = l;
            lengths[b * nv + a] = l;
        }
        parents.push(scratch.parent.clone());
    }
    MatchingGraph { basis_index, vertices, weights, unit: lambda.den, lengths, parents, rank: (0..nv as u32).collect() }
}

/// Path labels `(cost, length)` packed as `cost << LEN_BITS | length`, so
/// that integer order is lexicographic order.
const LEN_BITS: u32 = 24;
const LEN_MASK: u64 = (1 << LEN_BITS) - 1;
const UNREACHED: u64 = u64::MAX;

#[inline]
fn unpack(key: u64) -> (i64, u32) {
    ((key >> LEN_BITS) as i64, (key & LEN_MASK) as u32)
}

struct SearchScratch {
    dist: Vec<u64>,
    parent: Vec<u8>,
    done: Vec<bool>,
    /// Packed move costs per `(check, move)`.
    step: Vec<u64>,
    buckets: Vec<Vec<u64>>,
}

impl SearchScratch {
    fn new(n: usize, cost: &[i64]) -> Self {
        Self {
            dist: vec![UNREACHED; n],
            parent: vec![u8::MAX; n],
            done: vec![false; n],
            step: cost.iter().map(|&c| ((c as u64) << LEN_BITS) | 1).collect(),
            buckets: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.dist.fill(UNREACHED);
        self.parent.fill(u8::MAX);
        self.done.fill(false);
    }

    /// Relax the moves out of `c`, reporting every improved node.
    #[inline]
    fn relax(&mut self, moves: &MoveSet, c: usize, mut push: impl FnMut(usize, u64)) {
        let k = moves.len();
        let dc = self.dist[c];
        let base = c * k;
        for t in 0..k {
            let nb = moves.target(c, t);
            if self.done[nb] {
                continue;
            }
            let cand = dc + self.step[base + t];
            if cand < self.dist[nb] {
                self.dist[nb] = cand;
                self.parent[nb] = t as u8;
                push(nb, cand);
            }
        }
    }
}

fn dial(
    moves: &MoveSet,
    max_cost: i64,
    source: usize,
    after: u32,
    is_target: &[u32],
    n_targets: usize,
    s: &mut SearchScratch,
) -> bool {
    s.reset();
    let nb = (max_cost + 1) as usize;
    let mut buckets = std::mem::take(&mut s.buckets);
    buckets.resize_with(nb, Vec::new);
    for b in &mut buckets {
        b.clear();
    }
    // Bucket entries hold `length << 32 | node`; sorting them gives the
    // (length, node) order within one cost level.
    s.dist[source] = 0;
    buckets[0].push(source as u64);
    let mut remaining = n_targets;
    let mut cur: u64 = 0;
    let mut empty_run = 0usize;
    let mut pending = 1usize;
    while remaining > 0 && pending > 0 {
        let slot = (cur as usize) % nb;
        let mut bucket = std::mem::take(&mut buckets[slot]);
        if bucket.is_empty() {
            empty_run += 1;
            if empty_run > nb {
                break;
            }
            cur += 1;
            buckets[slot] = bucket;
            continue;
        }
        empty_run = 0;
        pending -= bucket.len();
        bucket.sort_unstable();
        for &entry in &bucket {
            let c = (entry & 0xFFFF_FFFF) as usize;
            let key = (cur << LEN_BITS) | (entry >> 32);
            if s.done[c] || s.dist[c] != key {
                continue;
            }
            s.done[c] = true;
            if is_target[c] != u32::MAX && is_target[c] > after {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            s.relax(moves, c, |nbr, key| {
                buckets[((key >> LEN_BITS) as usize) % nb].push(((key & LEN_MASK) << 32) | nbr as u64);
                pending += 1;
            });
        }
        bucket.clear();
        buckets[slot] = bucket;
        cur += 1;
    }
    s.buckets = buckets;
    remaining == 0
}

fn heap_search(
    moves: &MoveSet,
    source: usize,
    after: u32,
    is_target: &[u32],
    n_targets: usize,
    s: &mut SearchScratch,
) -> bool {
    s.reset();
    let mut heap = BinaryHeap::new();
    s.dist[source] = 0;
    heap.push(Reverse((0u64, source as u32)));
    let mut remaining = n_targets;
    while let Some(Reverse((key, node))) = heap.pop() {
        if remaining == 0 {
            break;
        }
        let c = node as usize;
        if s.done[c] || s.dist[c] != key {
            continue;
        }
        s.done[c] = true;
        if is_target[c] != u32::MAX && is_target[c] > after {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        s.relax(moves, c, |nbr, key| heap.push(Reverse((key, nbr as u32))));
    }
    remaining == 0
}

/// Exact minimum-weight perfect matching on the complete graph `graph`.
///
/// Returns pairs of vertex positions `(a, b)` with `a < b`, sorted.
pub fn mwpm(graph: &MatchingGraph) -> Result<Vec<(usize, usize)>> {
    let n = graph.len();
    min_weight_perfect_matching(n, |a, b| graph.weight(a, b))
}

/// Minimum-weight perfect matching of the complete graph on `n` vertices.
pub fn min_weight_perfect_matching(n: usize, weight: impl Fn(usize, usize) -> i64) -> Result<Vec<(usize, usize)>> {
    if n % 2 == 1 {
        return Err(Error::OddVertexCount(n));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 2 {
        return Ok(vec![(0, 1)]);
    }
    let mut max_w = 0;
    for a in 0..n {
        for b in a + 1..n {
            let w = weight(a, b);
            if w < 0 {
                return Err(Error::Invariant(format!("negative edge weight {w}")));
            }
            max_w = max_w.max(w);
        }
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            edges.push((a, b, 2 * (max_w + 1 - weight(a, b))));
        }
    }
    let mate = Blossom::new(n, &edges).solve(true);
    let mut pairs = Vec::with_capacity(n / 2);
    for (a, &m) in mate.iter().enumerate() {
        match m {
            Some(b) if a < b => pairs.push((a, b)),
            Some(_) => {}
            None => return Err(Error::Invariant("matching is not perfect".into())),
        }
    }
    Ok(pairs)
}

/// Exhaustive minimum-weight perfect matching, first optimum in lexicographic order.
pub fn brute_force_mwpm(n: usize, weight: impl Fn(usize, usize) -> i64) -> Result<(i64, Vec<(usize, usize)>)> {
    if n % 2 == 1 {
        return Err(Error::OddVertexCount(n));
    }
    fn rec(
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        total: i64,
        best: &mut Option<(i64, Vec<(usize, usize)>)>,
        weight: &dyn Fn(usize, usize) -> i64,
    ) {
        let Some(a) = used.iter().position(|&u| !u) else {
            if best.as_ref().is_none_or(|(w, _)| total < *w) {
                *best = Some((total, cur.clone()));
            }
            return;
        };
        used[a] = true;
        for b in a + 1..used.len() {
            if !used[b] {
                used[b] = true;
                cur.push((a, b));
                rec(used, cur, total + weight(a, b), best, weight);
                cur.pop();
                used[b] = false;
            }
        }
        used[a] = false;
    }
    let mut best = None;
    rec(&mut vec![false; n], &mut Vec::new(), 0, &mut best, &weight);
    Ok(best.unwrap_or((0, Vec::new())))
}

/// Total weight of a matching.
pub fn matching_weight(pairs: &[(usize, usize)], weight: impl Fn(usize, usize) -> i64) -> i64 {
    pairs.iter().map(|&(a, b)| weight(a, b)).sum()
}

const NONE: usize = usize::MAX;

/// Maximum-weight matching on a general graph with integer weights
/// (Edmonds' blossom algorithm with dual variables, O(V^3)).
struct Blossom<'a> {
    nv: usize,
    edges: &'a [(usize, usize, i64)],
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl<'a> Blossom<'a> {
    fn new(nv: usize, edges: &'a [(usize, usize, i64)]) -> Self {
        let ne = edges.len();
        let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        let mut endpoint = Vec::with_capacity(2 * ne);
        let mut neighbend = vec![Vec::new(); nv];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut dualvar = vec![maxweight; nv];
        dualvar.extend(std::iter::repeat_n(0, nv));
        let mut blossombase: Vec<usize> = (0..nv).collect();
        blossombase.extend(std::iter::repeat_n(NONE, nv));
        Self {
            nv,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; nv],
            label: vec![0; 2 * nv],
            labelend: vec![NONE; 2 * nv],
            inblossom: (0..nv).collect(),
            blossomparent: vec![NONE; 2 * nv],
            blossomchilds: vec![Vec::new(); 2 * nv],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * nv],
            bestedge: vec![NONE; 2 * nv],
            blossombestedges: vec![None; 2 * nv],
            unusedblossoms: (nv..2 * nv).collect(),
            dualvar,
            allowedge: vec![false; ne],
            queue: Vec::new(),
        }
    }

    #[inline]
    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * w
    }

    fn leaves(&self, b: usize, out: &mut Vec<usize>) {
        if b < self.nv {
            out.push(b);
        } else {
            for &t in &self.blossomchilds[b] {
                self.leaves(t, out);
            }
        }
    }

    fn leaves_of(&self, b: usize) -> Vec<usize> {
        let mut v = Vec::new();
        self.leaves(b, &mut v);
        v
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let l = self.leaves_of(b);
            self.queue.extend(l);
        } else if t == 2 {
            let base = self.blossombase[b];
            let mb = self.mate[base];
            self.assign_label(self.endpoint[mb], 1, mb ^ 1);
        }
    }

    fn scan_blossom(&mut self, mut v: usize, mut w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("free blossom slot");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        self.blossomchilds[b] = path.clone();
        self.blossomendps[b] = endps;
        for v in self.leaves_of(b) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        let mut bestedgeto = vec![NONE; 2 * self.nv];
        for &bv in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[bv].take() {
                Some(list) => vec![list],
                None => self
                    .leaves_of(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect(),
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.bestedge[bv] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for &k in &list {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
        self.blossombestedges[b] = Some(list);
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.nv {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves_of(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len() as i64;
            let at = |j: i64| j.rem_euclid(len) as usize;
            let endps = self.blossomendps[b].clone();
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = childs.iter().position(|&c| c == entrychild).expect("entry child") as i64;
            let (jstep, endptrick): (i64, usize) = if j & 1 == 1 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = 0;
                let q = endps[at(j - endptrick as i64)];
                self.label[self.endpoint[q ^ endptrick ^ 1]] = 0;
                self.assign_label(self.endpoint[p ^ 1], 2, p);
                self.allowedge[q / 2] = true;
                j += jstep;
                p = endps[at(j - endptrick as i64)] ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = childs[at(j)];
            let ep = self.endpoint[p ^ 1];
            self.label[ep] = 2;
            self.label[bv] = 2;
            self.labelend[ep] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[at(j)] != entrychild {
                let bv = childs[at(j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let mut found = NONE;
                for v in self.leaves_of(bv) {
                    if self.label[v] != 0 {
                        found = v;
                        break;
                    }
                }
                if found != NONE {
                    let v = found;
                    self.label[v] = 0;
                    let mb = self.mate[self.blossombase[bv]];
                    self.label[self.endpoint[mb]] = 0;
                    self.assign_label(v, 2, self.labelend[v]);
                }
                j += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.nv {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len() as i64;
        let at = |j: i64| j.rem_euclid(len) as usize;
        let i = self.blossomchilds[b].iter().position(|&c| c == t).expect("child") as i64;
        let mut j = i;
        let (jstep, endptrick): (i64, usize) = if i & 1 == 1 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            let p = self.blossomendps[b][at(j - endptrick as i64)] ^ endptrick;
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        let i = i as usize;
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                if bs >= self.nv {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                if bt >= self.nv {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn solve(mut self, maxcardinality: bool) -> Vec<Option<usize>> {
        let nv = self.nv;
        for _ in 0..nv {
            self.label.fill(0);
            self.bestedge.fill(NONE);
            for b in nv..2 * nv {
                self.blossombestedges[b] = None;
            }
            self.allowedge.fill(false);
            self.queue.clear();
            for v in 0..nv {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while let Some(v) = (!augmented).then(|| self.queue.pop()).flatten() {
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                }
                if augmented {
                    break;
                }
                let mut deltatype = 0u8;
                let mut delta = 0i64;
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                if !maxcardinality {
                    deltatype = 1;
                    delta = *self.dualvar[..nv].iter().min().expect("vertices");
                }
                for v in 0..nv {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * nv {
                    if self.blossomparent[b] == NONE && self.label[b] == 1 && self.bestedge[b] != NONE {
                        let kslack = self.slack(self.bestedge[b]);
                        debug_assert!(kslack % 2 == 0);
                        let d = kslack / 2;
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in nv..2 * nv {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && (deltatype == 0 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == 0 {
                    deltatype = 1;
                    delta = (*self.dualvar[..nv].iter().min().expect("vertices")).max(0);
                }
                for v in 0..nv {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in nv..2 * nv {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }
                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(deltablossom, false),
                }
            }
            if !augmented {
                break;
            }
            for b in nv..2 * nv {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == 1
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
        self.mate.iter().map(|&p| (p != NONE).then(|| self.endpoint[p])).collect()
    }
}
