//! Error-cluster search, agreement scores and the fixed-shift re-matching
//! pipeline.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::code::{CssCode, Sector};
use crate::coker::CokerBasisData;
use crate::decoders::DecoderParams;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::matching::{edge_weights, mwpm, Lambda, MatchingGraph, MoveSet};

/// Added to internal edges of forbidden sets, in move units.
pub const FORBID_PENALTY: i64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterCandidate {
    /// Sorted violated checks explained by `error`.
    pub checks: Vec<usize>,
    pub error: BitVector,
    pub weight: usize,
}

/// Depth-limited search for an error whose syndrome lies inside `s_obs` and
/// contains both `c_a` and `c_b`.
///
/// Nodes always keep `c_a` violated; a node is extended by one of the qubits
/// on its lowest-index check outside `s_obs`, in ascending qubit order. The
/// depth limit is raised one step at a time, so the first hit has minimum
/// weight among reachable clusters.
pub fn dfs_cluster(
    code: &CssCode,
    sector: Sector,
    s_obs: &BitVector,
    c_a: usize,
    c_b: usize,
    w_fixed: usize,
) -> Option<ClusterCandidate> {
    if w_fixed == 0 || !s_obs.get(c_a) || !s_obs.get(c_b) {
        return None;
    }
    let tanner = code.tanner(sector);
    let mut st = Dfs {
        qubit_checks: &tanner.qubit_checks,
        check_qubits: &tanner.check_qubits,
        s_obs,
        flags: vec![false; code.num_checks()],
        active: Vec::new(),
        bad: 0,
        chosen: Vec::new(),
        c_a,
        c_b,
    };
    let mut first: Vec<u32> = tanner.check_qubits[c_a].clone();
    first.sort_unstable();
    for depth in 1..=w_fixed {
        for &q in &first {
            st.push(q as usize);
            if st.search(depth - 1) {
                let mut error = BitVector::zeros(code.n());
                for &q in &st.chosen {
                    error.flip(q);
                }
                let mut checks: Vec<usize> = st.active.iter().copied().filter(|&c| st.flags[c]).collect();
                checks.sort_unstable();
                checks.dedup();
                return Some(ClusterCandidate { weight: st.chosen.len(), checks, error });
            }
            st.pop();
            st.active.clear();
        }
    }
    None
}

struct Dfs<'a> {
    qubit_checks: &'a [Vec<u32>],
    check_qubits: &'a [Vec<u32>],
    s_obs: &'a BitVector,
    flags: Vec<bool>,
    /// Checks ever toggled on the current branch (may contain stale entries).
    active: Vec<usize>,
    bad: usize,
    chosen: Vec<usize>,
    c_a: usize,
    c_b: usize,
}

impl Dfs<'_> {
    fn toggle(&mut self, q: usize) {
        for &c in &self.qubit_checks[q] {
            let c = c as usize;
            self.flags[c] = !self.flags[c];
            if !self.s_obs.get(c) {
                if self.flags[c] {
                    self.bad += 1;
                } else {
                    self.bad -= 1;
                }
            }
            if self.flags[c] {
                self.active.push(c);
            }
        }
    }

    fn push(&mut self, q: usize) {
        self.chosen.push(q);
        self.toggle(q);
    }

    fn pop(&mut self) {
        let q = self.chosen.pop().expect("nonempty");
        self.toggle(q);
    }

    fn lowest_bad(&self) -> Option<usize> {
        self.active.iter().copied().filter(|&c| self.flags[c] && !self.s_obs.get(c)).min()
    }

    fn search(&mut self, depth_left: usize) -> bool {
        if !self.flags[self.c_a] {
            return false;
        }
        if self.bad == 0 {
            return self.flags[self.c_b];
        }
        if depth_left == 0 {
            return false;
        }
        let c = self.lowest_bad().expect("bad check present");
        let mut qs: Vec<u32> = self.check_qubits[c].clone();
        qs.sort_unstable();
        let mark = self.active.len();
        for q in qs {
            let q = q as usize;
            if self.chosen.contains(&q) {
                continue;
            }
            self.push(q);
            if self.search(depth_left - 1) {
                return true;
            }
            self.pop();
            self.active.truncate(mark);
        }
        false
    }
}

/// Fraction of matched edges touching `set` that are internal to it.
pub fn f_score(set: &[usize], edges: &[(usize, usize)]) -> Result<f64> {
    let inside = |c: &usize| set.binary_search(c).is_ok();
    let mut internal = 0usize;
    let mut touching = 0usize;
    for (a, b) in edges {
        let (ia, ib) = (inside(a), inside(b));
        if ia || ib {
            touching += 1;
        }
        if ia && ib {
            internal += 1;
        }
    }
    if touching == 0 {
        return Err(Error::UndefinedScore);
    }
    Ok(internal as f64 / touching as f64)
}

struct CachedGraph {
    shift: (i64, i64),
    graph: MatchingGraph,
    matching: Vec<(usize, usize)>,
}

/// Memoized work for one observed syndrome: cluster searches keyed in its
/// frame, and matching graphs keyed by basis and shift class.
#[derive(Default)]
pub struct ClusterCache {
    map: HashMap<(usize, usize), Option<ClusterCandidate>>,
    graphs: HashMap<(usize, u32, u32), CachedGraph>,
}

impl ClusterCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &mut self,
        code: &CssCode,
        sector: Sector,
        s_obs: &BitVector,
        a: usize,
        b: usize,
        w_fixed: usize,
    ) -> Option<ClusterCandidate> {
        let key = (a.min(b), a.max(b));
        self.map
            .entry(key)
            .or_insert_with(|| dfs_cluster(code, sector, s_obs, key.0, key.1, w_fixed))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchedEdge {
    pub basis_index: usize,
    /// Endpoints in the shifted frame.
    pub a: usize,
    pub b: usize,
    /// Moves from `a` to `b`.
    pub path: Vec<u8>,
    pub weight: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScoredCandidate {
    pub candidate: ClusterCandidate,
    pub score: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftResult {
    pub shift: (i64, i64),
    /// Final matched edges per basis element.
    pub edges: Vec<Vec<MatchedEdge>>,
    /// Candidates in the unshifted frame, scored against the final matching.
    pub candidates: Vec<ScoredCandidate>,
    pub rounds: usize,
}

impl ShiftResult {
    fn empty(shift: (i64, i64), r: usize) -> Self {
        Self { shift, edges: vec![Vec::new(); r], candidates: Vec::new(), rounds: 0 }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }
}

/// Shared state for running matching pipelines on one code.
pub struct Pipeline<'a> {
    pub code: &'a CssCode,
    pub data: &'a CokerBasisData,
    pub moves: &'a MoveSet,
    pub params: &'a DecoderParams,
    lambda: Lambda,
    /// Translation period of each dictionary bit; graphs for shifts congruent
    /// modulo it are translates of each other.
    periods: Vec<u32>,
}

impl<'a> Pipeline<'a> {
    pub fn new(code: &'a CssCode, data: &'a CokerBasisData, moves: &'a MoveSet, params: &'a DecoderParams) -> Result<Self> {
        let lat = data.lattice;
        let periods = (0..data.r)
            .map(|i| {
                let bit = 1u64 << i;
                let same = |dx: i64, dy: i64| {
                    (0..lat.size()).all(|c| data.dictionary[c] & bit == data.dictionary[lat.translate(c, dx, dy)] & bit)
                };
                (1..=lat.l.max(lat.m)).find(|&p| same(p as i64, 0) && same(0, p as i64)).unwrap_or(lat.l * lat.m)
            })
            .collect();
        Ok(Self { code, data, moves, params, lambda: Lambda::from_f64(params.lambda)?, periods })
    }

    pub fn sector(&self) -> Sector {
        self.data.sector
    }

    /// Run the re-matching pipeline on `s_obs` shifted by `shift`.
    ///
    /// `forbidden` sets (unshifted frame) get a large penalty on their internal edges.
    pub fn run(
        &self,
        s_obs: &BitVector,
        shift: (i64, i64),
        forbidden: &[Vec<usize>],
        cache: &mut ClusterCache,
    ) -> Result<ShiftResult> {
        let lat = self.data.lattice;
        let r = self.data.r;
        if s_obs.is_zero() {
            return Ok(ShiftResult::empty(shift, r));
        }
        let s_t = lat.translate_vector(s_obs, shift.0, shift.1);
        let unshift = |c: usize| lat.translate(c, -shift.0, -shift.1);
        let mut graphs = Vec::with_capacity(r);
        let mut matchings = Vec::with_capacity(r);
        for i in 0..r {
            let (g, m) = self.graph(cache, &s_t, shift, i)?;
            graphs.push(g);
            matchings.push(m);
        }
        if !forbidden.is_empty() {
            let mut group = vec![usize::MAX; lat.size()];
            for (k, set) in forbidden.iter().enumerate() {
                for &c in set {
                    group[lat.translate(c, shift.0, shift.1)] = k;
                }
            }
            for (g, m) in graphs.iter_mut().zip(&mut matchings) {
                let pen = FORBID_PENALTY * g.unit;
                let mut changed = false;
                for a in 0..g.len() {
                    for b in a + 1..g.len() {
                        let ga = group[g.vertices[a]];
                        if ga != usize::MAX && ga == group[g.vertices[b]] {
                            let w = g.weight(a, b);
                            g.set_weight(a, b, w + pen);
                            changed = true;
                        }
                    }
                }
                if changed {
                    *m = mwpm(g)?;
                }
            }
        }

        let p = self.params;
        let mut pool: BTreeMap<Vec<usize>, ClusterCandidate> = BTreeMap::new();
        let mut rounds = 0;
        for _ in 0..p.r_match {
            let edges = unshifted_edges(&graphs, &matchings, &unshift);
            self.collect(s_obs, &edges, &mut pool, cache);
            let mut adjusted = false;
            let mut dirty = vec![false; r];
            for cand in pool.values() {
                let f = f_score(&cand.checks, &edges)?;
                if f > p.f_limit {
                    adjusted = true;
                    for (g, d) in graphs.iter_mut().zip(&mut dirty) {
                        *d |= adjust_weights(g, &cand.checks, &unshift, p.delta_minus, p.delta_plus);
                    }
                }
            }
            if !adjusted {
                break;
            }
            rounds += 1;
            let mut same = true;
            for ((g, m), d) in graphs.iter().zip(&mut matchings).zip(&dirty) {
                if *d {
                    let next = mwpm(g)?;
                    same &= next == *m;
                    *m = next;
                }
            }
            if same {
                break;
            }
        }

        let edges = unshifted_edges(&graphs, &matchings, &unshift);
        self.collect(s_obs, &edges, &mut pool, cache);
        let mut candidates = Vec::with_capacity(pool.len());
        for cand in pool.into_values() {
            let score = f_score(&cand.checks, &edges).unwrap_or(0.0);
            candidates.push(ScoredCandidate { candidate: cand, score });
        }
        let mut out = Vec::with_capacity(r);
        for (g, m) in graphs.iter().zip(&matchings) {
            out.push(
                m.iter()
                    .map(|&(a, b)| MatchedEdge {
                        basis_index: g.basis_index,
                        a: g.vertices[a],
                        b: g.vertices[b],
                        path: g.path(self.moves, a, b),
                        weight: g.weight(a, b),
                    })
                    .collect(),
            );
        }
        Ok(ShiftResult { shift, edges: out, candidates, rounds })
    }

    /// `G_i` for `shift` and its initial matching, reusing a translated copy
    /// from an equivalent shift.
    fn graph(
        &self,
        cache: &mut ClusterCache,
        s_t: &BitVector,
        shift: (i64, i64),
        i: usize,
    ) -> Result<(MatchingGraph, Vec<(usize, usize)>)> {
        let lat = self.data.lattice;
        let p = self.periods[i];
        let key = (i, shift.0.rem_euclid(p as i64) as u32, shift.1.rem_euclid(p as i64) as u32);
        if let Some(c) = cache.graphs.get(&key) {
            let (dx, dy) = (shift.0 - c.shift.0, shift.1 - c.shift.1);
            let g = c.graph.translated(lat, dx, dy);
            let mut m: Vec<(usize, usize)> = c
                .matching
                .iter()
                .map(|&(a, b)| {
                    let pa = g.position(lat.translate(c.graph.vertices[a], dx, dy)).expect("translated vertex");
                    let pb = g.position(lat.translate(c.graph.vertices[b], dx, dy)).expect("translated vertex");
                    (pa.min(pb), pa.max(pb))
                })
                .collect();
            m.sort_unstable();
            return Ok((g, m));
        }
        let g = edge_weights(self.data, self.moves, s_t, i, self.lambda);
        let m = mwpm(&g)?;
        cache.graphs.insert(key, CachedGraph { shift, graph: g.clone(), matching: m.clone() });
        Ok((g, m))
    }

    fn collect(
        &self,
        s_obs: &BitVector,
        edges: &[(usize, usize)],
        pool: &mut BTreeMap<Vec<usize>, ClusterCandidate>,
        cache: &mut ClusterCache,
    ) {
        for &(a, b) in edges {
            if let Some(c) = cache.get(self.code, self.sector(), s_obs, a, b, self.params.w_fixed) {
                pool.entry(c.checks.clone()).or_insert(c);
            }
        }
    }

    /// Connected components of the compatibility graph, in the shifted frame.
    pub fn compatibility_graph(&self, s_obs: &BitVector, result: &ShiftResult) -> Vec<Vec<usize>> {
        let lat = self.data.lattice;
        let s_t = lat.translate_vector(s_obs, result.shift.0, result.shift.1);
        compatibility_components(&s_t, result, self.data, self.moves)
    }
}

fn unshifted_edges(
    graphs: &[MatchingGraph],
    matchings: &[Vec<(usize, usize)>],
    unshift: &impl Fn(usize) -> usize,
) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (g, m) in graphs.iter().zip(matchings) {
        for &(a, b) in m {
            let (x, y) = (unshift(g.vertices[a]), unshift(g.vertices[b]));
            edges.push((x.min(y), x.max(y)));
        }
    }
    edges
}

fn adjust_weights(g: &mut MatchingGraph, set: &[usize], unshift: &impl Fn(usize) -> usize, dm: f64, dp: f64) -> bool {
    let inside: Vec<bool> = g.vertices.iter().map(|&v| set.binary_search(&unshift(v)).is_ok()).collect();
    if !inside.contains(&true) {
        return false;
    }
    let dm = (dm * g.unit as f64).round() as i64;
    let dp = (dp * g.unit as f64).round() as i64;
    for a in 0..g.len() {
        for b in a + 1..g.len() {
            let d = match (inside[a], inside[b]) {
                (true, true) => dm,
                (true, false) | (false, true) => dp,
                _ => continue,
            };
            let w = (g.weight(a, b) + d).max(0);
            g.set_weight(a, b, w);
        }
    }
    true
}

/// Components of the graph joining matched pairs and the violated background
/// checks cancelled along their stored paths. `s_t` is in the result's frame.
pub fn compatibility_components(
    s_t: &BitVector,
    result: &ShiftResult,
    data: &CokerBasisData,
    moves: &MoveSet,
) -> Vec<Vec<usize>> {
    let verts = s_t.support();
    let n = s_t.len();
    let mut pos = vec![usize::MAX; n];
    for (k, &c) in verts.iter().enumerate() {
        pos[c] = k;
    }
    let mut uf = UnionFind::new(verts.len());
    for list in &result.edges {
        for e in list {
            let bit = 1u64 << e.basis_index;
            uf.union(pos[e.a], pos[e.b]);
            let mut c = e.a;
            for &k in &e.path {
                if let Some(o) = moves.other(c, k as usize) {
                    if pos[o] != usize::MAX && data.dictionary[o] & bit == 0 {
                        uf.union(pos[e.a], pos[o]);
                    }
                }
                c = moves.target(c, k as usize);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &c) in verts.iter().enumerate() {
        groups.entry(uf.find(k)).or_default().push(c);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    comps
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::matching::compute_move_set;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gross() -> (CssCode, CokerBasisData, MoveSet) {
        let entry = Catalog::builtin().get("gross").unwrap().clone();
        let code = entry.build().unwrap();
        let data = CokerBasisData::for_entry(&entry, &code).unwrap();
        let ms = compute_move_set(&code, Sector::X).unwrap();
        (code, data, ms)
    }

    fn syn(code: &CssCode, qs: &[usize]) -> BitVector {
        code.syndrome(&BitVector::from_indices(code.n(), qs).unwrap(), Sector::X).unwrap()
    }

    #[test]
    fn f_score_cases() {
        let s = vec![1, 2, 3];
        assert_eq!(f_score(&s, &[(1, 2)]).unwrap(), 1.0);
        assert_eq!(f_score(&s, &[(1, 2), (3, 9)]).unwrap(), 0.5);
        assert_eq!(f_score(&s, &[(1, 7), (3, 9)]).unwrap(), 0.0);
        assert!(matches!(f_score(&s, &[(5, 6)]), Err(Error::UndefinedScore)));
    }

    #[test]
    fn single_qubit_cluster() {
        let (code, _, _) = gross();
        let s = syn(&code, &[10]);
        let sup = s.support();
        let c = dfs_cluster(&code, Sector::X, &s, sup[0], sup[1], 6).unwrap();
        assert_eq!(c.weight, 1);
        assert_eq!(c.checks, sup);
        assert!(dfs_cluster(&code, Sector::X, &s, sup[0], sup[1], 0).is_none());
    }

    fn connected_error(code: &CssCode, rng: &mut ChaCha8Rng, w: usize) -> BitVector {
        let tanner = code.tanner(Sector::X);
        let mut qs = vec![rng.gen_range(0..code.n())];
        while qs.len() < w {
            let q = qs[rng.gen_range(0..qs.len())];
            let cs = &tanner.qubit_checks[q];
            let c = cs[rng.gen_range(0..cs.len())] as usize;
            let nq = tanner.check_qubits[c][rng.gen_range(0..tanner.check_qubits[c].len())] as usize;
            if !qs.contains(&nq) {
                qs.push(nq);
            }
        }
        BitVector::from_indices(code.n(), &qs).unwrap()
    }

    /// Qubits of `e` connected through checks that `e` leaves unviolated, the
    /// only checks the search may expand through.
    fn linked_through_cancelled(code: &CssCode, e: &BitVector, s: &BitVector) -> bool {
        let tanner = code.tanner(Sector::X);
        let qs = e.support();
        let mut seen = vec![false; qs.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(k) = stack.pop() {
            for (j, &q) in qs.iter().enumerate() {
                let shared = tanner.qubit_checks[qs[k]]
                    .iter()
                    .any(|c| !s.get(*c as usize) && tanner.qubit_checks[q].contains(c));
                if !seen[j] && shared {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&b| b)
    }

    #[test]
    fn planted_cluster_recovered() {
        let (code, _, _) = gross();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 40 {
            let e = connected_error(&code, &mut rng, 3);
            let s = code.syndrome(&e, Sector::X).unwrap();
            let sup = s.support();
            if sup.len() < 2 {
                continue;
            }
            for (i, &a) in sup.iter().enumerate() {
                for &b in &sup[i + 1..] {
                    if let Some(c) = dfs_cluster(&code, Sector::X, &s, a, b, 6) {
                        let cs = code.syndrome(&c.error, Sector::X).unwrap();
                        assert_eq!(cs.support(), c.checks);
                        assert!(c.checks.iter().all(|&x| s.get(x)));
                        assert!(c.checks.contains(&a) && c.checks.contains(&b));
                        assert_eq!(c.weight, c.error.weight());
                        assert!(no_zero_syndrome_subset(&code, &c.error));
                    }
                }
            }
            if !linked_through_cancelled(&code, &e, &s) {
                continue;
            }
            let c = dfs_cluster(&code, Sector::X, &s, sup[0], sup[sup.len() - 1], 6).unwrap();
            assert_eq!(c.checks, sup);
            checked += 1;
        }
    }

    fn no_zero_syndrome_subset(code: &CssCode, e: &BitVector) -> bool {
        let qs = e.support();
        if qs.len() > 6 {
            return true;
        }
        for mask in 1u32..(1 << qs.len()) {
            let sub: Vec<usize> = (0..qs.len()).filter(|k| mask >> k & 1 == 1).map(|k| qs[k]).collect();
            if code.syndrome(&BitVector::from_indices(code.n(), &sub).unwrap(), Sector::X).unwrap().is_zero() {
                return false;
            }
        }
        true
    }

    #[test]
    fn zero_syndrome_pipeline_is_empty() {
        let (code, data, ms) = gross();
        let params = DecoderParams::default();
        let p = Pipeline::new(&code, &data, &ms, &params).unwrap();
        let r = p.run(&BitVector::zeros(72), (0, 0), &[], &mut ClusterCache::new()).unwrap();
        assert_eq!(r.num_edges(), 0);
        assert!(r.candidates.is_empty());
    }

    #[test]
    fn no_rematch_equals_plain_mwpm() {
        let (code, data, ms) = gross();
        let params = DecoderParams { r_match: 0, ..DecoderParams::default() };
        let p = Pipeline::new(&code, &data, &ms, &params).unwrap();
        let s = syn(&code, &[3, 50, 120]);
        let r = p.run(&s, (0, 0), &[], &mut ClusterCache::new()).unwrap();
        assert_eq!(r.rounds, 0);
        for i in 0..data.r {
            let g = edge_weights(&data, &ms, &s, i, Lambda { num: 1, den: 1 });
            let m = mwpm(&g).unwrap();
            let direct: Vec<(usize, usize)> = m.iter().map(|&(a, b)| (g.vertices[a], g.vertices[b])).collect();
            let got: Vec<(usize, usize)> = r.edges[i].iter().map(|e| (e.a, e.b)).collect();
            assert_eq!(direct, got);
        }
    }

    #[test]
    fn two_disjoint_clusters_match_internally() {
        let (code, data, ms) = gross();
        let params = DecoderParams::default();
        let p = Pipeline::new(&code, &data, &ms, &params).unwrap();
        let tanner = code.tanner(Sector::X);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut tried = 0;
        while tried < 10 {
            let e1 = connected_error(&code, &mut rng, 2);
            let e2 = connected_error(&code, &mut rng, 2);
            let s1 = code.syndrome(&e1, Sector::X).unwrap();
            let s2 = code.syndrome(&e2, Sector::X).unwrap();
            // Require well separated clusters.
            let lat = code.lattice();
            let far = s1.ones_iter().all(|a| {
                s2.ones_iter().all(|b| {
                    let (dx, dy) = lat.min_displacement(a, b);
                    dx.abs() + dy.abs() >= 5
                })
            });
            if !far || s1.weight() < 2 || s2.weight() < 2 || e1.weight() != 2 || e2.weight() != 2 {
                continue;
            }
            let _ = tanner;
            let s = s1.xor(&s2).unwrap();
            let r = p.run(&s, (0, 0), &[], &mut ClusterCache::new()).unwrap();
            for list in &r.edges {
                for e in list {
                    assert!((s1.get(e.a) && s1.get(e.b)) || (s2.get(e.a) && s2.get(e.b)));
                }
            }
            tried += 1;
        }
    }

    #[test]
    fn compatibility_singletons_without_edges() {
        let (_, data, ms) = gross();
        let s = BitVector::from_indices(72, &[1, 5, 9]).unwrap();
        let r = ShiftResult::empty((0, 0), data.r);
        let comps = compatibility_components(&s, &r, &data, &ms);
        assert_eq!(comps, vec![vec![1], vec![5], vec![9]]);
    }

    #[test]
    fn compatibility_joins_cancelled_background_check() {
        let (code, data, ms) = gross();
        // A single qubit error: matched endpoints plus the background third check.
        for q in 0..code.n() {
            let s = syn(&code, &[q]);
            for i in 0..data.r {
                let g = edge_weights(&data, &ms, &s, i, Lambda { num: 1, den: 1 });
                if g.len() != 2 {
                    continue;
                }
                let path = g.path(&ms, 0, 1);
                if path.len() != 1 {
                    continue;
                }
                let mut r = ShiftResult::empty((0, 0), data.r);
                r.edges[i].push(MatchedEdge { basis_index: i, a: g.vertices[0], b: g.vertices[1], path, weight: 1 });
                let comps = compatibility_components(&s, &r, &data, &ms);
                assert_eq!(comps.len(), 1);
                assert_eq!(comps[0].len(), 3);
                return;
            }
        }
        panic!("no single-move configuration found");
    }

    #[test]
    fn pipeline_is_deterministic_and_partitions() {
        let (code, data, ms) = gross();
        let params = DecoderParams::default();
        let p = Pipeline::new(&code, &data, &ms, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let qs: Vec<usize> = (0..7).map(|_| rng.gen_range(0..144)).collect();
            let mut e = BitVector::zeros(144);
            for q in qs {
                e.flip(q);
            }
            let s = code.syndrome(&e, Sector::X).unwrap();
            let shift = (rng.gen_range(0..12), rng.gen_range(0..6));
            let r1 = p.run(&s, shift, &[], &mut ClusterCache::new()).unwrap();
            let r2 = p.run(&s, shift, &[], &mut ClusterCache::new()).unwrap();
            assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
            let comps = p.compatibility_graph(&s, &r1);
            let mut all: Vec<usize> = comps.concat();
            all.sort();
            let st = code.lattice().translate_vector(&s, shift.0, shift.1);
            assert_eq!(all, st.support());
            for c in &r1.candidates {
                let cs = code.syndrome(&c.candidate.error, Sector::X).unwrap();
                assert_eq!(cs.support(), c.candidate.checks);
            }
        }
    }
}
