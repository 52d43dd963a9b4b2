//! The small- and intermediate-size matching decoders built on the
//! fixed-shift pipeline.

use std::collections::{BTreeMap, BTreeSet};

use super::{DecodeOutcome, Decoder, DecoderParams, Diagnostics};
use crate::cluster::{compatibility_components, ClusterCache, ClusterCandidate, Pipeline, ShiftResult};
use crate::code::{CssCode, Sector};
use crate::coker::CokerBasisData;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::matching::{compute_move_set, MoveSet};
use crate::poly::Lattice;

/// Shifts `x^a y^d` with `0 <= a, d < b`, with duplicates modulo the lattice removed.
pub fn shift_set(lattice: Lattice, b: u32) -> Vec<(i64, i64)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in 0..b as i64 {
        for d in 0..b as i64 {
            let w = lattice.wrap(a, d);
            if seen.insert(w) {
                out.push((w.0 as i64, w.1 as i64));
            }
        }
    }
    out
}

fn check_inputs(code: &CssCode, data: &CokerBasisData, s_obs: &BitVector) -> Result<()> {
    if s_obs.len() != code.num_checks() {
        return Err(Error::DimensionMismatch { expected: code.num_checks(), got: s_obs.len() });
    }
    if data.lattice != code.lattice() || data.num_checks() != code.num_checks() {
        return Err(Error::InvalidBasis(format!("basis data for `{}` does not fit `{}`", data.code_name, code.name())));
    }
    Ok(())
}

/// A disjoint family of clusters and the union of their errors.
#[derive(Clone, Debug)]
struct Family {
    sets: Vec<ClusterCandidate>,
}

impl Family {
    fn error(&self, n: usize) -> BitVector {
        let mut e = BitVector::zeros(n);
        for c in &self.sets {
            e ^= &c.error;
        }
        e
    }

    fn covered(&self, len: usize) -> BitVector {
        let mut v = BitVector::zeros(len);
        for c in &self.sets {
            for &x in &c.checks {
                v.set(x, true);
            }
        }
        v
    }
}

struct SmallRun<'a> {
    pipeline: Pipeline<'a>,
    shifts: Vec<(i64, i64)>,
    rounds: usize,
}

impl SmallRun<'_> {
    /// Run every shift, pool the `F_S = 1` subsets and pick a disjoint family
    /// by decreasing multiplicity, then size, then check list.
    fn stage(&mut self, s: &BitVector, forbidden: &[Vec<usize>]) -> Result<Family> {
        if s.is_zero() {
            return Ok(Family { sets: Vec::new() });
        }
        let mut cache = ClusterCache::new();
        let mut pool: BTreeMap<Vec<usize>, (usize, ClusterCandidate)> = BTreeMap::new();
        for &t in &self.shifts {
            let res = self.pipeline.run(s, t, forbidden, &mut cache)?;
            self.rounds += res.rounds;
            for sc in res.candidates {
                if sc.score == 1.0 {
                    pool.entry(sc.candidate.checks.clone()).or_insert((0, sc.candidate)).0 += 1;
                }
            }
        }
        let mut list: Vec<(usize, ClusterCandidate)> = pool.into_values().collect();
        list.sort_by(|a, b| {
            b.0.cmp(&a.0).then_with(|| b.1.checks.len().cmp(&a.1.checks.len())).then_with(|| a.1.checks.cmp(&b.1.checks))
        });
        let mut used = BitVector::zeros(s.len());
        let mut sets = Vec::new();
        for (_, c) in list {
            if c.checks.iter().all(|&x| !used.get(x)) {
                for &x in &c.checks {
                    used.set(x, true);
                }
                sets.push(c);
            }
        }
        Ok(Family { sets })
    }
}

pub fn decode_small(
    code: &CssCode,
    data: &CokerBasisData,
    moves: &MoveSet,
    s_obs: &BitVector,
    params: &DecoderParams,
) -> Result<DecodeOutcome> {
    check_inputs(code, data, s_obs)?;
    let sector = data.sector;
    if s_obs.is_zero() {
        return DecodeOutcome::success(BitVector::zeros(code.n()), Diagnostics::default()).checked(code, sector, s_obs);
    }
    let mut run =
        SmallRun { pipeline: Pipeline::new(code, data, moves, params)?, shifts: shift_set(data.lattice, data.coarse), rounds: 0 };
    let n = code.n();
    let covers = |f: &Family| f.covered(s_obs.len()) == *s_obs;

    // Best covering candidate so far: (weight, error, sets, stage).
    let mut best: Option<(usize, BitVector, Vec<Vec<usize>>, &'static str)> = None;
    let consider = |f: &Family, stage: &'static str, best: &mut Option<(usize, BitVector, Vec<Vec<usize>>, &'static str)>| {
        if !covers(f) {
            return false;
        }
        let e = f.error(n);
        let w = e.weight();
        if best.as_ref().is_none_or(|b| w < b.0) {
            *best = Some((w, e, f.sets.iter().map(|c| c.checks.clone()).collect(), stage));
        }
        w <= params.e_limit
    };
    let finish = |best: Option<(usize, BitVector, Vec<Vec<usize>>, &'static str)>, rounds: usize| {
        let out = match best {
            Some((_, e, sets, stage)) => DecodeOutcome::success(
                e,
                Diagnostics { rounds, candidate_sets: sets, stage: Some(stage.into()), ..Diagnostics::default() },
            ),
            None => DecodeOutcome::failure(Diagnostics { rounds, stage: Some("none".into()), ..Diagnostics::default() }),
        };
        out.checked(code, sector, s_obs)
    };

    let stage1 = run.stage(s_obs, &[])?;
    if consider(&stage1, "stage1", &mut best) {
        return finish(best, run.rounds);
    }
    let residual = s_obs.xor(&stage1.covered(s_obs.len()))?;
    let stage2 = run.stage(&residual, &[])?;
    let mut combined = stage1.clone();
    combined.sets.extend(stage2.sets);
    if consider(&combined, "stage2", &mut best) {
        return finish(best, run.rounds);
    }

    let k = stage1.sets.len();
    let mut groups: Vec<Vec<usize>> = (0..k).map(|a| vec![a]).collect();
    groups.extend((0..k).flat_map(|a| (a + 1..k).map(move |b| vec![a, b])));
    for group in groups {
        let kept = Family {
            sets: stage1.sets.iter().enumerate().filter(|(j, _)| !group.contains(j)).map(|(_, c)| c.clone()).collect(),
        };
        let mut input = residual.clone();
        let mut forbidden = Vec::new();
        for &j in &group {
            for &x in &stage1.sets[j].checks {
                input.flip(x);
            }
            forbidden.push(stage1.sets[j].checks.clone());
        }
        let again = run.stage(&input, &forbidden)?;
        let mut cand = kept;
        cand.sets.extend(again.sets);
        let stage = if group.len() == 1 { "redecode-single" } else { "redecode-pair" };
        if consider(&cand, stage, &mut best) {
            return finish(best, run.rounds);
        }
    }
    finish(best, run.rounds)
}

/// Shifted-frame correction from rewrite operators and short-string chains.
fn short_string_correction(
    code: &CssCode,
    data: &CokerBasisData,
    moves: &MoveSet,
    s_t: &BitVector,
    result: &ShiftResult,
) -> Result<BitVector> {
    let lat = data.lattice;
    let mut e = BitVector::zeros(code.n());
    for c in s_t.ones_iter() {
        e ^= &data.rewrite_ops[c];
    }
    for list in &result.edges {
        for edge in list {
            let i = edge.basis_index;
            let s = data.basis[i].scale as i64;
            let (ax, ay) = lat.coords(edge.a);
            let (dx, dy) = moves.displacement(&edge.path);
            let from = data.cell_of(edge.a, i);
            let end = ((ax as i64 + dx).div_euclid(s), (ay as i64 + dy).div_euclid(s));
            let winding = (end.0 - from.0, end.1 - from.1);
            if winding == (0, 0) {
                continue;
            }
            e ^= &data.short_string_chain(i, from, data.cell_of(edge.b, i), winding)?;
        }
    }
    Ok(e)
}

fn largest_score(comps: &[Vec<usize>]) -> usize {
    comps.first().map_or(0, Vec::len)
}

pub fn decode_intermediate(
    code: &CssCode,
    data: &CokerBasisData,
    moves: &MoveSet,
    s_obs: &BitVector,
    params: &DecoderParams,
) -> Result<DecodeOutcome> {
    check_inputs(code, data, s_obs)?;
    let sector = data.sector;
    if s_obs.is_zero() {
        return DecodeOutcome::success(BitVector::zeros(code.n()), Diagnostics::default()).checked(code, sector, s_obs);
    }
    let pipeline = Pipeline::new(code, data, moves, params)?;
    let lat = data.lattice;
    let mut cache = ClusterCache::new();
    let mut best: Option<(usize, ShiftResult, Vec<Vec<usize>>)> = None;
    let mut rounds = 0;
    for t in shift_set(lat, data.coarse) {
        let res = pipeline.run(s_obs, t, &[], &mut cache)?;
        rounds += res.rounds;
        let comps = pipeline.compatibility_graph(s_obs, &res);
        let score = largest_score(&comps);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, res, comps));
        }
    }
    let (mut score, mut result, mut comps) = best.expect("nonempty shift set");
    let shift = result.shift;
    let s_t = lat.translate_vector(s_obs, shift.0, shift.1);

    let mut refinements = 0;
    for _ in 0..params.r_refine {
        if score <= 2 {
            break;
        }
        let target: BTreeSet<usize> = comps.iter().take_while(|c| c.len() == score).flatten().copied().collect();
        let mut restricted = BitVector::zeros(s_obs.len());
        for &c in &target {
            restricted.set(lat.translate(c, -shift.0, -shift.1), true);
        }
        let mut sub_cache = ClusterCache::new();
        let sub = pipeline.run(&restricted, shift, &[], &mut sub_cache)?;
        rounds += sub.rounds;
        let mut merged = result.clone();
        for (list, new) in merged.edges.iter_mut().zip(sub.edges) {
            list.retain(|e| !target.contains(&e.a));
            list.extend(new);
        }
        let new_comps = compatibility_components(&s_t, &merged, data, moves);
        let new_score = largest_score(&new_comps);
        if new_score >= score {
            break;
        }
        refinements += 1;
        score = new_score;
        result = merged;
        comps = new_comps;
    }

    let e_t = short_string_correction(code, data, moves, &s_t, &result)?;
    let e = code.translate_error(&e_t, -shift.0, -shift.1);
    let diagnostics = Diagnostics {
        shift: Some(shift),
        rounds: rounds + refinements,
        candidate_sets: comps,
        stage: Some(if refinements > 0 { "refined" } else { "matching" }.into()),
        ..Diagnostics::default()
    };
    if code.syndrome(&e, sector)? != *s_obs {
        return Ok(DecodeOutcome::failure(Diagnostics { stage: Some("invalid".into()), ..diagnostics }));
    }
    DecodeOutcome::success(e, diagnostics).checked(code, sector, s_obs)
}

/// Small-size decoder bound to a code and its basis data.
pub struct SmallDecoder<'a> {
    pub code: &'a CssCode,
    pub data: &'a CokerBasisData,
    pub moves: MoveSet,
    pub params: DecoderParams,
}

impl<'a> SmallDecoder<'a> {
    pub fn new(code: &'a CssCode, data: &'a CokerBasisData, params: DecoderParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { code, data, moves: compute_move_set(code, data.sector)?, params })
    }
}

impl Decoder for SmallDecoder<'_> {
    fn name(&self) -> &str {
        "small"
    }

    fn sector(&self) -> Sector {
        self.data.sector
    }

    fn decode(&self, syndrome: &BitVector) -> Result<DecodeOutcome> {
        decode_small(self.code, self.data, &self.moves, syndrome, &self.params)
    }
}

/// Intermediate-size decoder bound to a code and its basis data.
pub struct IntermediateDecoder<'a> {
    pub code: &'a CssCode,
    pub data: &'a CokerBasisData,
    pub moves: MoveSet,
    pub params: DecoderParams,
}

impl<'a> IntermediateDecoder<'a> {
    pub fn new(code: &'a CssCode, data: &'a CokerBasisData, params: DecoderParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { code, data, moves: compute_move_set(code, data.sector)?, params })
    }
}

impl Decoder for IntermediateDecoder<'_> {
    fn name(&self) -> &str {
        "intermediate"
    }

    fn sector(&self) -> Sector {
        self.data.sector
    }

    fn decode(&self, syndrome: &BitVector) -> Result<DecodeOutcome> {
        decode_intermediate(self.code, self.data, &self.moves, syndrome, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn setup(name: &str) -> (CssCode, CokerBasisData) {
        let cat = Catalog::builtin();
        let entry = cat.get(name).unwrap();
        let code = entry.build().unwrap();
        let data = CokerBasisData::for_entry(entry, &code).unwrap();
        (code, data)
    }

    #[test]
    fn shift_sets_are_deduplicated() {
        assert_eq!(shift_set(Lattice::new(12, 6), 12).len(), 72);
        assert_eq!(shift_set(Lattice::new(24, 24), 12).len(), 144);
        assert_eq!(shift_set(Lattice::new(5, 5), 1), vec![(0, 0)]);
    }

    #[test]
    fn zero_syndrome_is_trivial() {
        let (code, data) = setup("gross");
        let moves = compute_move_set(&code, Sector::X).unwrap();
        let z = BitVector::zeros(code.num_checks());
        for out in [
            decode_small(&code, &data, &moves, &z, &DecoderParams::small()).unwrap(),
            decode_intermediate(&code, &data, &moves, &z, &DecoderParams::intermediate()).unwrap(),
        ] {
            assert!(out.correction.unwrap().is_zero());
        }
    }

    #[test]
    fn small_recovers_single_errors_exactly() {
        let (code, data) = setup("gross");
        let dec = SmallDecoder::new(&code, &data, DecoderParams::small()).unwrap();
        for q in (0..code.n()).step_by(7) {
            let e = BitVector::from_indices(code.n(), &[q]).unwrap();
            let out = dec.decode(&code.syndrome(&e, Sector::X).unwrap()).unwrap();
            assert_eq!(out.correction.unwrap(), e, "qubit {q}");
        }
    }

    #[test]
    fn intermediate_handles_single_errors_on_gross() {
        let (code, data) = setup("gross");
        let dec = IntermediateDecoder::new(&code, &data, DecoderParams::intermediate()).unwrap();
        for q in (0..code.n()).step_by(11) {
            let e = BitVector::from_indices(code.n(), &[q]).unwrap();
            let s = code.syndrome(&e, Sector::X).unwrap();
            let out = dec.decode(&s).unwrap();
            assert!(!out.failed);
            assert_eq!(code.syndrome(out.correction.as_ref().unwrap(), Sector::X).unwrap(), s);
        }
    }
}
