//! Min-sum belief propagation and ordered-statistics post-processing.

use super::{DecodeOutcome, Decoder, DecoderParams, Diagnostics};
use crate::code::{CssCode, Sector};
use crate::error::{Error, Result};
use crate::gf2::{BitVector, Elimination};

#[derive(Clone, Debug)]
pub struct BpResult {
    /// Hard decision, present only when its syndrome matched.
    pub correction: Option<BitVector>,
    /// Posterior log-likelihood ratios; zero or negative means "flipped".
    pub posterior: Vec<f64>,
    pub iterations: usize,
}

/// Flooding-schedule min-sum on the Tanner graph of the detecting matrix.
pub fn decode_bp(
    code: &CssCode,
    sector: Sector,
    s_obs: &BitVector,
    p: f64,
    max_iters: usize,
    scale: f64,
) -> Result<BpResult> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Unsupported(format!("prior {p} outside (0, 1)")));
    }
    if s_obs.len() != code.num_checks() {
        return Err(Error::DimensionMismatch { expected: code.num_checks(), got: s_obs.len() });
    }
    let n = code.n();
    let prior = ((1.0 - p) / p).ln();
    if s_obs.is_zero() {
        return Ok(BpResult { correction: Some(BitVector::zeros(n)), posterior: vec![prior; n], iterations: 0 });
    }
    let tanner = code.tanner(sector);
    // Edges grouped by check; `var_edges[q]` lists the edge ids touching qubit q.
    let mut check_start = Vec::with_capacity(tanner.check_qubits.len() + 1);
    let mut edge_var = Vec::new();
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for qs in &tanner.check_qubits {
        check_start.push(edge_var.len());
        for &q in qs {
            var_edges[q as usize].push(edge_var.len());
            edge_var.push(q as usize);
        }
    }
    check_start.push(edge_var.len());

    let mut to_check = vec![prior; edge_var.len()];
    let mut to_var = vec![0.0; edge_var.len()];
    let mut posterior = vec![prior; n];
    let mut hard = BitVector::zeros(n);
    for it in 1..=max_iters {
        for c in 0..tanner.check_qubits.len() {
            let (lo, hi) = (check_start[c], check_start[c + 1]);
            let mut negative = s_obs.get(c);
            let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, lo);
            for e in lo..hi {
                let m = to_check[e];
                negative ^= m < 0.0;
                let a = m.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    arg = e;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for e in lo..hi {
                let mag = if e == arg { min2 } else { min1 };
                let neg = negative ^ (to_check[e] < 0.0);
                to_var[e] = if neg { -scale * mag } else { scale * mag };
            }
        }
        for q in 0..n {
            let total = prior + var_edges[q].iter().map(|&e| to_var[e]).sum::<f64>();
            posterior[q] = total;
            hard.set(q, total <= 0.0);
            for &e in &var_edges[q] {
                to_check[e] = total - to_var[e];
            }
        }
        if code.syndrome(&hard, sector)? == *s_obs {
            return Ok(BpResult { correction: Some(hard), posterior, iterations: it });
        }
    }
    Ok(BpResult { correction: None, posterior, iterations: max_iters })
}

/// Ordered-statistics decoding with the combination sweep.
///
/// Columns are ranked from most to least likely flipped (ascending `soft`).
/// The first independent columns form the solved set; among the remaining
/// columns every single flip and every pattern on the first `order` of them
/// is tried, and the lightest solution wins.
pub fn osd_postprocess(code: &CssCode, sector: Sector, s_obs: &BitVector, soft: &[f64], order: usize) -> Result<BitVector> {
    let n = code.n();
    if soft.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: soft.len() });
    }
    if order > 20 {
        return Err(Error::Unsupported(format!("OSD order {order} above 20")));
    }
    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by(|&a, &b| soft[a].total_cmp(&soft[b]).then(a.cmp(&b)));
    let h = code.check_matrix(sector).select_columns(&rank);
    let elim = Elimination::new(&h);
    let base = elim.solve(s_obs)?.ok_or(Error::NonzeroSyndrome)?;
    let mut is_pivot = vec![false; n];
    for &p in elim.pivots() {
        is_pivot[p] = true;
    }
    let rref = elim.rref();
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let effect = |t: usize| {
        let mut v = BitVector::zeros(n);
        v.flip(t);
        for (k, &p) in elim.pivots().iter().enumerate() {
            if rref.get(k, t) {
                v.flip(p);
            }
        }
        v
    };
    let effects: Vec<BitVector> = free.iter().map(|&t| effect(t)).collect();

    let mut best = base.clone();
    let mut best_w = best.weight();
    let w = order.min(free.len());
    let mut cur = base.clone();
    for g in 1u64..1 << w {
        // Gray code: flip the bit that changes between g-1 and g.
        cur ^= &effects[g.trailing_zeros() as usize];
        let cw = cur.weight();
        if cw < best_w {
            best_w = cw;
            best = cur.clone();
        }
    }
    for eff in &effects {
        let cand = base.xor(eff)?;
        let cw = cand.weight();
        if cw < best_w {
            best_w = cw;
            best = cand;
        }
    }
    let mut out = BitVector::zeros(n);
    for k in best.ones_iter() {
        out.flip(rank[k]);
    }
    Ok(out)
}

/// BP with optional OSD fallback at a fixed prior.
pub struct BpDecoder<'a> {
    pub code: &'a CssCode,
    pub sector: Sector,
    pub p: f64,
    pub params: DecoderParams,
    pub osd: bool,
}

impl<'a> BpDecoder<'a> {
    pub fn new(code: &'a CssCode, sector: Sector, p: f64, params: DecoderParams, osd: bool) -> Result<Self> {
        params.validate()?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Unsupported(format!("prior {p} outside (0, 1)")));
        }
        Ok(Self { code, sector, p, params, osd })
    }
}

impl Decoder for BpDecoder<'_> {
    fn name(&self) -> &str {
        if self.osd {
            "bp-osd"
        } else {
            "bp"
        }
    }

    fn sector(&self) -> Sector {
        self.sector
    }

    fn decode(&self, syndrome: &BitVector) -> Result<DecodeOutcome> {
        let res = decode_bp(self.code, self.sector, syndrome, self.p, self.params.bp_max_iters, self.params.bp_scale)?;
        let mut diag = Diagnostics { iterations: res.iterations, stage: Some("bp".into()), ..Diagnostics::default() };
        let out = match res.correction {
            Some(e) => DecodeOutcome::success(e, diag),
            None if self.osd => {
                diag.stage = Some("osd".into());
                let e = osd_postprocess(self.code, self.sector, syndrome, &res.posterior, self.params.osd_order)?;
                DecodeOutcome::success(e, diag)
            }
            None => DecodeOutcome::failure(diag),
        };
        out.checked(self.code, self.sector, syndrome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gross() -> CssCode {
        Catalog::builtin().get("gross").unwrap().build().unwrap()
    }

    #[test]
    fn zero_syndrome_returns_at_iteration_zero() {
        let code = gross();
        let r = decode_bp(&code, Sector::X, &BitVector::zeros(72), 0.05, 100, 1.0).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.correction.unwrap().is_zero());
    }

    #[test]
    fn single_errors_converge_to_the_error() {
        let code = gross();
        for q in 0..code.n() {
            let e = BitVector::from_indices(code.n(), &[q]).unwrap();
            let s = code.syndrome(&e, Sector::X).unwrap();
            let r = decode_bp(&code, Sector::X, &s, 0.05, 1000, 1.0).unwrap();
            assert_eq!(r.correction.unwrap(), e, "qubit {q}");
        }
    }

    #[test]
    fn rejects_bad_prior() {
        let code = gross();
        assert!(decode_bp(&code, Sector::X, &BitVector::zeros(72), 0.0, 10, 1.0).is_err());
        assert!(decode_bp(&code, Sector::X, &BitVector::zeros(72), 1.0, 10, 1.0).is_err());
    }

    #[test]
    fn osd_always_satisfies_the_syndrome() {
        let code = gross();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let e = BitVector::from_bools(&(0..code.n()).map(|_| rng.gen_bool(0.08)).collect::<Vec<_>>());
            let s = code.syndrome(&e, Sector::X).unwrap();
            let soft: Vec<f64> = (0..code.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            for order in [0, 4] {
                let out = osd_postprocess(&code, Sector::X, &s, &soft, order).unwrap();
                assert_eq!(code.syndrome(&out, Sector::X).unwrap(), s);
            }
        }
    }

    #[test]
    fn osd_order_zero_with_strong_hint_returns_the_hint() {
        let code = gross();
        let e = BitVector::from_indices(code.n(), &[2, 50, 99]).unwrap();
        let s = code.syndrome(&e, Sector::X).unwrap();
        let soft: Vec<f64> = (0..code.n()).map(|q| if e.get(q) { -5.0 } else { 5.0 }).collect();
        assert_eq!(osd_postprocess(&code, Sector::X, &s, &soft, 0).unwrap(), e);
    }

    #[test]
    fn higher_order_never_heavier() {
        let code = gross();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let e = BitVector::from_bools(&(0..code.n()).map(|_| rng.gen_bool(0.06)).collect::<Vec<_>>());
            let s = code.syndrome(&e, Sector::X).unwrap();
            let soft = decode_bp(&code, Sector::X, &s, 0.06, 20, 1.0).unwrap().posterior;
            let w0 = osd_postprocess(&code, Sector::X, &s, &soft, 0).unwrap().weight();
            let w8 = osd_postprocess(&code, Sector::X, &s, &soft, 8).unwrap().weight();
            assert!(w8 <= w0);
        }
    }
}
