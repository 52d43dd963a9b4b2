//! Fixtures shared by the decoder benchmarks.

use ttimatch::{BitVector, Catalog, CodeEntry, CssCode, NoiseModel, Result, Sector};

pub fn load(name: &str) -> Result<(CodeEntry, CssCode)> {
    let entry = Catalog::builtin().get(name)?.clone();
    let code = entry.build()?;
    Ok((entry, code))
}

/// Syndromes of `count` i.i.d. bit-flip samples at rate `p`.
pub fn syndromes(code: &CssCode, p: f64, count: u64, seed: u64) -> Result<Vec<BitVector>> {
    let model = NoiseModel::new(p, seed)?;
    (0..count).map(|t| code.syndrome(&model.sample_trial(t, code.n()), Sector::X)).collect()
}
