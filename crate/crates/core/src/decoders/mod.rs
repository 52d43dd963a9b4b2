//! Decoders: cell matching, the small- and intermediate-size matching
//! decoders, min-sum belief propagation and ordered-statistics post-processing.

mod bp;
mod cell;
mod small;

use serde::{Deserialize, Serialize};

use crate::catalog::{CodeEntry, CodeKind};
use crate::code::{CssCode, Sector};
use crate::coker::CokerBasisData;
use crate::error::{Error, Result};
use crate::gf2::BitVector;

pub use bp::{decode_bp, osd_postprocess, BpDecoder, BpResult};
pub use cell::{build_color_flush_table, decode_cell_matching, CellMatchingDecoder, CellScheme, FlushEntry, FlushTable};
pub use small::{decode_intermediate, decode_small, shift_set, IntermediateDecoder, SmallDecoder};

/// Tunable parameters shared by the matching decoders and the BP baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderParams {
    /// Weight of leftover syndrome relative to path length.
    pub lambda: f64,
    pub r_match: usize,
    pub r_refine: usize,
    pub w_fixed: usize,
    pub f_limit: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub e_limit: usize,
    pub bp_max_iters: usize,
    /// Normalisation factor applied to min-sum check messages.
    pub bp_scale: f64,
    pub osd_order: usize,
    /// Color class removed by the color-code flush (0, 1 or 2).
    pub flushed_color: usize,
}

impl Default for DecoderParams {
    fn default() -> Self {
        Self::small()
    }
}

impl DecoderParams {
    pub fn small() -> Self {
        Self {
            lambda: 1.0,
            r_match: 3,
            r_refine: 2,
            w_fixed: 6,
            f_limit: 0.5,
            delta_minus: -1.0,
            delta_plus: 1.0,
            e_limit: 10,
            bp_max_iters: 1000,
            bp_scale: 1.0,
            osd_order: 10,
            flushed_color: 2,
        }
    }

    pub fn intermediate() -> Self {
        Self { r_match: 5, ..Self::small() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Unsupported(format!("decoder parameter {what}")));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be finite and nonnegative");
        }
        if !(0.0..=1.0).contains(&self.f_limit) {
            return bad("f_limit must lie in [0, 1]");
        }
        if !(self.delta_plus >= 0.0) || !self.delta_minus.is_finite() {
            return bad("delta_plus must be nonnegative and delta_minus finite");
        }
        if !(self.bp_scale > 0.0) {
            return bad("bp_scale must be positive");
        }
        if self.osd_order > 20 {
            return bad("osd_order above 20");
        }
        if self.flushed_color > 2 {
            return bad("flushed_color must be 0, 1 or 2");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub shift: Option<(i64, i64)>,
    pub rounds: usize,
    pub candidate_sets: Vec<Vec<usize>>,
    pub total_weight: usize,
    /// Which stage produced the answer, for decoders that have several.
    pub stage: Option<String>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub correction: Option<BitVector>,
    pub failed: bool,
    pub diagnostics: Diagnostics,
}

impl DecodeOutcome {
    pub fn success(correction: BitVector, mut diagnostics: Diagnostics) -> Self {
        diagnostics.total_weight = correction.weight();
        Self { correction: Some(correction), failed: false, diagnostics }
    }

    pub fn failure(diagnostics: Diagnostics) -> Self {
        Self { correction: None, failed: true, diagnostics }
    }

    /// Check the exit invariant; a correction that misses the syndrome becomes a failure.
    pub(crate) fn checked(self, code: &CssCode, sector: Sector, s_obs: &BitVector) -> Result<Self> {
        match &self.correction {
            Some(e) if code.syndrome(e, sector)? != *s_obs => {
                Err(Error::Invariant(format!("decoder returned a correction with the wrong syndrome ({})", self.diagnostics.stage.as_deref().unwrap_or("-"))))
            }
            _ => Ok(self),
        }
    }
}

/// A syndrome decoder for one sector of one code.
pub trait Decoder: Send + Sync {
    fn name(&self) -> &str;
    fn sector(&self) -> Sector;
    fn decode(&self, syndrome: &BitVector) -> Result<DecodeOutcome>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    Cell,
    Small,
    Intermediate,
    Bp,
    BpOsd,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 5] =
        [DecoderKind::Cell, DecoderKind::Small, DecoderKind::Intermediate, DecoderKind::Bp, DecoderKind::BpOsd];

    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Cell => "cell",
            DecoderKind::Small => "small",
            DecoderKind::Intermediate => "intermediate",
            DecoderKind::Bp => "bp",
            DecoderKind::BpOsd => "bp-osd",
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "bposd" {
            return Ok(DecoderKind::BpOsd);
        }
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown decoder `{s}`")))
    }
}

/// Construct a decoder of the given kind. `data` is required by the matching
/// decoders and `p` is the channel prior used by BP.
pub fn build_decoder<'a>(
    kind: DecoderKind,
    entry: &CodeEntry,
    code: &'a CssCode,
    data: Option<&'a CokerBasisData>,
    params: &DecoderParams,
    p: f64,
) -> Result<Box<dyn Decoder + 'a>> {
    let need_data = || data.ok_or_else(|| Error::Unsupported(format!("{kind} decoder needs cokernel basis data")));
    Ok(match kind {
        DecoderKind::Cell => {
            let scheme = match entry.kind {
                CodeKind::Toric => CellScheme::toric(code, Sector::X)?,
                CodeKind::Color => CellScheme::color(code, Sector::X, params.flushed_color)?,
                CodeKind::Bb => {
                    return Err(Error::Unsupported(format!("no cell scheme for `{}`", entry.name)));
                }
            };
            Box::new(CellMatchingDecoder::new(code, scheme))
        }
        DecoderKind::Small => Box::new(SmallDecoder::new(code, need_data()?, params.clone())?),
        DecoderKind::Intermediate => Box::new(IntermediateDecoder::new(code, need_data()?, params.clone())?),
        DecoderKind::Bp => Box::new(BpDecoder::new(code, Sector::X, p, params.clone(), false)?),
        DecoderKind::BpOsd => Box::new(BpDecoder::new(code, Sector::X, p, params.clone(), true)?),
    })
}
