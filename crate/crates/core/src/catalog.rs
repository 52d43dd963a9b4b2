//! Named codes with their published parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::code::{build_bb_code, CssCode};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::poly::{Lattice, LaurentPoly};

const BUILTIN: &str = include_str!("../data/catalog.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Bb,
    Toric,
    Color,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeEntry {
    pub name: String,
    pub kind: CodeKind,
    pub l: u32,
    pub m: u32,
    pub a: Vec<(i64, i64)>,
    pub b: Vec<(i64, i64)>,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Cell size at which every excitation type is translation periodic.
    pub coarse: u32,
    #[serde(default)]
    pub basis: Option<Vec<Vec<(i64, i64)>>>,
    #[serde(default)]
    pub published_scales: Option<Vec<u32>>,
}

impl CodeEntry {
    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.l, self.m)
    }

    pub fn polynomials(&self) -> (LaurentPoly, LaurentPoly) {
        let lat = self.lattice();
        (LaurentPoly::from_terms(&self.a, lat), LaurentPoly::from_terms(&self.b, lat))
    }

    pub fn build(&self) -> Result<CssCode> {
        let (a, b) = self.polynomials();
        build_bb_code(&self.name, &a, &b)
    }

    /// Shipped basis patterns as syndrome vectors, if any.
    pub fn basis_patterns(&self) -> Option<Vec<BitVector>> {
        let lat = self.lattice();
        self.basis
            .as_ref()
            .map(|pats| pats.iter().map(|p| LaurentPoly::from_terms(p, lat).to_vector()).collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Catalog {
    pub version: u32,
    pub codes: Vec<CodeEntry>,
}

impl Catalog {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN).expect("built-in catalog is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, name: &str) -> Result<&CodeEntry> {
        self.codes.iter().find(|c| c.name == name).ok_or_else(|| Error::UnknownCode(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.codes.iter().map(|c| c.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses() {
        let cat = Catalog::builtin();
        assert!(cat.get("gross").is_ok());
        assert!(matches!(cat.get("nope"), Err(Error::UnknownCode(_))));
    }

    #[test]
    fn small_entries_match_published_parameters() {
        let cat = Catalog::builtin();
        for name in ["gross", "toric-3", "toric-5", "color-8", "color-12"] {
            let e = cat.get(name).unwrap();
            let c = e.build().unwrap();
            assert_eq!((c.n(), c.k()), (e.n, e.k), "{name}");
        }
    }

    #[test]
    fn basis_lengths_match_scales() {
        for e in &Catalog::builtin().codes {
            if let (Some(b), Some(s)) = (&e.basis, &e.published_scales) {
                assert_eq!(b.len(), s.len());
            }
        }
    }
}
