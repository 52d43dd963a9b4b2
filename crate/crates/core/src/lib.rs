//! Decoding toolkit for two-dimensional translation-invariant CSS codes.
//!
//! Codes are built from a pair of bivariate polynomials on an `l x m` torus
//! (bivariate bicycle codes, including the toric and hexagonal color codes).
//! On top of the code construction the crate provides the excitation-class
//! (cokernel) machinery, per-basis matching graphs, and the matching
//! decoders, together with belief-propagation baselines and a Monte Carlo
//! harness.

pub mod catalog;
pub mod cluster;
pub mod code;
pub mod coker;
pub mod decoders;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod local;
pub mod matching;
pub mod poly;

pub use catalog::{Catalog, CodeEntry};
pub use code::{CssCode, Sector};
pub use coker::{CokerBasisData, ShortString};
pub use decoders::{build_decoder, DecodeOutcome, Decoder, DecoderKind, DecoderParams};
pub use harness::{MonteCarloReport, NoiseModel, PointRecord};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVector};
pub use poly::{Lattice, LaurentPoly, Monomial};
