//! Bivariate bicycle CSS codes and their syndrome and logical machinery.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector, Elimination, IncrementalBasis};
use crate::poly::{poly_to_matrix, Lattice, LaurentPoly};

/// Which check matrix detects the errors being decoded.
///
/// `X` means errors are detected by `hx` (the default used by the decoders);
/// `Z` means errors are detected by `hz`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    #[default]
    X,
    Z,
}

impl Sector {
    pub fn opposite(self) -> Sector {
        match self {
            Sector::X => Sector::Z,
            Sector::Z => Sector::X,
        }
    }
}

/// Sparse incidence between qubits and checks for one check matrix.
#[derive(Clone, Debug)]
pub struct Tanner {
    pub qubit_checks: Vec<Vec<u32>>,
    pub check_qubits: Vec<Vec<u32>>,
}

impl Tanner {
    fn new(h: &BitMatrix) -> Self {
        let mut qubit_checks = vec![Vec::new(); h.cols()];
        let mut check_qubits = vec![Vec::new(); h.rows()];
        for r in 0..h.rows() {
            for q in h.row(r).ones_iter() {
                qubit_checks[q].push(r as u32);
                check_qubits[r].push(q as u32);
            }
        }
        Self { qubit_checks, check_qubits }
    }
}

#[derive(Debug)]
struct SectorData {
    tanner: Tanner,
    rank: usize,
    logicals: OnceLock<Vec<BitVector>>,
    elimination: OnceLock<Elimination>,
}

#[derive(Debug)]
pub struct CssCode {
    name: String,
    lattice: Lattice,
    a: LaurentPoly,
    b: LaurentPoly,
    hx: BitMatrix,
    hz: BitMatrix,
    k: usize,
    x: SectorData,
    z: SectorData,
}

/// Build the code with `hx = [a | b]` and `hz = [b* | a*]`.
pub fn build_bb_code(name: &str, a: &LaurentPoly, b: &LaurentPoly) -> Result<CssCode> {
    if a.lattice() != b.lattice() {
        let (la, lb) = (a.lattice(), b.lattice());
        return Err(Error::LatticeMismatch((la.l, la.m), (lb.l, lb.m)));
    }
    let hx = poly_to_matrix(a).hstack(&poly_to_matrix(b))?;
    let hz = poly_to_matrix(&b.antipode()).hstack(&poly_to_matrix(&a.antipode()))?;
    if !hx.mul(&hz.transpose())?.is_zero() {
        return Err(Error::NotOrthogonal);
    }
    let rx = hx.rank();
    let rz = hz.rank();
    let n = hx.cols();
    Ok(CssCode {
        name: name.to_string(),
        lattice: a.lattice(),
        a: a.clone(),
        b: b.clone(),
        k: n - rx - rz,
        x: SectorData { tanner: Tanner::new(&hx), rank: rx, logicals: OnceLock::new(), elimination: OnceLock::new() },
        z: SectorData { tanner: Tanner::new(&hz), rank: rz, logicals: OnceLock::new(), elimination: OnceLock::new() },
        hx,
        hz,
    })
}

impl CssCode {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn polynomials(&self) -> (&LaurentPoly, &LaurentPoly) {
        (&self.a, &self.b)
    }

    pub fn n(&self) -> usize {
        self.hx.cols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_checks(&self) -> usize {
        self.hx.rows()
    }

    pub fn hx(&self) -> &BitMatrix {
        &self.hx
    }

    pub fn hz(&self) -> &BitMatrix {
        &self.hz
    }

    pub fn is_orthogonal(&self) -> bool {
        self.hx.mul(&self.hz.transpose()).map(|m| m.is_zero()).unwrap_or(false)
    }

    fn data(&self, sector: Sector) -> &SectorData {
        match sector {
            Sector::X => &self.x,
            Sector::Z => &self.z,
        }
    }

    pub fn check_matrix(&self, sector: Sector) -> &BitMatrix {
        match sector {
            Sector::X => &self.hx,
            Sector::Z => &self.hz,
        }
    }

    pub fn tanner(&self, sector: Sector) -> &Tanner {
        &self.data(sector).tanner
    }

    pub fn rank(&self, sector: Sector) -> usize {
        self.data(sector).rank
    }

    /// Elimination of the detecting matrix, computed on first use.
    pub fn elimination(&self, sector: Sector) -> &Elimination {
        self.data(sector).elimination.get_or_init(|| Elimination::new(self.check_matrix(sector)))
    }

    pub fn syndrome(&self, e: &BitVector, sector: Sector) -> Result<BitVector> {
        if e.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: e.len() });
        }
        let tanner = self.tanner(sector);
        let mut s = BitVector::zeros(self.num_checks());
        for q in e.ones_iter() {
            for &c in &tanner.qubit_checks[q] {
                s.flip(c as usize);
            }
        }
        Ok(s)
    }

    /// Translate an error pattern by `x^dx y^dy` (both qubit blocks move together).
    pub fn translate_error(&self, e: &BitVector, dx: i64, dy: i64) -> BitVector {
        let lat = self.lattice;
        let half = lat.size();
        let mut out = BitVector::zeros(e.len());
        for q in e.ones_iter() {
            let (block, site) = (q / half, q % half);
            out.flip(block * half + lat.translate(site, dx, dy));
        }
        out
    }

    /// Lattice site of a qubit.
    #[inline]
    pub fn qubit_site(&self, q: usize) -> usize {
        q % self.lattice.size()
    }

    /// `k` representatives of ker(detecting) modulo the row space of the other matrix.
    pub fn logical_basis(&self, sector: Sector) -> &[BitVector] {
        self.data(sector).logicals.get_or_init(|| {
            let other = self.check_matrix(sector.opposite());
            let mut basis = IncrementalBasis::new();
            for r in 0..other.rows() {
                basis.insert(&other.row(r));
            }
            let mut out = Vec::with_capacity(self.k);
            for v in self.elimination(sector).nullspace() {
                if out.len() == self.k {
                    break;
                }
                if basis.insert(&v) {
                    out.push(v);
                }
            }
            out
        })
    }

    /// Whether a zero-syndrome residual acts as a nontrivial logical operator.
    pub fn logical_failure(&self, residual: &BitVector, sector: Sector) -> Result<bool> {
        if !self.syndrome(residual, sector)?.is_zero() {
            return Err(Error::NonzeroSyndrome);
        }
        Ok(self.logical_basis(sector.opposite()).iter().any(|l| l.dot(residual)))
    }

    /// Rank-based stabilizer membership test; slower reference for [`Self::logical_failure`].
    pub fn is_stabilizer(&self, residual: &BitVector, sector: Sector) -> Result<bool> {
        let other = self.check_matrix(sector.opposite());
        let stacked = other.vstack(&BitMatrix::from_rows(std::slice::from_ref(residual), other.cols())?)?;
        Ok(stacked.rank() == self.rank(sector.opposite()))
    }
}
