//! Bivariate Laurent polynomials over GF(2) on an `l × m` torus.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};

/// Torus dimensions. Site `x^i y^j` has index `i + l * j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    pub l: u32,
    pub m: u32,
}

impl Lattice {
    pub fn new(l: u32, m: u32) -> Self {
        assert!(l > 0 && m > 0, "lattice dimensions must be positive");
        Self { l, m }
    }

    #[inline]
    pub fn size(&self) -> usize {
        (self.l * self.m) as usize
    }

    #[inline]
    pub fn index(&self, i: u32, j: u32) -> usize {
        (i + self.l * j) as usize
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (u32, u32) {
        let idx = idx as u32;
        (idx % self.l, idx / self.l)
    }

    #[inline]
    pub fn wrap(&self, i: i64, j: i64) -> (u32, u32) {
        (i.rem_euclid(self.l as i64) as u32, j.rem_euclid(self.m as i64) as u32)
    }

    /// Index of the site reached from `idx` by `x^dx y^dy`.
    #[inline]
    pub fn translate(&self, idx: usize, dx: i64, dy: i64) -> usize {
        let (i, j) = self.coords(idx);
        let (a, b) = self.wrap(i as i64 + dx, j as i64 + dy);
        self.index(a, b)
    }

    /// Translate every set bit of a site-indexed vector.
    pub fn translate_vector(&self, v: &BitVector, dx: i64, dy: i64) -> BitVector {
        let mut out = BitVector::zeros(v.len());
        for idx in v.ones_iter() {
            out.flip(self.translate(idx, dx, dy));
        }
        out
    }

    /// Displacement `b - a` reduced into `(-l/2, l/2] × (-m/2, m/2]`.
    pub fn min_displacement(&self, a: usize, b: usize) -> (i64, i64) {
        let (ai, aj) = self.coords(a);
        let (bi, bj) = self.coords(b);
        (centered(bi as i64 - ai as i64, self.l as i64), centered(bj as i64 - aj as i64, self.m as i64))
    }
}

fn centered(d: i64, n: i64) -> i64 {
    let r = d.rem_euclid(n);
    if 2 * r > n {
        r - n
    } else {
        r
    }
}

/// `x^i y^j` with exponents reduced modulo the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
}

impl Monomial {
    pub fn new(i: i64, j: i64, lattice: Lattice) -> Self {
        let (i, j) = lattice.wrap(i, j);
        Self { i, j }
    }

    pub fn mul(self, other: Monomial, lattice: Lattice) -> Self {
        Self::new(self.i as i64 + other.i as i64, self.j as i64 + other.j as i64, lattice)
    }

    pub fn inverse(self, lattice: Lattice) -> Self {
        Self::new(-(self.i as i64), -(self.j as i64), lattice)
    }

    pub fn index(self, lattice: Lattice) -> usize {
        lattice.index(self.i, self.j)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = |f: &mut fmt::Formatter<'_>, var: char, e: u32| match e {
            0 => Ok(()),
            1 => write!(f, "{var}"),
            e => write!(f, "{var}^{e}"),
        };
        if self.i == 0 && self.j == 0 {
            return write!(f, "1");
        }
        part(f, 'x', self.i)?;
        part(f, 'y', self.j)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaurentPoly {
    lattice: Lattice,
    terms: BTreeSet<Monomial>,
}

impl LaurentPoly {
    pub fn zero(lattice: Lattice) -> Self {
        Self { lattice, terms: BTreeSet::new() }
    }

    pub fn one(lattice: Lattice) -> Self {
        Self::from_terms(&[(0, 0)], lattice)
    }

    /// Sum of `x^a y^b` over the given exponent pairs; repeated terms cancel.
    pub fn from_terms(terms: &[(i64, i64)], lattice: Lattice) -> Self {
        let mut p = Self::zero(lattice);
        for &(a, b) in terms {
            p.toggle(Monomial::new(a, b, lattice));
        }
        p
    }

    /// Polynomial whose terms are the set bits of a site-indexed vector.
    pub fn from_vector(v: &BitVector, lattice: Lattice) -> Self {
        let mut p = Self::zero(lattice);
        for idx in v.ones_iter() {
            let (i, j) = lattice.coords(idx);
            p.toggle(Monomial { i, j });
        }
        p
    }

    /// Parse expressions such as `x^3 + y + y^2`, `1 + x + xy`, `x^-1y^2`.
    pub fn parse(s: &str, lattice: Lattice) -> Result<Self> {
        let mut p = Self::zero(lattice);
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() || s == "0" {
            return Ok(p);
        }
        for term in s.split('+') {
            p.toggle(parse_monomial(term, lattice)?);
        }
        Ok(p)
    }

    fn toggle(&mut self, mono: Monomial) {
        if !self.terms.remove(&mono) {
            self.terms.insert(mono);
        }
    }

    #[inline]
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn terms(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().copied()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_lattice(&self, other: &Self) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(
                (self.lattice.l, self.lattice.m),
                (other.lattice.l, other.lattice.m),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_lattice(other)?;
        let mut out = self.clone();
        for t in other.terms() {
            out.toggle(t);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_lattice(other)?;
        let mut out = Self::zero(self.lattice);
        for a in self.terms() {
            for b in other.terms() {
                out.toggle(a.mul(b, self.lattice));
            }
        }
        Ok(out)
    }

    pub fn mul_monomial(&self, mono: Monomial) -> Self {
        let mut out = Self::zero(self.lattice);
        for t in self.terms() {
            out.toggle(t.mul(mono, self.lattice));
        }
        out
    }

    /// `p*(x, y) = p(x⁻¹, y⁻¹)`.
    pub fn antipode(&self) -> Self {
        let mut out = Self::zero(self.lattice);
        for t in self.terms() {
            out.toggle(t.inverse(self.lattice));
        }
        out
    }

    /// Indicator vector over lattice sites.
    pub fn to_vector(&self) -> BitVector {
        let mut v = BitVector::zeros(self.lattice.size());
        for t in self.terms() {
            v.flip(t.index(self.lattice));
        }
        v
    }

    /// Matrix of multiplication by `p` on the monomial basis.
    pub fn to_matrix(&self) -> BitMatrix {
        poly_to_matrix(self)
    }
}

fn parse_monomial(term: &str, lattice: Lattice) -> Result<Monomial> {
    if term == "1" {
        return Ok(Monomial::new(0, 0, lattice));
    }
    let bytes: Vec<char> = term.chars().collect();
    let (mut i, mut j) = (0i64, 0i64);
    let mut pos = 0;
    if bytes.is_empty() {
        return Err(Error::Parse("empty term".into()));
    }
    while pos < bytes.len() {
        let var = bytes[pos];
        if var != 'x' && var != 'y' {
            return Err(Error::Parse(format!("unexpected {var:?} in term {term:?}")));
        }
        pos += 1;
        let mut exp = 1i64;
        if pos < bytes.len() && bytes[pos] == '^' {
            pos += 1;
            let start = pos;
            if pos < bytes.len() && bytes[pos] == '-' {
                pos += 1;
            }
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let digits: String = bytes[start..pos].iter().collect();
            exp = digits.parse().map_err(|_| Error::Parse(format!("bad exponent in term {term:?}")))?;
        }
        if var == 'x' {
            i += exp;
        } else {
            j += exp;
        }
        if pos < bytes.len() && bytes[pos] == '*' {
            pos += 1;
        }
    }
    Ok(Monomial::new(i, j, lattice))
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ts: Vec<Monomial> = self.terms().collect();
        ts.sort_by_key(|t| (t.i + t.j, t.j, t.i));
        let parts: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `M[(i + a) + l (j + b), i + l j] = 1` for every term `x^a y^b`.
pub fn poly_to_matrix(p: &LaurentPoly) -> BitMatrix {
    let lat = p.lattice();
    let n = lat.size();
    let mut m = BitMatrix::zeros(n, n);
    for col in 0..n {
        for t in p.terms() {
            let row = lat.translate(col, t.i as i64, t.j as i64);
            m.flip(row, col);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_maps_to_identity() {
        let lat = Lattice::new(3, 4);
        assert_eq!(poly_to_matrix(&LaurentPoly::one(lat)), BitMatrix::identity(12));
    }

    #[test]
    fn x_on_two_sites_is_swap() {
        let lat = Lattice::new(2, 1);
        let m = poly_to_matrix(&LaurentPoly::from_terms(&[(1, 0)], lat));
        assert_eq!(m, BitMatrix::from_dense(&[vec![0, 1], vec![1, 0]]).unwrap());
    }

    #[test]
    fn collapsing_terms_on_small_torus() {
        // On Z2 x Z2, y^2 = 1 cancels the constant term and leaves y.
        let lat = Lattice::new(2, 2);
        let p = LaurentPoly::from_terms(&[(0, 0), (0, 1), (0, 2)], lat);
        assert_eq!(p, LaurentPoly::from_terms(&[(0, 1)], lat));
        let m = poly_to_matrix(&p);
        let expected = BitMatrix::from_dense(&[
            vec![0, 0, 1, 0],
            vec![0, 0, 0, 1],
            vec![1, 0, 0, 0],
            vec![0, 1, 0, 0],
        ])
        .unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn parse_and_display() {
        let lat = Lattice::new(12, 6);
        let p = LaurentPoly::parse("x^3 + y + y^2", lat).unwrap();
        assert_eq!(p, LaurentPoly::from_terms(&[(3, 0), (0, 1), (0, 2)], lat));
        assert_eq!(LaurentPoly::parse(&p.to_string(), lat).unwrap(), p);
        let q = LaurentPoly::parse("1 + x + xy", lat).unwrap();
        assert_eq!(q.num_terms(), 3);
        assert_eq!(LaurentPoly::parse("x^-1", lat).unwrap(), LaurentPoly::from_terms(&[(11, 0)], lat));
        assert!(LaurentPoly::parse("z", lat).is_err());
    }

    #[test]
    fn lattice_mismatch() {
        let a = LaurentPoly::one(Lattice::new(2, 2));
        let b = LaurentPoly::one(Lattice::new(3, 2));
        assert!(matches!(a.add(&b), Err(Error::LatticeMismatch(..))));
    }

    fn arb_poly(lat: Lattice) -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec((0i64..12, 0i64..12), 0..6).prop_map(move |ts| LaurentPoly::from_terms(&ts, lat))
    }

    proptest! {
        #[test]
        fn ring_homomorphism(p in arb_poly(Lattice::new(4, 3)), q in arb_poly(Lattice::new(4, 3))) {
            let prod = poly_to_matrix(&p.mul(&q).unwrap());
            prop_assert_eq!(prod, poly_to_matrix(&p).mul(&poly_to_matrix(&q)).unwrap());
            let sum = poly_to_matrix(&p.add(&q).unwrap());
            let mut expected = poly_to_matrix(&p);
            let mq = poly_to_matrix(&q);
            for r in 0..12 {
                for c in 0..12 {
                    if mq.get(r, c) {
                        expected.flip(r, c);
                    }
                }
            }
            prop_assert_eq!(sum, expected);
        }

        #[test]
        fn antipode_involution(p in arb_poly(Lattice::new(5, 4))) {
            prop_assert_eq!(p.antipode().antipode(), p);
        }

        #[test]
        fn antipode_is_transpose(p in arb_poly(Lattice::new(5, 4))) {
            prop_assert_eq!(poly_to_matrix(&p.antipode()), poly_to_matrix(&p).transpose());
        }

        #[test]
        fn exponents_stay_reduced(a in -50i64..50, b in -50i64..50) {
            let lat = Lattice::new(7, 5);
            let mono = Monomial::new(a, b, lat);
            prop_assert!(mono.i < 7 && mono.j < 5);
        }
    }
}
