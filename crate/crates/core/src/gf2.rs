//! Dense bit-packed linear algebra over GF(2).
//!
//! Bit `i` of a vector lives in word `i / 64` at position `i % 64`. Padding
//! bits past `len` are kept at zero so that word-level popcounts and
//! comparisons are exact.

use std::fmt;
use std::ops::BitXorAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self { len, words: vec![!0; words_for(len)] };
        v.clear_padding();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        v
    }

    /// Vector of length `len` with ones at `indices`. Repeated indices cancel.
    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(len);
        for &i in indices {
            v.try_flip(i)?;
        }
        Ok(v)
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::DimensionMismatch { expected: words_for(len), got: words.len() });
        }
        let mut v = Self { len, words };
        v.clear_padding();
        Ok(v)
    }

    fn clear_padding(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn try_get(&self, i: usize) -> Result<bool> {
        if i >= self.len {
            return Err(Error::OutOfRange { index: i, len: self.len });
        }
        Ok(self.get(i))
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    pub fn try_flip(&mut self, i: usize) -> Result<()> {
        if i >= self.len {
            return Err(Error::OutOfRange { index: i, len: self.len });
        }
        self.flip(i);
        Ok(())
    }

    #[inline]
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.try_xor_assign(other)?;
        Ok(out)
    }

    pub fn try_xor_assign(&mut self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch { expected: self.len, got: other.len });
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
        Ok(())
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &Self) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    /// Number of positions set in both vectors.
    pub fn overlap(&self, other: &Self) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Indices of set bits in ascending order.
    pub fn ones_iter(&self) -> Ones<'_> {
        Ones { words: &self.words, word_idx: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    pub fn support(&self) -> Vec<usize> {
        self.ones_iter().collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Bit string with the lowest index first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn parse_bit_string(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_bools(&bits))
    }

    /// Sub-vector `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len);
        let mut out = Self::zeros(len);
        for i in self.ones_iter().skip_while(|&i| i < start).take_while(|&i| i < start + len) {
            out.flip(i - start);
        }
        out
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.len + other.len);
        for i in self.ones_iter() {
            out.flip(i);
        }
        for i in other.ones_iter() {
            out.flip(self.len + i);
        }
        out
    }
}

impl BitXorAssign<&BitVector> for BitVector {
    /// Panics on length mismatch; use [`BitVector::try_xor_assign`] for a checked variant.
    #[inline]
    fn bitxor_assign(&mut self, rhs: &BitVector) {
        assert_eq!(self.len, rhs.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= *b;
        }
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[{}]{:?}", self.len, self.support())
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let tz = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_idx * WORD + tz);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

/// Row-major packed matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[BitVector], cols: usize) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, v) in rows.iter().enumerate() {
            if v.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: v.len() });
            }
            m.row_words_mut(r).copy_from_slice(v.words());
        }
        Ok(m)
    }

    pub fn from_columns(columns: &[BitVector], rows: usize) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (c, v) in columns.iter().enumerate() {
            if v.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, got: v.len() });
            }
            for r in v.ones_iter() {
                m.set(r, c, true);
            }
        }
        Ok(m)
    }

    /// Build from a dense 0/1 table. Every row must have the same length.
    pub fn from_dense(table: &[Vec<u8>]) -> Result<Self> {
        let cols = table.first().map_or(0, Vec::len);
        let mut m = Self::zeros(table.len(), cols);
        for (r, row) in table.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: row.len() });
            }
            for (c, &b) in row.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(r, c, true);
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of range for {}x{}", self.rows, self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    pub fn try_get(&self, r: usize, c: usize) -> Result<bool> {
        if r >= self.rows {
            return Err(Error::OutOfRange { index: r, len: self.rows });
        }
        if c >= self.cols {
            return Err(Error::OutOfRange { index: c, len: self.cols });
        }
        Ok(self.get(r, c))
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of range for {}x{}", self.rows, self.cols);
        let w = &mut self.data[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub(crate) fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.stride + c / WORD] ^= 1 << (c % WORD);
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector { len: self.cols, words: self.row_words(r).to_vec() }
    }

    pub fn column(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.flip(r);
            }
        }
        v
    }

    pub fn row_vectors(&self) -> Vec<BitVector> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..dst * s + s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..src * s + s])
        };
        for (x, y) in a.iter_mut().zip(b.iter()) {
            *x ^= *y;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.data.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u64;
            for (a, b) in self.row_words(r).iter().zip(v.words()) {
                acc ^= a & b;
            }
            if acc.count_ones() & 1 == 1 {
                out.flip(r);
            }
        }
        Ok(out)
    }

    /// `vᵀ · self`, i.e. XOR of the rows selected by `v`.
    pub fn left_mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: v.len() });
        }
        let mut out = BitVector::zeros(self.cols);
        for r in v.ones_iter() {
            for (a, b) in out.words.iter_mut().zip(self.row_words(r)) {
                *a ^= *b;
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let sel = self.row(r);
            let acc = other.left_mul_vec(&sel)?;
            out.row_words_mut(r).copy_from_slice(acc.words());
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).ones_iter() {
                t.flip(c, r);
            }
        }
        t
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: other.rows });
        }
        let mut out = BitMatrix::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in self.row(r).ones_iter() {
                out.flip(r, c);
            }
            for c in other.row(r).ones_iter() {
                out.flip(r, self.cols + c);
            }
        }
        Ok(out)
    }

    pub fn vstack(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.cols });
        }
        let mut out = BitMatrix::zeros(self.rows + other.rows, self.cols);
        out.data[..self.data.len()].copy_from_slice(&self.data);
        out.data[self.data.len()..].copy_from_slice(&other.data);
        Ok(out)
    }

    /// Columns `[start, start + len)`.
    pub fn column_block(&self, start: usize, len: usize) -> BitMatrix {
        assert!(start + len <= self.cols);
        let mut out = BitMatrix::zeros(self.rows, len);
        for r in 0..self.rows {
            for c in self.row(r).ones_iter() {
                if c >= start && c < start + len {
                    out.flip(r, c - start);
                }
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, cols.len());
        for (k, &c) in cols.iter().enumerate() {
            for r in 0..self.rows {
                if self.get(r, c) {
                    out.flip(r, k);
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        row_reduce(self).rank
    }

    pub fn weight(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(64) {
            let line: String = (0..self.cols.min(128)).map(|c| if self.get(r, c) { '1' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RowReduction {
    pub rref: BitMatrix,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

/// Reduced row echelon form by Gauss-Jordan elimination.
pub fn row_reduce(m: &BitMatrix) -> RowReduction {
    let mut a = m.clone();
    let pivots = reduce_in_place(&mut a, m.cols, None);
    let rank = pivots.len();
    RowReduction { rref: a, pivots, rank }
}

/// Gauss-Jordan on the first `pivot_cols` columns. When `companion` is given,
/// every row operation is mirrored on it.
fn reduce_in_place(a: &mut BitMatrix, pivot_cols: usize, mut companion: Option<&mut BitMatrix>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..pivot_cols {
        if row == a.rows {
            break;
        }
        let Some(p) = (row..a.rows).find(|&r| a.get(r, c)) else { continue };
        a.swap_rows(row, p);
        if let Some(t) = companion.as_deref_mut() {
            t.swap_rows(row, p);
        }
        for r in 0..a.rows {
            if r != row && a.get(r, c) {
                a.xor_rows(r, row);
                if let Some(t) = companion.as_deref_mut() {
                    t.xor_rows(r, row);
                }
            }
        }
        pivots.push(c);
        row += 1;
    }
    pivots
}

/// A factorisation `T · M = R` with `R` in reduced row echelon form, reusable
/// for many right-hand sides.
#[derive(Clone, Debug)]
pub struct Elimination {
    rows: usize,
    cols: usize,
    rref: BitMatrix,
    transform: BitMatrix,
    pivots: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub min_weight: bool,
    /// Largest nullspace dimension for which the full coset is swept.
    pub sweep_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { min_weight: false, sweep_limit: 20 }
    }
}

impl SolveOptions {
    pub fn min_weight() -> Self {
        Self { min_weight: true, ..Self::default() }
    }
}

impl Elimination {
    pub fn new(m: &BitMatrix) -> Self {
        let mut rref = m.clone();
        let mut transform = BitMatrix::identity(m.rows);
        let pivots = reduce_in_place(&mut rref, m.cols, Some(&mut transform));
        Self { rows: m.rows, cols: m.cols, rref, transform, pivots }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn rref(&self) -> &BitMatrix {
        &self.rref
    }

    /// Rows spanning the left nullspace `{y : yᵀ M = 0}`.
    pub fn left_nullspace(&self) -> BitMatrix {
        let rank = self.rank();
        let mut out = BitMatrix::zeros(self.rows - rank, self.rows);
        for r in rank..self.rows {
            out.row_words_mut(r - rank).copy_from_slice(self.transform.row_words(r));
        }
        out
    }

    fn reduce_rhs(&self, b: &BitVector) -> Result<BitVector> {
        self.transform.mul_vec(b)
    }

    pub fn in_image(&self, b: &BitVector) -> Result<bool> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        let rank = self.rank();
        for r in rank..self.rows {
            let mut acc = 0u64;
            for (a, w) in self.transform.row_words(r).iter().zip(b.words()) {
                acc ^= a & w;
            }
            if acc.count_ones() & 1 == 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Some `x` with `M x = b`, or `None` if `b` is outside the image.
    pub fn solve(&self, b: &BitVector) -> Result<Option<BitVector>> {
        self.solve_with(b, SolveOptions::default())
    }

    pub fn solve_with(&self, b: &BitVector, opts: SolveOptions) -> Result<Option<BitVector>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        let tb = self.reduce_rhs(b)?;
        let rank = self.rank();
        if tb.ones_iter().any(|r| r >= rank) {
            return Ok(None);
        }
        let mut x = BitVector::zeros(self.cols);
        for r in tb.ones_iter() {
            x.flip(self.pivots[r]);
        }
        if opts.min_weight {
            let basis = self.nullspace();
            x = reduce_weight(x, &basis, opts.sweep_limit);
        }
        Ok(Some(x))
    }

    pub fn nullspace(&self) -> Vec<BitVector> {
        let mut is_pivot = vec![false; self.cols];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        let mut out = Vec::with_capacity(self.cols - self.rank());
        for f in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = BitVector::zeros(self.cols);
            v.flip(f);
            for (k, &p) in self.pivots.iter().enumerate() {
                if self.rref.get(k, f) {
                    v.flip(p);
                }
            }
            out.push(v);
        }
        out
    }
}

/// Lower the weight of `x` within the coset `x + span(basis)`.
///
/// Exhaustive Gray-code sweep when `basis.len() <= sweep_limit`, otherwise a
/// single greedy pass that keeps every basis vector that strictly reduces the
/// weight.
pub fn reduce_weight(x: BitVector, basis: &[BitVector], sweep_limit: usize) -> BitVector {
    if basis.is_empty() {
        return x;
    }
    if basis.len() <= sweep_limit {
        let mut cur = x.clone();
        let mut best = x;
        let mut best_w = best.weight();
        let total: u64 = 1 << basis.len();
        for g in 1..total {
            let bit = g.trailing_zeros() as usize;
            cur ^= &basis[bit];
            let w = cur.weight();
            if w < best_w {
                best_w = w;
                best = cur.clone();
            }
        }
        best
    } else {
        let mut cur = x;
        let mut w = cur.weight();
        for v in basis {
            let cand = cur.xor(v).expect("equal lengths");
            let cw = cand.weight();
            if cw < w {
                cur = cand;
                w = cw;
            }
        }
        cur
    }
}

/// Echelon basis that grows one vector at a time.
#[derive(Clone, Debug, Default)]
pub struct IncrementalBasis {
    rows: Vec<BitVector>,
    pivots: Vec<usize>,
}

impl IncrementalBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reduce `v` against the stored rows.
    pub fn reduce(&self, v: &BitVector) -> BitVector {
        let mut v = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v.get(p) {
                v ^= row;
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        self.reduce(v).is_zero()
    }

    /// Insert `v`; returns `false` if it was already in the span.
    pub fn insert(&mut self, v: &BitVector) -> bool {
        let r = self.reduce(v);
        match r.ones_iter().next() {
            None => false,
            Some(p) => {
                self.rows.push(r);
                self.pivots.push(p);
                true
            }
        }
    }
}

/// Solve `m x = b`. See [`SolveOptions`] for the minimum-weight mode.
pub fn solve(m: &BitMatrix, b: &BitVector, opts: SolveOptions) -> Result<Option<BitVector>> {
    if b.len() != m.rows() {
        return Err(Error::DimensionMismatch { expected: m.rows(), got: b.len() });
    }
    Elimination::new(m).solve_with(b, opts)
}

pub fn nullspace_basis(m: &BitMatrix) -> Vec<BitVector> {
    Elimination::new(m).nullspace()
}

pub fn in_image(m: &BitMatrix, b: &BitVector) -> Result<bool> {
    if b.len() != m.rows() {
        return Err(Error::DimensionMismatch { expected: m.rows(), got: b.len() });
    }
    // Rank test on [m | b] avoids building the full transform.
    let r0 = m.rank();
    let aug = m.hstack(&BitMatrix::from_columns(std::slice::from_ref(b), m.rows())?)?;
    Ok(aug.rank() == r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen_bool(0.5) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    fn random_vector(rng: &mut impl Rng, len: usize) -> BitVector {
        let bits: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.5)).collect();
        BitVector::from_bools(&bits)
    }

    #[test]
    fn identity_rank_and_pivots() {
        let rr = row_reduce(&BitMatrix::identity(3));
        assert_eq!(rr.rank, 3);
        assert_eq!(rr.pivots, vec![0, 1, 2]);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let rr = row_reduce(&BitMatrix::zeros(4, 4));
        assert_eq!(rr.rank, 0);
        assert!(rr.pivots.is_empty());
    }

    #[test]
    fn duplicate_rows_rank_one() {
        let m = BitMatrix::from_dense(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = BitVector::from_indices(5, &[0, 3]).unwrap();
        let x = solve(&BitMatrix::identity(5), &b, SolveOptions::default()).unwrap().unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn solve_zero_matrix_nonzero_rhs_fails() {
        let b = BitVector::from_indices(3, &[1]).unwrap();
        assert!(solve(&BitMatrix::zeros(3, 3), &b, SolveOptions::default()).unwrap().is_none());
    }

    #[test]
    fn solve_dimension_mismatch() {
        let b = BitVector::zeros(4);
        assert!(matches!(
            solve(&BitMatrix::zeros(3, 3), &b, SolveOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_random_full_row_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut done = 0;
        while done < 20 {
            let m = random_matrix(&mut rng, 10, 14);
            if m.rank() != 10 {
                continue;
            }
            let x0 = random_vector(&mut rng, 14);
            let b = m.mul_vec(&x0).unwrap();
            let x = solve(&m, &b, SolveOptions::default()).unwrap().unwrap();
            assert_eq!(m.mul_vec(&x).unwrap(), b);
            done += 1;
        }
    }

    #[test]
    fn min_weight_solve_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 5, 10);
            let x0 = random_vector(&mut rng, 10);
            let b = m.mul_vec(&x0).unwrap();
            let x = solve(&m, &b, SolveOptions::min_weight()).unwrap().unwrap();
            assert_eq!(m.mul_vec(&x).unwrap(), b);
            let brute = (0u32..1 << 10)
                .map(|bits| BitVector::from_words(10, vec![bits as u64]).unwrap())
                .filter(|v| m.mul_vec(v).unwrap() == b)
                .map(|v| v.weight())
                .min()
                .unwrap();
            assert_eq!(x.weight(), brute);
        }
    }

    #[test]
    fn greedy_pass_never_increases_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 6, 40);
        let x0 = random_vector(&mut rng, 40);
        let b = m.mul_vec(&x0).unwrap();
        let opts = SolveOptions { min_weight: true, sweep_limit: 0 };
        let plain = solve(&m, &b, SolveOptions::default()).unwrap().unwrap();
        let x = solve(&m, &b, opts).unwrap().unwrap();
        assert_eq!(m.mul_vec(&x).unwrap(), b);
        assert!(x.weight() <= plain.weight());
    }

    #[test]
    fn nullspace_identity_empty() {
        assert!(nullspace_basis(&BitMatrix::identity(4)).is_empty());
    }

    #[test]
    fn nullspace_zero_full() {
        assert_eq!(nullspace_basis(&BitMatrix::zeros(2, 3)).len(), 3);
    }

    #[test]
    fn nullspace_path_matrix_by_enumeration() {
        let m = BitMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let ns = nullspace_basis(&m);
        let kernel: Vec<u64> =
            (1u64..8).filter(|&w| m.mul_vec(&BitVector::from_words(3, vec![w]).unwrap()).unwrap().is_zero()).collect();
        assert_eq!(kernel, vec![0b111]);
        assert_eq!(ns, vec![BitVector::from_indices(3, &[0, 1, 2]).unwrap()]);
    }

    #[test]
    fn in_image_basics() {
        let m = BitMatrix::zeros(3, 2);
        assert!(in_image(&m, &BitVector::zeros(3)).unwrap());
        assert!(!in_image(&m, &BitVector::from_indices(3, &[2]).unwrap()).unwrap());
    }

    #[test]
    fn out_of_range_access_is_an_error() {
        let m = BitMatrix::zeros(2, 3);
        assert!(m.try_get(0, 3).is_err());
        assert!(m.try_get(2, 0).is_err());
        let v = BitVector::zeros(5);
        assert!(v.try_get(5).is_err());
        assert!(v.xor(&BitVector::zeros(4)).is_err());
    }

    #[test]
    fn left_nullspace_annihilates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 12, 7);
        let e = Elimination::new(&m);
        let n = e.left_nullspace();
        assert_eq!(n.rows(), 12 - e.rank());
        assert!(n.mul(&m).unwrap().is_zero());
    }

    #[test]
    fn bit_string_round_trip() {
        let v = BitVector::from_indices(70, &[0, 5, 64, 69]).unwrap();
        assert_eq!(BitVector::parse_bit_string(&v.to_bit_string()).unwrap(), v);
        assert_eq!(v.support(), vec![0, 5, 64, 69]);
        assert_eq!(v.weight(), 4);
    }

    fn arb_matrix() -> impl Strategy<Value = BitMatrix> {
        (1usize..20, 1usize..20, any::<u64>()).prop_map(|(r, c, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_matrix(&mut rng, r, c)
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(m in arb_matrix()) {
            prop_assert_eq!(m.rank() + nullspace_basis(&m).len(), m.cols());
        }

        #[test]
        fn nullspace_vectors_are_independent_kernel_elements(m in arb_matrix()) {
            let ns = nullspace_basis(&m);
            for v in &ns {
                prop_assert!(m.mul_vec(v).unwrap().is_zero());
            }
            if !ns.is_empty() {
                prop_assert_eq!(BitMatrix::from_rows(&ns, m.cols()).unwrap().rank(), ns.len());
            }
        }

        #[test]
        fn solve_reproduces_rhs(m in arb_matrix(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_vector(&mut rng, m.rows());
            if let Some(x) = solve(&m, &b, SolveOptions::default()).unwrap() {
                prop_assert_eq!(m.mul_vec(&x).unwrap(), b.clone());
            }
            prop_assert_eq!(
                solve(&m, &b, SolveOptions::default()).unwrap().is_some(),
                in_image(&m, &b).unwrap()
            );
        }

        #[test]
        fn image_membership(m in arb_matrix(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_vector(&mut rng, m.cols());
            let b = m.mul_vec(&x).unwrap();
            prop_assert!(in_image(&m, &b).unwrap());
            prop_assert!(Elimination::new(&m).in_image(&b).unwrap());
        }

        #[test]
        fn row_reduce_idempotent(m in arb_matrix()) {
            let once = row_reduce(&m).rref;
            prop_assert_eq!(row_reduce(&once).rref, once);
        }
    }
}
