//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's own elimination or matching code.

#![allow(dead_code)]

use ttimatch::{BitMatrix, BitVector, CssCode, Sector};

/// Rank over GF(2) by plain row reduction on word vectors.
pub fn rank(rows: &[Vec<u64>]) -> usize {
    let mut rows: Vec<Vec<u64>> = rows.to_vec();
    let bits = rows.first().map_or(0, |r| r.len() * 64);
    let mut r = 0;
    for col in 0..bits {
        let (w, b) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (r..rows.len()).find(|&i| rows[i][w] & b != 0) else { continue };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[w] & b != 0 {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

pub fn matrix_rows(m: &BitMatrix) -> Vec<Vec<u64>> {
    (0..m.rows()).map(|i| m.row_words(i).to_vec()).collect()
}

pub fn matrix_rank(m: &BitMatrix) -> usize {
    rank(&matrix_rows(m))
}

pub fn in_rowspace(m: &BitMatrix, v: &BitVector) -> bool {
    let mut rows = matrix_rows(m);
    let base = rank(&rows);
    rows.push(v.words().to_vec());
    rank(&rows) == base
}

/// Syndrome computed by hand from the check rows.
pub fn syndrome(h: &BitMatrix, e: &BitVector) -> BitVector {
    let bits: Vec<bool> = (0..h.rows()).map(|i| h.row(i).overlap(e) % 2 == 1).collect();
    BitVector::from_bools(&bits)
}

/// Checks that detect errors of the given sector.
pub fn detecting(code: &CssCode, sector: Sector) -> &BitMatrix {
    match sector {
        Sector::X => code.hx(),
        Sector::Z => code.hz(),
    }
}

/// A residual error with trivial syndrome is harmless exactly when it is a
/// product of stabilizers of its own type, i.e. lies in the row space of the
/// other check matrix.
pub fn is_logical(code: &CssCode, residual: &BitVector) -> bool {
    is_logical_in(code, Sector::X, residual)
}

pub fn is_logical_in(code: &CssCode, sector: Sector, residual: &BitVector) -> bool {
    !in_rowspace(detecting(code, sector.opposite()), residual)
}

/// Minimum total weight of a perfect matching on `n` vertices by recursion.
pub fn brute_mwpm(n: usize, w: &dyn Fn(usize, usize) -> i64) -> i64 {
    fn go(free: &mut Vec<usize>, w: &dyn Fn(usize, usize) -> i64) -> i64 {
        if free.is_empty() {
            return 0;
        }
        let a = free.remove(0);
        let mut best = i64::MAX;
        for k in 0..free.len() {
            let b = free.remove(k);
            best = best.min(w(a, b) + go(free, w));
            free.insert(k, b);
        }
        free.insert(0, a);
        best
    }
    go(&mut (0..n).collect(), w)
}

/// Visit every subset of `0..n` with exactly `k` elements.
pub fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, cur: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, cur, k, f);
            cur.pop();
        }
    }
    go(0, n, &mut Vec::new(), k, f);
}
