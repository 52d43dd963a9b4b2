//! Excitation classes: cokernel basis, translation scales, decomposition
//! dictionary, rewrite operators and short strings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::CodeEntry;
use crate::code::{CssCode, Sector};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector, Elimination, IncrementalBasis, SolveOptions};
use crate::local::{local_solve, min_weight_search, windowed_solve};
use crate::poly::Lattice;

const CACHE_FORMAT: u32 = 1;

/// `n_checks - rank(H)`.
pub fn coker_dimension(code: &CssCode, sector: Sector) -> usize {
    code.num_checks() - code.rank(sector)
}

/// Whether `candidates` is a basis of the cokernel: `rank([H | B])` must equal
/// the number of checks and exceed `rank(H)` by exactly `|candidates|`.
pub fn verify_basis(code: &CssCode, sector: Sector, candidates: &[BitVector]) -> bool {
    if candidates.is_empty() {
        return false;
    }
    let h = code.check_matrix(sector);
    let Ok(b) = BitMatrix::from_columns(candidates, h.rows()) else { return false };
    let Ok(ib) = h.hstack(&b) else { return false };
    let r = ib.rank();
    r == h.rows() && r - code.rank(sector) == candidates.len()
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// Smallest `b ≥ 1` dividing `lcm(l, m)` with `x^b u ≡ u` and `y^b u ≡ u` modulo im H.
pub fn translation_scale(code: &CssCode, sector: Sector, u: &BitVector) -> Result<u32> {
    let elim = code.elimination(sector);
    if elim.in_image(u)? {
        return Err(Error::TrivialClass);
    }
    let lat = code.lattice();
    for b in divisors(lcm(lat.l, lat.m)) {
        let dx = lat.translate_vector(u, b as i64, 0).xor(u)?;
        let dy = lat.translate_vector(u, 0, b as i64).xor(u)?;
        if elim.in_image(&dx)? && elim.in_image(&dy)? {
            return Ok(b);
        }
    }
    Err(Error::Invariant("no translation scale divides lcm(l, m)".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Horizontal,
    Vertical,
}

impl Direction {
    pub fn unit(self) -> (i64, i64) {
        match self {
            Direction::Horizontal => (1, 0),
            Direction::Vertical => (0, 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StringSource {
    Transfer,
    Search,
    Window,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShortString {
    pub basis_index: usize,
    pub direction: Direction,
    pub step: u32,
    pub error: BitVector,
    pub source: StringSource,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisElement {
    pub pattern: BitVector,
    pub scale: u32,
}

/// Horizontal or vertical transfer map between a reference cell and its
/// neighbour at `-direction`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub direction: Direction,
    pub cell: (u32, u32),
    pub matrix: BitMatrix,
    /// Error realising each unit excitation of the reference cell.
    pub reps: Vec<BitVector>,
}

impl TransferMatrix {
    fn local_index(&self, i: u32, j: u32) -> usize {
        (i + self.cell.0 * j) as usize
    }

    /// Cell-local vector of a pattern, if the pattern fits in the reference cell.
    pub fn local_vector(&self, lat: Lattice, pattern: &BitVector) -> Option<BitVector> {
        let mut v = BitVector::zeros((self.cell.0 * self.cell.1) as usize);
        for site in pattern.ones_iter() {
            let (i, j) = lat.coords(site);
            if i >= self.cell.0 || j >= self.cell.1 {
                return None;
            }
            v.flip(self.local_index(i, j));
        }
        Some(v)
    }

    pub fn fixed_space(&self) -> Vec<BitVector> {
        let n = self.matrix.rows();
        let mut a = self.matrix.clone();
        for i in 0..n {
            a.flip(i, i);
        }
        Elimination::new(&a).nullspace()
    }

    pub fn power_apply(&self, v: &BitVector, k: usize) -> BitVector {
        let mut out = v.clone();
        for _ in 0..k {
            out = self.matrix.mul_vec(&out).expect("square matrix");
        }
        out
    }

    fn lift(&self, w: &BitVector, n_qubits: usize) -> BitVector {
        let mut e = BitVector::zeros(n_qubits);
        for u in w.ones_iter() {
            e ^= &self.reps[u];
        }
        e
    }
}

/// Reference cell size: the largest divisor of each lattice dimension not
/// exceeding the spread of the checks touched by a single qubit.
pub fn transfer_cell(code: &CssCode, sector: Sector) -> (u32, u32) {
    let lat = code.lattice();
    let tanner = code.tanner(sector);
    let (mut rx, mut ry) = (1i64, 1i64);
    for checks in &tanner.qubit_checks {
        for &a in checks {
            for &b in checks {
                let (dx, dy) = lat.min_displacement(a as usize, b as usize);
                rx = rx.max(dx.abs());
                ry = ry.max(dy.abs());
            }
        }
    }
    let pick = |n: u32, r: i64| divisors(n).into_iter().filter(|&d| d as i64 <= r).max().unwrap_or(1);
    (pick(lat.l, rx), pick(lat.m, ry))
}

/// Transfer matrix for cells of shape `cell`, or `None` when some unit
/// excitation cannot be moved into the neighbouring cell.
pub fn transfer_matrix(code: &CssCode, sector: Sector, direction: Direction, cell: (u32, u32)) -> Option<TransferMatrix> {
    let lat = code.lattice();
    let (cl, cm) = cell;
    if lat.l % cl != 0 || lat.m % cm != 0 {
        return None;
    }
    let (ncx, ncy) = (lat.l / cl, lat.m / cm);
    let adj = match direction {
        Direction::Horizontal if ncx >= 3 => (ncx - 1, 0),
        Direction::Vertical if ncy >= 3 => (0, ncy - 1),
        _ => return None,
    };
    let cell_of = |site: usize| {
        let (i, j) = lat.coords(site);
        (i / cl, j / cm)
    };
    let tanner = code.tanner(sector);
    let qubits: Vec<usize> = (0..code.n())
        .filter(|&q| {
            let c = cell_of(code.qubit_site(q));
            c == (0, 0) || c == adj
        })
        .collect();
    let mut rows: Vec<usize> = qubits
        .iter()
        .flat_map(|&q| tanner.qubit_checks[q].iter().map(|&c| c as usize))
        .chain((0..lat.size()).filter(|&s| cell_of(s) == (0, 0)))
        .filter(|&c| cell_of(c) != adj)
        .collect();
    rows.sort_unstable();
    rows.dedup();
    let mut row_pos = vec![usize::MAX; lat.size()];
    for (k, &r) in rows.iter().enumerate() {
        row_pos[r] = k;
    }
    let mut sub = BitMatrix::zeros(rows.len(), qubits.len());
    for (k, &q) in qubits.iter().enumerate() {
        for &c in &tanner.qubit_checks[q] {
            if row_pos[c as usize] != usize::MAX {
                sub.set(row_pos[c as usize], k, true);
            }
        }
    }
    let elim = Elimination::new(&sub);
    let n_local = (cl * cm) as usize;
    let mut matrix = BitMatrix::zeros(n_local, n_local);
    let mut reps = Vec::with_capacity(n_local);
    let opts = SolveOptions { min_weight: true, sweep_limit: 20 };
    for pj in 0..cm {
        for pi in 0..cl {
            let unit = lat.index(pi, pj);
            let mut rhs = BitVector::zeros(rows.len());
            rhs.flip(row_pos[unit]);
            let x = elim.solve_with(&rhs, opts).ok()??;
            let mut e = BitVector::zeros(code.n());
            for k in x.ones_iter() {
                e.flip(qubits[k]);
            }
            let s = code.syndrome(&e, sector).ok()?;
            let col = (pi + cl * pj) as usize;
            for site in s.ones_iter() {
                if cell_of(site) == adj {
                    let (i, j) = lat.coords(site);
                    matrix.set(((i % cl) + cl * (j % cm)) as usize, col, true);
                }
            }
            reps.push(e);
        }
    }
    Some(TransferMatrix { direction, cell, matrix, reps })
}

/// Short string built by chaining transfer steps, when `pattern` is
/// reproduced after `step / cell` applications of the transfer matrix.
pub fn transfer_string(code: &CssCode, tm: &TransferMatrix, pattern: &BitVector, step: u32) -> Option<BitVector> {
    let cell_len = match tm.direction {
        Direction::Horizontal => tm.cell.0,
        Direction::Vertical => tm.cell.1,
    };
    if step % cell_len != 0 {
        return None;
    }
    let k = (step / cell_len) as usize;
    let v = tm.local_vector(code.lattice(), pattern)?;
    if tm.power_apply(&v, k) != v {
        return None;
    }
    let (ux, uy) = tm.direction.unit();
    let mut e = BitVector::zeros(code.n());
    let mut w = v;
    for t in 0..k {
        let piece = tm.lift(&w, code.n());
        let off = -(t as i64) * cell_len as i64;
        e ^= &code.translate_error(&piece, ux * off, uy * off);
        w = tm.matrix.mul_vec(&w).ok()?;
    }
    Some(code.translate_error(&e, ux * step as i64, uy * step as i64))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CokerBasisData {
    pub code_name: String,
    pub sector: Sector,
    pub lattice: Lattice,
    pub r: usize,
    pub basis: Vec<BasisElement>,
    /// Rows span ker(Hᵀ).
    pub n_matrix: BitMatrix,
    /// Columns are the basis patterns.
    pub b_matrix: BitMatrix,
    nb_inverse: BitMatrix,
    /// `u_c` for every check, bit `i` set when basis element `i` appears.
    pub dictionary: Vec<u64>,
    pub rewrite_ops: Vec<BitVector>,
    /// Two entries per basis element: horizontal then vertical.
    pub short_strings: Vec<ShortString>,
    /// Least common multiple of the scales.
    pub period: u32,
    /// Coarse-graining parameter used for shift sets.
    pub coarse: u32,
    pub cache_key: String,
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    pub patterns: Option<Vec<BitVector>>,
    pub coarse: Option<u32>,
}

impl CokerBasisData {
    pub fn for_entry(entry: &CodeEntry, code: &CssCode) -> Result<Self> {
        let opts = BuildOptions { patterns: entry.basis_patterns(), coarse: Some(entry.coarse) };
        Self::build(code, Sector::X, &opts)
    }

    pub fn build(code: &CssCode, sector: Sector, opts: &BuildOptions) -> Result<Self> {
        let r = coker_dimension(code, sector);
        if r > 64 {
            return Err(Error::Unsupported(format!("cokernel dimension {r} exceeds 64")));
        }
        let patterns = match &opts.patterns {
            Some(p) => p.clone(),
            None => auto_select_basis(code, sector)?,
        };
        if patterns.len() != r {
            return Err(Error::InvalidBasis(format!("expected {r} patterns, got {}", patterns.len())));
        }
        if !verify_basis(code, sector, &patterns) {
            return Err(Error::InvalidBasis("patterns do not form a cokernel basis".into()));
        }
        let lat = code.lattice();
        let mut basis = Vec::with_capacity(r);
        for p in &patterns {
            let scale = translation_scale(code, sector, p)?;
            if lat.l % scale != 0 || lat.m % scale != 0 {
                return Err(Error::InvalidBasis(format!("scale {scale} does not tile the {}x{} lattice", lat.l, lat.m)));
            }
            basis.push(BasisElement { pattern: p.clone(), scale });
        }
        let min_scale = basis.iter().map(|b| b.scale).min().unwrap_or(1);
        if basis.iter().any(|b| b.scale % min_scale != 0) {
            return Err(Error::InvalidBasis("no scale divides all others".into()));
        }
        let period = basis.iter().fold(1, |acc, b| lcm(acc, b.scale));
        let coarse = opts.coarse.unwrap_or(period);

        let n_matrix = code.elimination(sector).left_nullspace();
        let b_matrix = BitMatrix::from_columns(&patterns, code.num_checks())?;
        let nb = n_matrix.mul(&b_matrix)?;
        let nb_inverse = invert(&nb).ok_or_else(|| Error::Invariant("NB is singular".into()))?;

        let mut data = CokerBasisData {
            code_name: code.name().to_string(),
            sector,
            lattice: lat,
            r,
            basis,
            n_matrix,
            b_matrix,
            nb_inverse,
            dictionary: Vec::new(),
            rewrite_ops: Vec::new(),
            short_strings: Vec::new(),
            period,
            coarse,
            cache_key: cache_key(code, sector, &patterns, coarse),
        };
        data.dictionary = build_decomposition_dictionary(&data);
        data.rewrite_ops = build_rewrite_operators(code, &data)?;
        data.short_strings = find_short_strings(code, &data)?;
        Ok(data)
    }

    /// Load from `cache_dir` when a matching file exists, else build and save.
    pub fn load_or_build(entry: &CodeEntry, code: &CssCode, cache_dir: Option<&Path>, rebuild: bool) -> Result<Self> {
        let patterns = entry.basis_patterns();
        let key_patterns = match &patterns {
            Some(p) => p.clone(),
            None => auto_select_basis(code, Sector::X)?,
        };
        let key = cache_key(code, Sector::X, &key_patterns, entry.coarse);
        let path = cache_dir.map(|d| d.join(format!("{}-{}.json", entry.name, &key[..16])));
        if let (Some(p), false) = (&path, rebuild) {
            if p.exists() {
                if let Ok(data) = Self::load(p) {
                    if data.cache_key == key {
                        return Ok(data);
                    }
                }
            }
        }
        let opts = BuildOptions { patterns: Some(key_patterns), coarse: Some(entry.coarse) };
        let data = Self::build(code, Sector::X, &opts)?;
        if let Some(p) = &path {
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            data.save(p)?;
        }
        Ok(data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let blob = CacheFile { format: CACHE_FORMAT, data: self.clone() };
        std::fs::write(path, serde_json::to_vec(&blob)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let blob: CacheFile = serde_json::from_slice(&std::fs::read(path)?)?;
        if blob.format != CACHE_FORMAT {
            return Err(Error::Parse(format!("cache format {} is not {}", blob.format, CACHE_FORMAT)));
        }
        Ok(blob.data)
    }

    pub fn num_checks(&self) -> usize {
        self.lattice.size()
    }

    /// Unique `u_s` with `NB u_s = N s`, as a bit mask.
    pub fn decompose(&self, s: &BitVector) -> u64 {
        s.ones_iter().fold(0, |acc, c| acc ^ self.dictionary[c])
    }

    pub fn decompose_check(&self, s: &BitVector) -> Result<BitVector> {
        if s.len() != self.num_checks() {
            return Err(Error::DimensionMismatch { expected: self.num_checks(), got: s.len() });
        }
        let ns = self.n_matrix.mul_vec(s)?;
        let u = self.nb_inverse.mul_vec(&ns)?;
        Ok(u)
    }

    /// Lower-left corner of the `scale`-cell containing check `c`.
    pub fn corner(&self, c: usize, scale: u32) -> (u32, u32) {
        let (i, j) = self.lattice.coords(c);
        ((i / scale) * scale, (j / scale) * scale)
    }

    /// Cell coordinates of check `c` at the scale of basis element `i`.
    pub fn cell_of(&self, c: usize, basis_index: usize) -> (i64, i64) {
        let s = self.basis[basis_index].scale;
        let (i, j) = self.lattice.coords(c);
        ((i / s) as i64, (j / s) as i64)
    }

    /// Basis pattern `i` translated to the corner of `c`'s cell.
    pub fn placed_pattern(&self, basis_index: usize, c: usize) -> BitVector {
        let s = self.basis[basis_index].scale;
        let (ci, cj) = self.corner(c, s);
        self.lattice.translate_vector(&self.basis[basis_index].pattern, ci as i64, cj as i64)
    }

    /// Right-hand side `c + Σ (u_c)_i C(c) s_i` of the rewrite equation.
    pub fn rewrite_target(&self, c: usize) -> BitVector {
        let mut t = BitVector::zeros(self.num_checks());
        t.flip(c);
        let u = self.dictionary[c];
        for i in 0..self.r {
            if (u >> i) & 1 == 1 {
                t ^= &self.placed_pattern(i, c);
            }
        }
        t
    }

    pub fn short_string(&self, basis_index: usize, direction: Direction) -> &ShortString {
        let k = match direction {
            Direction::Horizontal => 0,
            Direction::Vertical => 1,
        };
        &self.short_strings[2 * basis_index + k]
    }

    pub fn cells_per_side(&self, basis_index: usize) -> (i64, i64) {
        let s = self.basis[basis_index].scale;
        ((self.lattice.l / s) as i64, (self.lattice.m / s) as i64)
    }

    /// Chain of short strings moving basis pattern `i` from `cell_from` to
    /// `cell_to` along `winding` cell steps (horizontal first).
    pub fn short_string_chain(
        &self,
        basis_index: usize,
        cell_from: (i64, i64),
        cell_to: (i64, i64),
        winding: (i64, i64),
    ) -> Result<BitVector> {
        let (nx, ny) = self.cells_per_side(basis_index);
        let (dx, dy) = winding;
        if (cell_from.0 + dx - cell_to.0).rem_euclid(nx) != 0 || (cell_from.1 + dy - cell_to.1).rem_euclid(ny) != 0 {
            return Err(Error::InconsistentWinding { dx, dy });
        }
        let s = self.basis[basis_index].scale as i64;
        let n_qubits = 2 * self.lattice.size();
        let mut e = BitVector::zeros(n_qubits);
        let h = &self.short_string(basis_index, Direction::Horizontal).error;
        let v = &self.short_string(basis_index, Direction::Vertical).error;
        let (cx, cy) = cell_from;
        for k in 0..dx.abs() {
            let x = if dx > 0 { cx + k } else { cx - k - 1 };
            e ^= &translate_error(self.lattice, h, x * s, cy * s);
        }
        let x_end = cx + dx;
        for k in 0..dy.abs() {
            let y = if dy > 0 { cy + k } else { cy - k - 1 };
            e ^= &translate_error(self.lattice, v, x_end * s, y * s);
        }
        Ok(e)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: u32,
    data: CokerBasisData,
}

pub(crate) fn translate_error(lat: Lattice, e: &BitVector, dx: i64, dy: i64) -> BitVector {
    let half = lat.size();
    let mut out = BitVector::zeros(e.len());
    for q in e.ones_iter() {
        out.flip((q / half) * half + lat.translate(q % half, dx, dy));
    }
    out
}

fn invert(m: &BitMatrix) -> Option<BitMatrix> {
    let n = m.rows();
    let elim = Elimination::new(m);
    if elim.rank() != n || m.cols() != n {
        return None;
    }
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = BitVector::zeros(n);
        e.flip(i);
        cols.push(elim.solve(&e).ok()??);
    }
    BitMatrix::from_columns(&cols, n).ok()
}

pub fn cache_key(code: &CssCode, sector: Sector, patterns: &[BitVector], coarse: u32) -> String {
    let (a, b) = code.polynomials();
    let lat = code.lattice();
    let mut h = Sha256::new();
    h.update(format!("v{CACHE_FORMAT};{};{}x{};{};{};{:?};{coarse}", code.name(), lat.l, lat.m, a, b, sector));
    for p in patterns {
        h.update(format!(";{:?}", p.support()));
    }
    hex::encode(h.finalize())
}

/// `u_c` for every single-check syndrome.
pub fn build_decomposition_dictionary(data: &CokerBasisData) -> Vec<u64> {
    let n = data.num_checks();
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let mut col = BitVector::zeros(data.r);
        for k in 0..data.r {
            if data.n_matrix.get(k, c) {
                col.flip(k);
            }
        }
        let u = data.nb_inverse.mul_vec(&col).expect("square inverse");
        out.push(u.ones_iter().fold(0u64, |acc, i| acc | (1 << i)));
    }
    out
}

/// Low-weight `e_c` with `H e_c` equal to the rewrite target of `c`.
pub fn find_rewrite_operator(code: &CssCode, data: &CokerBasisData, c: usize) -> Result<BitVector> {
    let target = data.rewrite_target(c);
    let e = local_solve(code, data.sector, &target, 8, 200_000).ok_or(Error::NonzeroSyndrome)?;
    debug_assert_eq!(code.syndrome(&e, data.sector)?, target);
    Ok(e)
}

fn build_rewrite_operators(code: &CssCode, data: &CokerBasisData) -> Result<Vec<BitVector>> {
    let lat = data.lattice;
    let p = data.period;
    let mut fundamental = vec![None; lat.size()];
    for j in 0..p.min(lat.m) {
        for i in 0..p.min(lat.l) {
            let c = lat.index(i, j);
            fundamental[c] = Some(find_rewrite_operator(code, data, c)?);
        }
    }
    let mut out = Vec::with_capacity(lat.size());
    for c in 0..lat.size() {
        let (i, j) = lat.coords(c);
        let base = lat.index(i % p, j % p);
        let e = fundamental[base].as_ref().expect("fundamental region filled");
        let moved = code.translate_error(e, (i - i % p) as i64, (j - j % p) as i64);
        out.push(moved);
    }
    Ok(out)
}

/// Horizontal and vertical short strings for every basis element.
pub fn find_short_strings(code: &CssCode, data: &CokerBasisData) -> Result<Vec<ShortString>> {
    let sector = data.sector;
    let cell = transfer_cell(code, sector);
    let tms = [
        transfer_matrix(code, sector, Direction::Horizontal, cell),
        transfer_matrix(code, sector, Direction::Vertical, cell),
    ];
    let lat = data.lattice;
    let mut out = Vec::with_capacity(2 * data.r);
    for (i, b) in data.basis.iter().enumerate() {
        for (k, dir) in [Direction::Horizontal, Direction::Vertical].into_iter().enumerate() {
            let (ux, uy) = dir.unit();
            let step = b.scale as i64;
            let target = lat.translate_vector(&b.pattern, ux * step, uy * step).xor(&b.pattern)?;
            let mut best: Option<(BitVector, StringSource)> = None;
            if let Some(tm) = &tms[k] {
                if let Some(e) = transfer_string(code, tm, &b.pattern, b.scale) {
                    if code.syndrome(&e, sector)? == target {
                        best = Some((e, StringSource::Transfer));
                    }
                }
            }
            let cap = best.as_ref().map_or(10, |(e, _)| e.weight().saturating_sub(1));
            if let Some(e) = min_weight_search(code.tanner(sector), &target, cap, 3_000_000, None) {
                best = Some((e, StringSource::Search));
            }
            if best.is_none() {
                best = windowed_solve(code, sector, &target, 2).map(|e| (e, StringSource::Window));
            }
            let (error, source) = best.ok_or_else(|| Error::Invariant(format!("no short string for basis {i}")))?;
            if code.syndrome(&error, sector)? != target {
                return Err(Error::Invariant(format!("short string for basis {i} has the wrong syndrome")));
            }
            out.push(ShortString { basis_index: i, direction: dir, step: b.scale, error, source });
        }
    }
    Ok(out)
}

/// Greedy cokernel basis: small patterns near the origin and transfer-matrix
/// fixed vectors, sorted by (scale, weight, support) and kept while their
/// classes stay independent.
pub fn auto_select_basis(code: &CssCode, sector: Sector) -> Result<Vec<BitVector>> {
    let r = coker_dimension(code, sector);
    let lat = code.lattice();
    let n = code.elimination(sector).left_nullspace();
    let mut candidates: Vec<BitVector> = Vec::new();
    let w = 3u32.min(lat.l).min(lat.m);
    let sites: Vec<usize> = (0..w).flat_map(|j| (0..w).map(move |i| (i, j))).map(|(i, j)| lat.index(i, j)).collect();
    for a in 0..sites.len() {
        candidates.push(BitVector::from_indices(lat.size(), &[sites[a]])?);
        for b in a + 1..sites.len() {
            candidates.push(BitVector::from_indices(lat.size(), &[sites[a], sites[b]])?);
            for c in b + 1..sites.len() {
                candidates.push(BitVector::from_indices(lat.size(), &[sites[a], sites[b], sites[c]])?);
            }
        }
    }
    let cell = transfer_cell(code, sector);
    for dir in [Direction::Horizontal, Direction::Vertical] {
        if let Some(tm) = transfer_matrix(code, sector, dir, cell) {
            for v in tm.fixed_space() {
                let mut p = BitVector::zeros(lat.size());
                for u in v.ones_iter() {
                    let (i, j) = (u as u32 % cell.0, u as u32 / cell.0);
                    p.flip(lat.index(i, j));
                }
                candidates.push(p);
            }
        }
    }
    let mut scored: Vec<(u32, usize, Vec<usize>, BitVector)> = Vec::new();
    for p in candidates {
        let Ok(scale) = translation_scale(code, sector, &p) else { continue };
        if lat.l % scale != 0 || lat.m % scale != 0 {
            continue;
        }
        scored.push((scale, p.weight(), p.support(), p));
    }
    scored.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    let mut classes = IncrementalBasis::new();
    let mut out = Vec::new();
    for (_, _, _, p) in scored {
        if out.len() == r {
            break;
        }
        if classes.insert(&n.mul_vec(&p)?) {
            out.push(p);
        }
    }
    if out.len() < r {
        return Err(Error::InvalidBasis(format!("auto-selection found {} of {r} basis elements", out.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn load(name: &str) -> (CssCode, CokerBasisData) {
        let cat = Catalog::builtin();
        let entry = cat.get(name).unwrap();
        let code = entry.build().unwrap();
        let data = CokerBasisData::for_entry(entry, &code).unwrap();
        (code, data)
    }

    #[test]
    fn toric_coker_is_one_dimensional() {
        let code = Catalog::builtin().get("toric-5").unwrap().build().unwrap();
        assert_eq!(coker_dimension(&code, Sector::X), 1);
        assert_eq!(code.rank(Sector::X), 24);
    }

    #[test]
    fn toric_dictionary_is_all_ones() {
        let (_, data) = load("toric-3");
        assert!(data.dictionary.iter().all(|&u| u == 1));
    }

    #[test]
    fn gross_basis_verification() {
        let cat = Catalog::builtin();
        let entry = cat.get("gross").unwrap();
        let code = entry.build().unwrap();
        let pats = entry.basis_patterns().unwrap();
        assert!(verify_basis(&code, Sector::X, &pats));
        assert!(!verify_basis(&code, Sector::X, &pats[..5]));
        let mut with_trivial = pats[..5].to_vec();
        with_trivial.push(code.hx().column(0));
        assert!(!verify_basis(&code, Sector::X, &with_trivial));
    }

    #[test]
    fn trivial_class_has_no_scale() {
        let code = Catalog::builtin().get("gross").unwrap().build().unwrap();
        assert!(matches!(translation_scale(&code, Sector::X, &code.hx().column(3)), Err(Error::TrivialClass)));
    }

    #[test]
    fn decomposition_of_basis_and_image() {
        let (code, data) = load("gross");
        assert_eq!(data.decompose(&BitVector::zeros(72)), 0);
        for (i, b) in data.basis.iter().enumerate() {
            assert_eq!(data.decompose(&b.pattern), 1 << i);
            let u = data.decompose_check(&b.pattern).unwrap();
            assert_eq!(u.support(), vec![i]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let e = BitVector::from_bools(&(0..code.n()).map(|_| rng.gen_bool(0.2)).collect::<Vec<_>>());
            let s = code.syndrome(&e, Sector::X).unwrap();
            assert_eq!(data.decompose(&s), 0);
            assert!(data.decompose_check(&s).unwrap().is_zero());
        }
    }

    #[test]
    fn dictionary_agrees_with_linear_solve() {
        let (code, data) = load("gross");
        let elim = code.elimination(Sector::X);
        for c in 0..72 {
            let mut s = BitVector::zeros(72);
            s.flip(c);
            let u = data.dictionary[c];
            for i in 0..data.r {
                if (u >> i) & 1 == 1 {
                    s ^= &data.basis[i].pattern;
                }
            }
            assert!(elim.in_image(&s).unwrap());
        }
    }

    #[test]
    fn dictionary_is_covariant_at_coarse_scale() {
        let (_, data) = load("gross");
        let lat = data.lattice;
        for c in 0..lat.size() {
            assert_eq!(data.dictionary[lat.translate(c, 12, 0)], data.dictionary[c]);
            assert_eq!(data.dictionary[lat.translate(c, 6, 6)], data.dictionary[c]);
        }
    }

    #[test]
    fn all_checks_sum_parity() {
        let (code, data) = load("gross");
        let all = BitVector::ones(72);
        let u = data.dictionary.iter().fold(0u64, |a, &b| a ^ b);
        let physical = code.elimination(Sector::X).in_image(&all).unwrap();
        assert_eq!(u == 0, physical);
    }

    #[test]
    fn rewrite_operators_satisfy_equation() {
        let (code, data) = load("gross");
        for c in 0..72 {
            assert_eq!(code.syndrome(&data.rewrite_ops[c], Sector::X).unwrap(), data.rewrite_target(c), "check {c}");
        }
    }

    #[test]
    fn toric_transfer_matrix_is_identity() {
        let code = Catalog::builtin().get("toric-5").unwrap().build().unwrap();
        assert_eq!(transfer_cell(&code, Sector::X), (1, 1));
        for dir in [Direction::Horizontal, Direction::Vertical] {
            let tm = transfer_matrix(&code, Sector::X, dir, (1, 1)).unwrap();
            assert_eq!(tm.matrix, BitMatrix::identity(1));
        }
    }

    #[test]
    fn toric_short_strings_are_single_qubits() {
        let (code, data) = load("toric-5");
        for s in &data.short_strings {
            assert_eq!(s.step, 1);
            assert_eq!(s.error.weight(), 1);
            let pat = &data.basis[0].pattern;
            let (ux, uy) = s.direction.unit();
            let expected = code.lattice().translate_vector(pat, ux, uy).xor(pat).unwrap();
            assert_eq!(code.syndrome(&s.error, Sector::X).unwrap(), expected);
        }
    }

    #[test]
    fn chain_endpoints_and_composition() {
        let (code, data) = load("gross");
        for i in 0..data.r {
            assert!(data.short_string_chain(i, (0, 0), (0, 0), (0, 0)).unwrap().is_zero());
            let one = data.short_string_chain(i, (0, 0), (1, 0), (1, 0)).unwrap();
            assert_eq!(one, data.short_string(i, Direction::Horizontal).error);
            let a = data.short_string_chain(i, (0, 0), (1, 1), (1, 1)).unwrap();
            let b = data.short_string_chain(i, (1, 1), (0, 1), (-1, 0)).unwrap();
            let ab = data.short_string_chain(i, (0, 0), (0, 1), (0, 1)).unwrap();
            let s = code.syndrome(&a.xor(&b).unwrap(), Sector::X).unwrap();
            assert_eq!(s, code.syndrome(&ab, Sector::X).unwrap());
            assert!(matches!(
                data.short_string_chain(i, (0, 0), (1, 0), (0, 0)),
                Err(Error::InconsistentWinding { .. })
            ));
        }
    }

    #[test]
    fn auto_basis_for_color_code() {
        let code = Catalog::builtin().get("color-8").unwrap().build().unwrap();
        let basis = auto_select_basis(&code, Sector::X).unwrap();
        assert_eq!(basis.len(), coker_dimension(&code, Sector::X));
        assert!(verify_basis(&code, Sector::X, &basis));
    }
}
