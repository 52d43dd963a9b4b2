//! Low-weight solutions of `H e = t` for syndromes with small support.

use std::collections::BTreeSet;

use crate::code::{CssCode, Sector, Tanner};
use crate::gf2::{reduce_weight, BitMatrix, BitVector, Elimination};

/// Exact minimum-weight search by iterative deepening.
///
/// Branches on the qubits touching the lowest-index unresolved check, which is
/// complete: any solution must flip one of them. Returns `None` if nothing of
/// weight `<= max_weight` is found within `node_budget` expansions.
pub fn min_weight_search(
    tanner: &Tanner,
    target: &BitVector,
    max_weight: usize,
    node_budget: u64,
    allowed: Option<&BitVector>,
) -> Option<BitVector> {
    let n_qubits = tanner.qubit_checks.len();
    if target.is_zero() {
        return Some(BitVector::zeros(n_qubits));
    }
    let max_col = tanner.qubit_checks.iter().map(Vec::len).max().unwrap_or(1).max(1);
    let mut search = Search {
        tanner,
        allowed,
        residual: target.clone(),
        residual_weight: target.weight(),
        chosen: Vec::new(),
        in_chosen: vec![false; n_qubits],
        nodes: 0,
        budget: node_budget,
        max_col,
    };
    for depth in 1..=max_weight {
        if search.residual_weight.div_ceil(max_col) > depth {
            continue;
        }
        match search.dfs(depth) {
            Outcome::Found => {
                let mut e = BitVector::zeros(n_qubits);
                for &q in &search.chosen {
                    e.flip(q);
                }
                return Some(e);
            }
            Outcome::Exhausted => return None,
            Outcome::NotFound => {}
        }
    }
    None
}

enum Outcome {
    Found,
    NotFound,
    Exhausted,
}

struct Search<'a> {
    tanner: &'a Tanner,
    allowed: Option<&'a BitVector>,
    residual: BitVector,
    residual_weight: usize,
    chosen: Vec<usize>,
    in_chosen: Vec<bool>,
    nodes: u64,
    budget: u64,
    max_col: usize,
}

impl Search<'_> {
    fn toggle(&mut self, q: usize) {
        for &c in &self.tanner.qubit_checks[q] {
            let c = c as usize;
            if self.residual.get(c) {
                self.residual_weight -= 1;
            } else {
                self.residual_weight += 1;
            }
            self.residual.flip(c);
        }
    }

    fn dfs(&mut self, depth_left: usize) -> Outcome {
        if self.residual_weight == 0 {
            return Outcome::Found;
        }
        if depth_left == 0 || self.residual_weight.div_ceil(self.max_col) > depth_left {
            return Outcome::NotFound;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Outcome::Exhausted;
        }
        let c = self.residual.ones_iter().next().expect("nonzero residual");
        let tanner = self.tanner;
        for &q in &tanner.check_qubits[c] {
            let q = q as usize;
            if self.in_chosen[q] || self.allowed.is_some_and(|a| !a.get(q)) {
                continue;
            }
            self.toggle(q);
            self.chosen.push(q);
            self.in_chosen[q] = true;
            let out = self.dfs(depth_left - 1);
            if matches!(out, Outcome::Found) {
                return out;
            }
            self.in_chosen[q] = false;
            self.chosen.pop();
            self.toggle(q);
            if matches!(out, Outcome::Exhausted) {
                return out;
            }
        }
        Outcome::NotFound
    }
}

/// Solve `H e = target` inside a box around the target support, then lower the
/// weight with the window nullspace and local stabilizers.
pub fn windowed_solve(code: &CssCode, sector: Sector, target: &BitVector, margin: u32) -> Option<BitVector> {
    let lat = code.lattice();
    if target.is_zero() {
        return Some(BitVector::zeros(code.n()));
    }
    let mut margin = margin as i64;
    loop {
        let window = window_checks(code, target, margin);
        let full = window.weight() == lat.size();
        if let Some(e) = solve_in_window(code, sector, target, &window) {
            return Some(e);
        }
        if full {
            return None;
        }
        margin *= 2;
        margin += 1;
    }
}

fn window_checks(code: &CssCode, target: &BitVector, margin: i64) -> BitVector {
    let lat = code.lattice();
    let support = target.support();
    let anchor = support[0];
    let (mut x0, mut x1, mut y0, mut y1) = (0i64, 0i64, 0i64, 0i64);
    for &c in &support {
        let (dx, dy) = lat.min_displacement(anchor, c);
        x0 = x0.min(dx);
        x1 = x1.max(dx);
        y0 = y0.min(dy);
        y1 = y1.max(dy);
    }
    let (l, m) = (lat.l as i64, lat.m as i64);
    let xs: Vec<i64> = if x1 - x0 + 2 * margin + 1 >= l { (0..l).collect() } else { (x0 - margin..=x1 + margin).collect() };
    let ys: Vec<i64> = if y1 - y0 + 2 * margin + 1 >= m { (0..m).collect() } else { (y0 - margin..=y1 + margin).collect() };
    let full_x = xs.len() as i64 == l;
    let full_y = ys.len() as i64 == m;
    let mut w = BitVector::zeros(lat.size());
    for &dx in &xs {
        for &dy in &ys {
            let site = if full_x && full_y {
                lat.index(dx as u32, dy as u32)
            } else if full_x {
                let (_, j) = lat.wrap(0, lat.coords(anchor).1 as i64 + dy);
                lat.index(dx as u32, j)
            } else if full_y {
                let (i, _) = lat.wrap(lat.coords(anchor).0 as i64 + dx, 0);
                lat.index(i, dy as u32)
            } else {
                lat.translate(anchor, dx, dy)
            };
            w.set(site, true);
        }
    }
    w
}

fn solve_in_window(code: &CssCode, sector: Sector, target: &BitVector, window: &BitVector) -> Option<BitVector> {
    let tanner = code.tanner(sector);
    let rows: Vec<usize> = window.support();
    let qubits: Vec<usize> = (0..code.n())
        .filter(|&q| tanner.qubit_checks[q].iter().all(|&c| window.get(c as usize)))
        .collect();
    if qubits.is_empty() {
        return None;
    }
    let mut row_pos = vec![usize::MAX; code.num_checks()];
    for (k, &r) in rows.iter().enumerate() {
        row_pos[r] = k;
    }
    let mut sub = BitMatrix::zeros(rows.len(), qubits.len());
    for (k, &q) in qubits.iter().enumerate() {
        for &c in &tanner.qubit_checks[q] {
            sub.set(row_pos[c as usize], k, true);
        }
    }
    let mut rhs = BitVector::zeros(rows.len());
    for c in target.ones_iter() {
        if row_pos[c] == usize::MAX {
            return None;
        }
        rhs.flip(row_pos[c]);
    }
    let elim = Elimination::new(&sub);
    let x = elim.solve(&rhs).ok()??;
    let kernel = elim.nullspace();
    let x = if kernel.len() <= 16 { reduce_weight(x, &kernel, 16) } else { greedy_descent(x, &kernel) };

    // Local stabilizers restricted to the window columns.
    let other = code.check_matrix(sector.opposite());
    let mut col_pos = vec![usize::MAX; code.n()];
    for (k, &q) in qubits.iter().enumerate() {
        col_pos[q] = k;
    }
    let mut stabs = Vec::new();
    for r in 0..other.rows() {
        let row = other.row(r);
        if row.ones_iter().all(|q| col_pos[q] != usize::MAX) {
            let mut v = BitVector::zeros(qubits.len());
            for q in row.ones_iter() {
                v.flip(col_pos[q]);
            }
            stabs.push(v);
        }
    }
    let mut x = greedy_descent(x, &stabs);
    x = greedy_descent(x, &kernel);

    let mut e = BitVector::zeros(code.n());
    for k in x.ones_iter() {
        e.flip(qubits[k]);
    }
    Some(e)
}

/// Repeated greedy passes until no single generator lowers the weight.
fn greedy_descent(mut x: BitVector, gens: &[BitVector]) -> BitVector {
    let mut w = x.weight();
    loop {
        let mut improved = false;
        for g in gens {
            let cand = x.xor(g).expect("equal lengths");
            let cw = cand.weight();
            if cw < w {
                x = cand;
                w = cw;
                improved = true;
            }
        }
        if !improved {
            return x;
        }
    }
}

/// Lowest-weight local solution: exact search first, window solve as fallback.
pub fn local_solve(code: &CssCode, sector: Sector, target: &BitVector, max_exact: usize, budget: u64) -> Option<BitVector> {
    let exact = min_weight_search(code.tanner(sector), target, max_exact, budget, None);
    if exact.is_some() {
        return exact;
    }
    windowed_solve(code, sector, target, 2)
}

/// Checks within Chebyshev distance `radius` of any check in `seeds`.
pub fn neighbourhood(code: &CssCode, seeds: &[usize], radius: i64) -> BTreeSet<usize> {
    let lat = code.lattice();
    let mut out = BTreeSet::new();
    for &s in seeds {
        for dx in -radius..=radius {
            for dy in -radius..=radius {
                out.insert(lat.translate(s, dx, dy));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    #[test]
    fn exact_search_finds_single_qubit() {
        let code = Catalog::builtin().get("gross").unwrap().build().unwrap();
        for q in [0usize, 17, 100] {
            let e = BitVector::from_indices(code.n(), &[q]).unwrap();
            let s = code.syndrome(&e, Sector::X).unwrap();
            let found = min_weight_search(code.tanner(Sector::X), &s, 4, 100_000, None).unwrap();
            assert_eq!(found.weight(), 1);
            assert_eq!(code.syndrome(&found, Sector::X).unwrap(), s);
        }
    }

    #[test]
    fn exact_search_matches_planted_weight_bound() {
        let code = Catalog::builtin().get("gross").unwrap().build().unwrap();
        let e = BitVector::from_indices(code.n(), &[3, 4, 80]).unwrap();
        let s = code.syndrome(&e, Sector::X).unwrap();
        let found = min_weight_search(code.tanner(Sector::X), &s, 6, 1_000_000, None).unwrap();
        assert!(found.weight() <= 3);
        assert_eq!(code.syndrome(&found, Sector::X).unwrap(), s);
    }

    #[test]
    fn windowed_solve_is_valid() {
        let code = Catalog::builtin().get("gross").unwrap().build().unwrap();
        let e = BitVector::from_indices(code.n(), &[5, 6, 7, 90, 91]).unwrap();
        let s = code.syndrome(&e, Sector::X).unwrap();
        let found = windowed_solve(&code, Sector::X, &s, 2).unwrap();
        assert_eq!(code.syndrome(&found, Sector::X).unwrap(), s);
    }

    #[test]
    fn nonphysical_target_has_no_solution() {
        let code = Catalog::builtin().get("toric-3").unwrap().build().unwrap();
        let s = BitVector::from_indices(code.num_checks(), &[0]).unwrap();
        assert!(min_weight_search(code.tanner(Sector::X), &s, 4, 10_000, None).is_none());
        assert!(windowed_solve(&code, Sector::X, &s, 1).is_none());
    }
}
