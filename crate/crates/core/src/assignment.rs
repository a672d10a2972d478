//! Rectangular linear assignment.
//!
//! [`solve_assignment`] runs Kuhn-Munkres (shortest augmenting path with dual
//! potentials) on the cost matrix padded to a square, then walks the
//! zero-reduced-cost subgraph to pick the lexicographically smallest optimal
//! pair list. [`brute_force_assignment`] enumerates every injective pairing
//! and exists to check the solver.

use crate::error::{Error, Result};

/// Dense `rows x cols` cost matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Precondition("cost matrix needs at least one row".into()));
        }
        if rows.checked_mul(cols) != Some(cells.len()) {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{cols} = {} cells", rows.saturating_mul(cols)),
                actual: format!("{} cells", cells.len()),
            });
        }
        if let Some(i) = cells.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("cost[{}][{}]", i / cols, i % cols)));
        }
        Ok(CostMatrix { rows, cols, cells })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != cols) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of length {cols}"),
                actual: format!("row {bad} of length {}", rows[bad].as_ref().len()),
            });
        }
        Self::new(
            rows.len(),
            cols,
            rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.cols + c]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Elementwise negation; turns a similarity matrix into a cost matrix.
    pub fn negated(&self) -> Self {
        CostMatrix {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(|c| -c).collect(),
        }
    }

    fn total(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().fold(0.0, |acc, &(r, c)| acc + self.get(r, c))
    }
}

/// A set of `(row, col)` pairs, sorted by row, with no row or column repeated.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the matched cells, accumulated in row order.
    pub total_cost: f64,
}

impl Assignment {
    fn from_pairs(cost: &CostMatrix, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let total_cost = cost.total(&pairs);
        Assignment { pairs, total_cost }
    }

    pub fn col_for_row(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }

    pub fn row_for_col(&self, col: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == col).map(|p| p.0)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Minimum-cost assignment of size `min(rows, cols)`.
///
/// Among equal-cost optima the pair list that is lexicographically smallest
/// in `(row, col)` order is returned.
pub fn solve_assignment(cost: &CostMatrix) -> Result<Assignment> {
    if let Some(i) = cost.cells.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!(
            "cost[{}][{}]",
            i / cost.cols.max(1),
            i % cost.cols.max(1)
        )));
    }
    if cost.rows == 0 || cost.cols == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        });
    }

    let square = PaddedSquare::new(cost);
    let solution = square.hungarian();
    let lex = square.lexicographic(&solution);

    let strip = |row_to_col: &[usize]| -> Vec<(usize, usize)> {
        row_to_col
            .iter()
            .enumerate()
            .filter(|&(r, &c)| r < cost.rows && c < cost.cols)
            .map(|(r, &c)| (r, c))
            .collect()
    };

    let best = Assignment::from_pairs(cost, strip(&solution.row_to_col));
    let chosen = Assignment::from_pairs(cost, strip(&lex));
    // The tight-edge walk only ever reroutes along zero reduced cost, so this
    // only trips if rounding let a slightly worse edge look tight.
    if chosen.total_cost > best.total_cost + square.tolerance {
        return Ok(best);
    }
    Ok(chosen)
}

struct PaddedSquare<'a> {
    cost: &'a CostMatrix,
    n: usize,
    pad: f64,
    tolerance: f64,
}

struct Solution {
    row_to_col: Vec<usize>,
    /// Row potentials, indexed `1..=n`.
    u: Vec<f64>,
    /// Column potentials, indexed `1..=n`.
    v: Vec<f64>,
}

impl<'a> PaddedSquare<'a> {
    fn new(cost: &'a CostMatrix) -> Self {
        let max = cost.cells.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = cost.cells.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        // Any constant works since every square assignment uses the same number
        // of padded cells; keep it strictly above the real entries.
        let mut pad = max + 1.0;
        if pad <= max {
            pad = max.next_up();
        }
        if !pad.is_finite() {
            pad = max;
        }
        let n = cost.rows.max(cost.cols);
        PaddedSquare {
            cost,
            n,
            pad,
            tolerance: 1e-11 * scale * n as f64,
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        if r < self.cost.rows && c < self.cost.cols {
            self.cost.get(r, c)
        } else {
            self.pad
        }
    }

    fn hungarian(&self) -> Solution {
        let n = self.n;
        let mut u = vec![0.0; n + 1];
        let mut v = vec![0.0; n + 1];
        // col_owner[j] = row (1-based) matched to column j; slot 0 is the root.
        let mut col_owner = vec![0usize; n + 1];
        let mut way = vec![0usize; n + 1];

        for i in 1..=n {
            col_owner[0] = i;
            let mut j0 = 0;
            let mut minv = vec![f64::INFINITY; n + 1];
            let mut used = vec![false; n + 1];
            loop {
                used[j0] = true;
                let i0 = col_owner[j0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0;
                for j in 1..=n {
                    if used[j] {
                        continue;
                    }
                    let cur = self.at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        u[col_owner[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if col_owner[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                col_owner[j0] = col_owner[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }

        let mut row_to_col = vec![0; n];
        for j in 1..=n {
            row_to_col[col_owner[j] - 1] = j - 1;
        }
        Solution { row_to_col, u, v }
    }

    /// Every optimal assignment uses only edges whose reduced cost is zero
    /// under an optimal dual, and every perfect matching on those edges is
    /// optimal. Fix rows in order, each to the smallest column that still
    /// admits a perfect matching on the tight subgraph.
    fn lexicographic(&self, solution: &Solution) -> Vec<usize> {
        let n = self.n;
        let mut tight = vec![false; n * n];
        for r in 0..n {
            for c in 0..n {
                let reduced = self.at(r, c) - solution.u[r + 1] - solution.v[c + 1];
                tight[r * n + c] = reduced <= self.tolerance;
            }
        }
        let mut row_to_col = solution.row_to_col.clone();
        for (r, &c) in row_to_col.iter().enumerate() {
            tight[r * n + c] = true;
        }
        let mut col_to_row = vec![0; n];
        for (r, &c) in row_to_col.iter().enumerate() {
            col_to_row[c] = r;
        }

        let mut row_locked = vec![false; n];
        let mut col_locked = vec![false; n];
        for r in 0..self.cost.rows {
            for c in 0..n {
                if col_locked[c] || !tight[r * n + c] {
                    continue;
                }
                if row_to_col[r] == c {
                    break;
                }
                // r takes c; c's owner must reach r's old column through an
                // alternating path over unlocked tight edges.
                let displaced = col_to_row[c];
                let freed = row_to_col[r];
                row_locked[r] = true;
                col_locked[c] = true;
                let path = augmenting_path(
                    n,
                    &tight,
                    &row_to_col,
                    &col_to_row,
                    &row_locked,
                    &col_locked,
                    displaced,
                    freed,
                );
                row_locked[r] = false;
                col_locked[c] = false;
                if let Some(path) = path {
                    for (pr, pc) in path {
                        row_to_col[pr] = pc;
                        col_to_row[pc] = pr;
                    }
                    row_to_col[r] = c;
                    col_to_row[c] = r;
                    break;
                }
            }
            row_locked[r] = true;
            col_locked[row_to_col[r]] = true;
        }
        row_to_col
    }
}

/// Breadth-first search for an alternating path that starts at row `start`
/// (currently without a column) and ends at the free column `target`. Returns
/// the new `(row, col)` edges along the path.
#[allow(clippy::too_many_arguments)]
fn augmenting_path(
    n: usize,
    tight: &[bool],
    row_to_col: &[usize],
    col_to_row: &[usize],
    row_locked: &[bool],
    col_locked: &[bool],
    start: usize,
    target: usize,
) -> Option<Vec<(usize, usize)>> {
    // parent_row[c] = row from which column c was reached.
    let mut parent_row = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::from([start]);
    let mut row_seen = vec![false; n];
    row_seen[start] = true;
    while let Some(row) = queue.pop_front() {
        for c in 0..n {
            if col_locked[c] || parent_row[c] != usize::MAX || !tight[row * n + c] {
                continue;
            }
            parent_row[c] = row;
            if c == target {
                let mut edges = Vec::new();
                let mut col = c;
                loop {
                    let r = parent_row[col];
                    edges.push((r, col));
                    if r == start {
                        return Some(edges);
                    }
                    col = row_to_col[r];
                }
            }
            let next = col_to_row[c];
            if !row_locked[next] && !row_seen[next] {
                row_seen[next] = true;
                queue.push_back(next);
            }
        }
    }
    None
}

/// Largest `min(rows, cols)` accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Globally optimal assignment by exhaustive enumeration of injective
/// pairings, visited in lexicographic order so ties resolve the same way as
/// [`solve_assignment`].
pub fn brute_force_assignment(cost: &CostMatrix) -> Result<Assignment> {
    let k = cost.rows.min(cost.cols);
    if k > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(k));
    }
    if let Some(i) = cost.cells.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("cost cell {i}")));
    }
    let mut search = Enumeration {
        cost,
        col_used: vec![false; cost.cols],
        current: Vec::with_capacity(k),
        best: None,
    };
    search.visit(0, 0.0, k);
    let (pairs, _) = search.best.expect("at least one pairing exists");
    Ok(Assignment::from_pairs(cost, pairs))
}

struct Enumeration<'a> {
    cost: &'a CostMatrix,
    col_used: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Option<(Vec<(usize, usize)>, f64)>,
}

impl Enumeration<'_> {
    fn visit(&mut self, row: usize, partial: f64, need: usize) {
        if self.current.len() == need {
            if self.best.as_ref().is_none_or(|(_, b)| partial < *b) {
                self.best = Some((self.current.clone(), partial));
            }
            return;
        }
        if row == self.cost.rows {
            return;
        }
        for c in 0..self.cost.cols {
            if self.col_used[c] {
                continue;
            }
            self.col_used[c] = true;
            self.current.push((row, c));
            self.visit(row + 1, partial + self.cost.get(row, c), need);
            self.current.pop();
            self.col_used[c] = false;
        }
        // Leaving this row unmatched is lexicographically later than any match.
        let remaining_rows = self.cost.rows - row - 1;
        if remaining_rows >= need - self.current.len() {
            self.visit(row + 1, partial, need);
        }
    }
}
