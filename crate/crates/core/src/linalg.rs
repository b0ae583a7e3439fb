//! Exact rational linear algebra, internal to the crate.
//!
//! Two representations: a sparse matrix for the complex maps (large, mostly
//! empty, multiplied once to certify a composite vanishes) and dense
//! row-vectors for the small elimination problems (jet kernels, solvability
//! probes). Everything is exact — no pivot thresholds, no conditioning: a
//! rank is the true rank over ℚ.

use std::collections::BTreeMap;

use crate::rational::Rational;

/// Sparse matrix over ℚ with explicit shape; absent entries are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl RatMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: &Rational) {
        if v.is_zero() {
            return;
        }
        let cur = self.entries.entry((r, c)).or_insert_with(Rational::zero);
        *cur += v;
        if cur.is_zero() {
            self.entries.remove(&(r, c));
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Rational)> {
        self.entries.iter()
    }

    /// Matrix product `self · other` (exact, sparse-aware).
    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in matrix product");
        // Bucket the right factor by row so each left entry touches only the
        // rows it can reach.
        let mut by_row: BTreeMap<usize, Vec<(usize, &Rational)>> = BTreeMap::new();
        for (&(r, c), v) in &other.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut out = RatMatrix::zero(self.rows, other.cols);
        for (&(r, k), a) in &self.entries {
            if let Some(row) = by_row.get(&k) {
                for &(c, b) in row {
                    out.add_to(r, c, &(a * b));
                }
            }
        }
        out
    }

    /// `self · x` for a dense column vector.
    pub fn mul_vec(&self, x: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, x.len(), "shape mismatch in matrix-vector product");
        let mut out = vec![Rational::zero(); self.rows];
        for (&(r, c), v) in &self.entries {
            out[r] += &(v * &x[c]);
        }
        out
    }
}

/// Reduces `rows` in place to row echelon form; returns the pivot columns.
fn echelonize(rows: &mut [Vec<Rational>]) -> Vec<usize> {
    let nrows = rows.len();
    let ncols = if nrows == 0 { 0 } else { rows[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..nrows).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = &Rational::one() / &rows[r][c];
        for j in c..ncols {
            let scaled = &rows[r][j] * &inv;
            rows[r][j] = scaled;
        }
        for i in 0..nrows {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in c..ncols {
                    let delta = &f * &rows[r][j];
                    rows[i][j] -= &delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    pivots
}

/// Rank over ℚ.
pub(crate) fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut work = rows.to_vec();
    echelonize(&mut work).len()
}

/// Basis of the right kernel {x : Ax = 0}, one vector per free column.
pub(crate) fn nullspace(rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let ncols = if rows.is_empty() { 0 } else { rows[0].len() };
    let mut work = rows.to_vec();
    let pivots = echelonize(&mut work);
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; ncols];
        for &c in &pivots {
            v[c] = true;
        }
        v
    };
    let mut basis = Vec::new();
    for free in 0..ncols {
        if is_pivot[free] {
            continue;
        }
        let mut x = vec![Rational::zero(); ncols];
        x[free] = Rational::one();
        for (row_idx, &pc) in pivots.iter().enumerate() {
            // Row is normalized: x[pc] = −(entry at free column).
            x[pc] = -&work[row_idx][free] * &Rational::one();
        }
        basis.push(x);
    }
    basis
}

/// One exact solution of Ax = b (free variables set to zero), or None when
/// the system is inconsistent.
pub(crate) fn solve(rows: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    assert_eq!(rows.len(), rhs.len(), "shape mismatch in solve");
    let ncols = if rows.is_empty() { 0 } else { rows[0].len() };
    let mut work: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let pivots = echelonize(&mut work);
    // A pivot in the augmented column means 0 = 1: inconsistent.
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rational::zero(); ncols];
    for (row_idx, &pc) in pivots.iter().enumerate() {
        x[pc] = work[row_idx][ncols].clone();
    }
    Some(x)
}
