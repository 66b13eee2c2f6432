//! Exact linear algebra over the integers.
//!
//! Everything in this crate reduces to lattice arithmetic in `Z^n`, and this
//! module is the only place where that arithmetic happens.  Entries are
//! arbitrary-precision [`BigInt`]s; intermediate values in normal-form
//! computations routinely overflow machine words even for small inputs, so
//! unbounded precision is a correctness requirement, not an optimisation
//! question.
//!
//! Conventions used throughout:
//!
//! * Matrices are dense, row-major.  A matrix with zero rows or zero columns
//!   is legal and behaves like the corresponding empty map.
//! * [`IntMatrix::hnf`] is the row-style Hermite normal form: `U * A = H`
//!   with `U` unimodular, pivots positive, entries above each pivot reduced
//!   into `[0, pivot)` and zero rows at the bottom.  Rows of `H` form a
//!   canonical basis for the row lattice of `A`.
//! * [`IntMatrix::snf`] is the Smith normal form: `U * A * V = D` with both
//!   transforms unimodular, the diagonal non-negative and each entry dividing
//!   the next.  Signs are absorbed into `V`.
//! * [`IntMatrix::solve_matrix`] decides integer solvability of `A X = B`
//!   exactly, via the Smith form; there is no search and no approximation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Index, IndexMut};

/// The scalar type every computation runs over.
pub type Int = BigInt;

/// Convenience constructor used pervasively in tests and callers.
pub fn int(v: i64) -> Int {
    Int::from(v)
}

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Int>,
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = Int;
    fn index(&self, (r, c): (usize, usize)) -> &Int {
        debug_assert!(r < self.rows && c < self.cols, "index out of range");
        &self.entries[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Int {
        debug_assert!(r < self.rows && c < self.cols, "index out of range");
        &mut self.entries[r * self.cols + c]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows == 0 {
            return write!(f, "[]");
        }
        let rows: Vec<String> = (0..self.rows)
            .map(|r| {
                let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_string()).collect();
                format!("[{}]", row.join(", "))
            })
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: vec![Int::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Int::one();
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Int>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must match shape");
        IntMatrix { rows, cols, entries }
    }

    pub fn from_rows_i64(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let entries = rows.iter().flat_map(|row| row.iter().map(|&v| int(v))).collect();
        IntMatrix { rows: r, cols: c, entries }
    }

    /// Single column matrix from a coordinate vector.
    pub fn from_col(v: &[Int]) -> Self {
        IntMatrix { rows: v.len(), cols: 1, entries: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    if r == c {
                        self[(r, c)].is_one()
                    } else {
                        self[(r, c)].is_zero()
                    }
                })
            })
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matrix product");
        let mut out = IntMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let add = a * &rhs[(k, c)];
                    out[(r, c)] += add;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sum");
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, entries }
    }

    pub fn sub(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in difference");
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, entries }
    }

    pub fn neg(&self) -> IntMatrix {
        let entries = self.entries.iter().map(|a| -a).collect();
        IntMatrix { rows: self.rows, cols: self.cols, entries }
    }

    pub fn scale(&self, k: &Int) -> IntMatrix {
        let entries = self.entries.iter().map(|a| a * k).collect();
        IntMatrix { rows: self.rows, cols: self.cols, entries }
    }

    pub fn col_vec(&self, c: usize) -> Vec<Int> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn row_vec(&self, r: usize) -> Vec<Int> {
        (0..self.cols).map(|c| self[(r, c)].clone()).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[Int]) {
        assert_eq!(v.len(), self.rows, "column length mismatch");
        for r in 0..self.rows {
            self[(r, c)] = v[r].clone();
        }
    }

    /// Columns `lo..hi` as a new matrix.
    pub fn col_range(&self, lo: usize, hi: usize) -> IntMatrix {
        assert!(lo <= hi && hi <= self.cols, "column range out of bounds");
        let mut out = IntMatrix::zeros(self.rows, hi - lo);
        for r in 0..self.rows {
            for c in lo..hi {
                out[(r, c - lo)] = self[(r, c)].clone();
            }
        }
        out
    }

    /// Rows `lo..hi` as a new matrix.
    pub fn row_range(&self, lo: usize, hi: usize) -> IntMatrix {
        assert!(lo <= hi && hi <= self.rows, "row range out of bounds");
        let mut out = IntMatrix::zeros(hi - lo, self.cols);
        for r in lo..hi {
            for c in 0..self.cols {
                out[(r - lo, c)] = self[(r, c)].clone();
            }
        }
        out
    }

    /// `[A | B]`: matrices side by side.  All arguments must share a row count.
    pub fn hstack(parts: &[&IntMatrix]) -> IntMatrix {
        assert!(!parts.is_empty(), "hstack of nothing");
        let rows = parts[0].rows;
        assert!(parts.iter().all(|p| p.rows == rows), "row mismatch in hstack");
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = IntMatrix::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            for r in 0..rows {
                for c in 0..p.cols {
                    out[(r, off + c)] = p[(r, c)].clone();
                }
            }
            off += p.cols;
        }
        out
    }

    /// Matrices stacked vertically.  All arguments must share a column count.
    pub fn vstack(parts: &[&IntMatrix]) -> IntMatrix {
        assert!(!parts.is_empty(), "vstack of nothing");
        let cols = parts[0].cols;
        assert!(parts.iter().all(|p| p.cols == cols), "column mismatch in vstack");
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = IntMatrix::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            for r in 0..p.rows {
                for c in 0..cols {
                    out[(off + r, c)] = p[(r, c)].clone();
                }
            }
            off += p.rows;
        }
        out
    }

    pub fn block_diag(parts: &[&IntMatrix]) -> IntMatrix {
        let rows = parts.iter().map(|p| p.rows).sum();
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = IntMatrix::zeros(rows, cols);
        let (mut ro, mut co) = (0, 0);
        for p in parts {
            for r in 0..p.rows {
                for c in 0..p.cols {
                    out[(ro + r, co + c)] = p[(r, c)].clone();
                }
            }
            ro += p.rows;
            co += p.cols;
        }
        out
    }

    /// Column-major vectorisation; pairs with [`kron`] via
    /// `vec(A X B) = kron(Bᵀ, A) · vec(X)`.
    pub fn vec_col(&self) -> Vec<Int> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                v.push(self[(r, c)].clone());
            }
        }
        v
    }

    /// Inverse of [`IntMatrix::vec_col`].
    pub fn from_vec_col(rows: usize, cols: usize, v: &[Int]) -> IntMatrix {
        assert_eq!(v.len(), rows * cols, "vector length must match shape");
        let mut out = IntMatrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                out[(r, c)] = v[c * rows + r].clone();
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.entries.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -&self[(r, c)];
            self[(r, c)] = v;
        }
    }

    fn negate_col(&mut self, c: usize) {
        for r in 0..self.rows {
            let v = -&self[(r, c)];
            self[(r, c)] = v;
        }
    }

    /// `row[i] -= q * row[j]`
    fn row_sub(&mut self, i: usize, j: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let v = &self[(i, c)] - q * &self[(j, c)];
            self[(i, c)] = v;
        }
    }

    /// `col[i] += q * col[j]`
    fn col_add(&mut self, i: usize, j: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let v = &self[(r, i)] + q * &self[(r, j)];
            self[(r, i)] = v;
        }
    }

    /// Replace rows i and j by the unimodular combination
    /// `(x·ri + y·rj, -(b/g)·ri + (a/g)·rj)` where `g = x·a + y·b`.
    fn row_combine(&mut self, i: usize, j: usize, x: &Int, y: &Int, ag: &Int, bg: &Int) {
        for c in 0..self.cols {
            let ri = self[(i, c)].clone();
            let rj = self[(j, c)].clone();
            self[(i, c)] = x * &ri + y * &rj;
            self[(j, c)] = ag * &rj - bg * &ri;
        }
    }

    fn col_combine(&mut self, i: usize, j: usize, x: &Int, y: &Int, ag: &Int, bg: &Int) {
        for r in 0..self.rows {
            let ci = self[(r, i)].clone();
            let cj = self[(r, j)].clone();
            self[(r, i)] = x * &ci + y * &cj;
            self[(r, j)] = ag * &cj - bg * &ci;
        }
    }

    /// Row-style Hermite normal form.  Returns `(H, U)` with `U * self = H`.
    pub fn hnf(&self) -> (IntMatrix, IntMatrix) {
        let m = self.rows;
        let mut h = self.clone();
        let mut u = IntMatrix::identity(m);
        let mut r = 0;
        for c in 0..self.cols {
            if r == m {
                break;
            }
            loop {
                // Pull the smallest nonzero entry of column c (rows >= r) up
                // to the pivot slot, then shrink everything below it.
                let mut piv: Option<usize> = None;
                for i in r..m {
                    if !h[(i, c)].is_zero() {
                        piv = match piv {
                            None => Some(i),
                            Some(p) if h[(i, c)].abs() < h[(p, c)].abs() => Some(i),
                            keep => keep,
                        };
                    }
                }
                let Some(p) = piv else { break };
                if p != r {
                    h.swap_rows(p, r);
                    u.swap_rows(p, r);
                }
                let mut clean = true;
                for i in r + 1..m {
                    if !h[(i, c)].is_zero() {
                        let q = h[(i, c)].div_floor(&h[(r, c)]);
                        h.row_sub(i, r, &q);
                        u.row_sub(i, r, &q);
                        if !h[(i, c)].is_zero() {
                            clean = false;
                        }
                    }
                }
                if clean {
                    break;
                }
            }
            if !h[(r, c)].is_zero() {
                if h[(r, c)].is_negative() {
                    h.negate_row(r);
                    u.negate_row(r);
                }
                for i in 0..r {
                    let q = h[(i, c)].div_floor(&h[(r, c)]);
                    h.row_sub(i, r, &q);
                    u.row_sub(i, r, &q);
                }
                r += 1;
            }
        }
        (h, u)
    }

    /// Smith normal form.  `u * self * v = d` with `u`, `v` unimodular,
    /// diagonal non-negative, each entry dividing the next, zeros last.
    pub fn snf(&self) -> Smith {
        let (m, n) = (self.rows, self.cols);
        let k = m.min(n);
        let mut d = self.clone();
        let mut u = IntMatrix::identity(m);
        let mut v = IntMatrix::identity(n);

        let mut t = 0;
        while t < k {
            // Locate a minimal-magnitude nonzero entry in the trailing block.
            let mut piv: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    if !d[(i, j)].is_zero() {
                        piv = match piv {
                            None => Some((i, j)),
                            Some(p) if d[(i, j)].abs() < d[p].abs() => Some((i, j)),
                            keep => keep,
                        };
                    }
                }
            }
            let Some((pi, pj)) = piv else { break };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            // Plain subtraction clears an entry the pivot divides without
            // touching the pivot row/column; the gcd combine handles the rest
            // and strictly shrinks the pivot, so the loop terminates.
            loop {
                let mut combined = false;
                for i in t + 1..m {
                    if d[(i, t)].is_zero() {
                        continue;
                    }
                    if d[(i, t)].is_multiple_of(&d[(t, t)]) {
                        let q = &d[(i, t)] / &d[(t, t)];
                        d.row_sub(i, t, &q);
                        u.row_sub(i, t, &q);
                    } else {
                        let (g, x, y) = xgcd(&d[(t, t)], &d[(i, t)]);
                        let ag = &d[(t, t)] / &g;
                        let bg = &d[(i, t)] / &g;
                        d.row_combine(t, i, &x, &y, &ag, &bg);
                        u.row_combine(t, i, &x, &y, &ag, &bg);
                        combined = true;
                    }
                }
                for j in t + 1..n {
                    if d[(t, j)].is_zero() {
                        continue;
                    }
                    if d[(t, j)].is_multiple_of(&d[(t, t)]) {
                        let q = -(&d[(t, j)] / &d[(t, t)]);
                        d.col_add(j, t, &q);
                        v.col_add(j, t, &q);
                    } else {
                        let (g, x, y) = xgcd(&d[(t, t)], &d[(t, j)]);
                        let ag = &d[(t, t)] / &g;
                        let bg = &d[(t, j)] / &g;
                        d.col_combine(t, j, &x, &y, &ag, &bg);
                        v.col_combine(t, j, &x, &y, &ag, &bg);
                        combined = true;
                    }
                }
                if !combined {
                    break;
                }
            }
            t += 1;
        }

        for i in 0..k {
            if d[(i, i)].is_negative() {
                d.negate_col(i);
                v.negate_col(i);
            }
        }

        // Enforce the divisibility chain.  Each repair replaces the pair
        // (a, b) by (gcd, lcm), so the loop terminates.
        loop {
            let mut ok = true;
            for i in 0..k.saturating_sub(1) {
                let a = d[(i, i)].clone();
                let b = d[(i + 1, i + 1)].clone();
                if a.is_zero() || b.is_zero() || b.is_multiple_of(&a) {
                    continue;
                }
                ok = false;
                d.col_add(i, i + 1, &Int::one());
                v.col_add(i, i + 1, &Int::one());
                let (g, x, y) = xgcd(&a, &b);
                let ag = &a / &g;
                let bg = &b / &g;
                d.row_combine(i, i + 1, &x, &y, &ag, &bg);
                u.row_combine(i, i + 1, &x, &y, &ag, &bg);
                // The pivot row now carries y*b in column i+1; clear it.
                let q = (&y * &b) / &g;
                let mq = -&q;
                d.col_add(i + 1, i, &mq);
                v.col_add(i + 1, i, &mq);
                if d[(i, i)].is_negative() {
                    d.negate_col(i);
                    v.negate_col(i);
                }
                if d[(i + 1, i + 1)].is_negative() {
                    d.negate_col(i + 1);
                    v.negate_col(i + 1);
                }
            }
            if ok {
                break;
            }
        }

        Smith { d, u, v }
    }

    /// Number of nonzero invariant factors.
    pub fn rank(&self) -> usize {
        let s = self.snf();
        let k = self.rows.min(self.cols);
        (0..k).filter(|&i| !s.d[(i, i)].is_zero()).count()
    }

    /// Determinant by fraction-free elimination.  Panics on non-square input.
    pub fn det(&self) -> Int {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        let mut m = self.clone();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m[(i, k)].is_zero()) else {
                    return Int::zero();
                };
                m.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = num / &prev;
                }
                m[(i, k)] = Int::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }

    /// Integer solution of `self · x = b`, if one exists.
    pub fn solve(&self, b: &[Int]) -> Option<Vec<Int>> {
        assert_eq!(b.len(), self.rows, "rhs length mismatch");
        let sol = self.solve_matrix(&IntMatrix::from_col(b))?;
        Some(sol.col_vec(0))
    }

    /// Integer solution of `self · X = B`, if one exists.  Complete: returns
    /// `None` only when no integer solution exists.
    pub fn solve_matrix(&self, b: &IntMatrix) -> Option<IntMatrix> {
        assert_eq!(b.rows(), self.rows, "rhs row mismatch");
        let (m, n) = (self.rows, self.cols);
        let s = self.snf();
        let c = s.u.mul(b);
        let k = m.min(n);
        let mut y = IntMatrix::zeros(n, b.cols());
        for col in 0..b.cols() {
            for i in 0..m {
                let rhs = &c[(i, col)];
                if i < k && !s.d[(i, i)].is_zero() {
                    let (q, r) = rhs.div_mod_floor(&s.d[(i, i)]);
                    if !r.is_zero() {
                        return None;
                    }
                    y[(i, col)] = q;
                } else if !rhs.is_zero() {
                    return None;
                }
            }
        }
        Some(s.v.mul(&y))
    }

    /// Basis (as columns) of the lattice `{x : self · x = 0}`.  The basis is
    /// complete: every integer kernel vector is an integer combination.
    pub fn kernel_basis(&self) -> IntMatrix {
        let n = self.cols;
        let s = self.snf();
        let k = self.rows.min(n);
        let rank = (0..k).filter(|&i| !s.d[(i, i)].is_zero()).count();
        s.v.col_range(rank, n)
    }

    /// Canonical basis (as columns) of the lattice spanned by the columns.
    pub fn column_basis(&self) -> IntMatrix {
        let (h, _) = self.transpose().hnf();
        let nonzero = (0..h.rows()).filter(|&r| (0..h.cols()).any(|c| !h[(r, c)].is_zero())).count();
        h.row_range(0, nonzero).transpose()
    }

    /// Row-style HNF of the rows themselves (no transform), zero rows dropped.
    /// Rows of the result are the canonical basis of the row lattice.
    pub fn row_basis(&self) -> IntMatrix {
        let (h, _) = self.hnf();
        let nonzero = (0..h.rows()).filter(|&r| (0..h.cols()).any(|c| !h[(r, c)].is_zero())).count();
        h.row_range(0, nonzero)
    }
}

/// `U A V = D` with the guarantees documented on [`IntMatrix::snf`].
#[derive(Clone, Debug)]
pub struct Smith {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl Smith {
    /// Diagonal entries, padded with zeros up to `n` coordinates.
    pub fn diag_padded(&self, n: usize) -> Vec<Int> {
        let k = self.d.rows().min(self.d.cols());
        (0..n)
            .map(|i| if i < k { self.d[(i, i)].clone() } else { Int::zero() })
            .collect()
    }
}

/// Extended gcd with the gcd normalised non-negative: `g = x·a + y·b`.
pub fn xgcd(a: &Int, b: &Int) -> (Int, Int, Int) {
    // Loop invariants: r0 = x0·a + y0·b and r1 = x1·a + y1·b.
    let (mut r0, mut x0, mut y0) = (a.clone(), Int::one(), Int::zero());
    let (mut r1, mut x1, mut y1) = (b.clone(), Int::zero(), Int::one());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let x2 = &x0 - &q * &x1;
        let y2 = &y0 - &q * &y1;
        (r0, x0, y0) = (r1, x1, y1);
        (r1, x1, y1) = (r2, x2, y2);
    }
    if r0.is_negative() {
        (-r0, -x0, -y0)
    } else {
        (r0, x0, y0)
    }
}

/// Kronecker product; `kron(Bᵀ, A) · vec(X) = vec(A X B)` with column-major
/// vectorisation.
pub fn kron(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = IntMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ai in 0..a.rows() {
        for aj in 0..a.cols() {
            if a[(ai, aj)].is_zero() {
                continue;
            }
            for bi in 0..b.rows() {
                for bj in 0..b.cols() {
                    out[(ai * b.rows() + bi, aj * b.cols() + bj)] = &a[(ai, aj)] * &b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Reduce `v` to its canonical residue modulo the row lattice of `h`,
/// where `h` is in row HNF (as produced by [`IntMatrix::row_basis`]).
pub fn reduce_mod_row_basis(v: &mut [Int], h: &IntMatrix) {
    for r in 0..h.rows() {
        let Some(p) = (0..h.cols()).find(|&c| !h[(r, c)].is_zero()) else { continue };
        let q = v[p].div_floor(&h[(r, p)]);
        if q.is_zero() {
            continue;
        }
        for c in 0..h.cols() {
            let delta = &q * &h[(r, c)];
            v[c] -= delta;
        }
    }
}

/// Handle to an unknown matrix block inside a [`MatrixSystem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block(usize);

/// One additive term `left · X · right` of a matrix equation.
pub struct Term<'a> {
    pub block: Block,
    pub left: &'a IntMatrix,
    pub right: &'a IntMatrix,
}

/// Joint integer linear system over several unknown matrices.
///
/// Equations have the shape `Σ left_j · X_{b_j} · right_j = rhs`.  Everything
/// is vectorised column-major and handed to [`IntMatrix::solve_matrix`], so
/// solvability is decided exactly.  Congruences "modulo the column lattice of
/// R" are expressible by adding a slack unknown multiplied by R.
pub struct MatrixSystem {
    shapes: Vec<(usize, usize)>,
    rows: Vec<Vec<Int>>,
    rhs: Vec<Int>,
}

impl MatrixSystem {
    pub fn new() -> Self {
        MatrixSystem { shapes: Vec::new(), rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn unknown(&mut self, rows: usize, cols: usize) -> Block {
        self.shapes.push((rows, cols));
        Block(self.shapes.len() - 1)
    }

    fn offsets(&self) -> (Vec<usize>, usize) {
        let mut offs = Vec::with_capacity(self.shapes.len());
        let mut total = 0;
        for &(r, c) in &self.shapes {
            offs.push(total);
            total += r * c;
        }
        (offs, total)
    }

    pub fn equation(&mut self, terms: &[Term<'_>], rhs: &IntMatrix) {
        let (offs, total) = self.offsets();
        for t in terms {
            let (br, bc) = self.shapes[t.block.0];
            assert_eq!(t.left.cols(), br, "term left factor width must match block rows");
            assert_eq!(t.right.rows(), bc, "term right factor height must match block cols");
            assert_eq!(t.left.rows(), rhs.rows(), "term shape must match rhs rows");
            assert_eq!(t.right.cols(), rhs.cols(), "term shape must match rhs cols");
        }
        let eq_rows = rhs.rows() * rhs.cols();
        let mut new_rows = vec![vec![Int::zero(); total]; eq_rows];
        for t in terms {
            let k = kron(&t.right.transpose(), t.left);
            let off = offs[t.block.0];
            for r in 0..eq_rows {
                for c in 0..k.cols() {
                    let v = &new_rows[r][off + c] + &k[(r, c)];
                    new_rows[r][off + c] = v;
                }
            }
        }
        self.rows.extend(new_rows);
        self.rhs.extend(rhs.vec_col());
    }

    pub fn solve(&self) -> Option<Vec<IntMatrix>> {
        self.solve_or_certificate().ok()
    }

    fn assemble(&self) -> IntMatrix {
        let (_, total) = self.offsets();
        let mut a = IntMatrix::zeros(self.rows.len(), total);
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                a[(r, c)] = v.clone();
            }
        }
        a
    }

    /// Solve, or produce a proof that no integer solution exists: a row
    /// vector `u` and modulus `d` with `u·A ≡ 0 (mod d)` yet `u·b ≢ 0`
    /// (`d = 0` reads as exact equality).  The certificate is checkable by
    /// plain matrix arithmetic, independent of this solver.
    pub fn solve_or_certificate(&self) -> std::result::Result<Vec<IntMatrix>, Infeasibility> {
        let (offs, _) = self.offsets();
        let a = self.assemble();
        let smith = a.snf();
        let c = smith.u.mul(&IntMatrix::from_vec_col(self.rhs.len(), 1, &self.rhs));
        let diag = smith.diag_padded(a.rows().min(a.cols()));
        let mut y = vec![Int::zero(); a.cols()];
        for i in 0..a.rows() {
            let d = if i < diag.len() { diag[i].clone() } else { Int::zero() };
            let ci = c[(i, 0)].clone();
            if d.is_zero() {
                if !ci.is_zero() {
                    return Err(Infeasibility { row: smith.u.row_vec(i), modulus: Int::zero() });
                }
            } else if (&ci % &d).is_zero() {
                y[i] = ci / &d;
            } else {
                return Err(Infeasibility { row: smith.u.row_vec(i), modulus: d });
            }
        }
        let x = smith.v.mul(&IntMatrix::from_vec_col(y.len(), 1, &y));
        let mut out = Vec::with_capacity(self.shapes.len());
        for (i, &(r, c)) in self.shapes.iter().enumerate() {
            out.push(IntMatrix::from_vec_col(r, c, &x.col_vec(0)[offs[i]..offs[i] + r * c]));
        }
        Ok(out)
    }

    /// Replays an [`Infeasibility`] certificate against this system.
    pub fn check_infeasibility(&self, cert: &Infeasibility) -> bool {
        let a = self.assemble();
        if cert.row.len() != a.rows() {
            return false;
        }
        let u = {
            let mut m = IntMatrix::zeros(1, cert.row.len());
            for (j, v) in cert.row.iter().enumerate() {
                m[(0, j)] = v.clone();
            }
            m
        };
        let ua = u.mul(&a);
        let ub: Int = cert.row.iter().zip(&self.rhs).map(|(x, y)| x * y).sum();
        let kills = |v: &Int| {
            if cert.modulus.is_zero() {
                v.is_zero()
            } else {
                (v % &cert.modulus).is_zero()
            }
        };
        (0..ua.cols()).all(|j| kills(&ua[(0, j)])) && !kills(&ub)
    }
}

/// Proof of integer-infeasibility of a [`MatrixSystem`]; see
/// [`MatrixSystem::solve_or_certificate`].
#[derive(Clone, Debug)]
pub struct Infeasibility {
    pub row: Vec<Int>,
    pub modulus: Int,
}

impl Default for MatrixSystem {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gcd_i64(a: i64, b: i64) -> i64 {
        let (mut a, mut b) = (a.abs(), b.abs());
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }

    #[test]
    fn xgcd_bezout_identity_all_signs() {
        for a in -12i64..=12 {
            for b in -12i64..=12 {
                let (g, x, y) = xgcd(&int(a), &int(b));
                assert!(!g.is_negative(), "gcd must be non-negative");
                assert_eq!(g, int(gcd_i64(a, b)), "gcd value for ({a},{b})");
                assert_eq!(&x * int(a) + &y * int(b), g, "Bezout identity for ({a},{b})");
            }
        }
    }

    #[test]
    fn hnf_of_single_column_is_gcd() {
        // Independent oracle: Euclid on 4, 6.
        let a = IntMatrix::from_rows_i64(&[vec![4], vec![6]]);
        let (h, u) = a.hnf();
        assert_eq!(h, IntMatrix::from_rows_i64(&[vec![2], vec![0]]));
        assert_eq!(u.mul(&a), h, "transform must reproduce H");
        assert_eq!(u.det().abs(), int(1), "transform must be unimodular");
        assert_eq!(int(gcd_i64(4, 6)), h[(0, 0)]);
    }

    #[test]
    fn hnf_shape_properties() {
        let a = IntMatrix::from_rows_i64(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
        let (h, u) = a.hnf();
        assert_eq!(u.mul(&a), h);
        assert_eq!(u.det().abs(), int(1));
        // Pivots positive, entries above pivots reduced, zero rows last.
        let mut last_pivot_col: Option<usize> = None;
        let mut seen_zero_row = false;
        for r in 0..h.rows() {
            let pivot = (0..h.cols()).find(|&c| !h[(r, c)].is_zero());
            match pivot {
                None => seen_zero_row = true,
                Some(p) => {
                    assert!(!seen_zero_row, "zero rows must come last");
                    if let Some(lp) = last_pivot_col {
                        assert!(p > lp, "pivot columns must strictly increase");
                    }
                    last_pivot_col = Some(p);
                    assert!(h[(r, p)].is_positive(), "pivot must be positive");
                    for i in 0..r {
                        assert!(
                            !h[(i, p)].is_negative() && h[(i, p)] < h[(r, p)],
                            "entries above a pivot must lie in [0, pivot)"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn snf_matches_gcd_of_minors() {
        // Independent oracle: d1 = gcd of entries, d1*d2 = gcd of 2x2 minors.
        let a = IntMatrix::from_rows_i64(&[vec![2, 4], vec![6, 8]]);
        let s = a.snf();
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d);
        assert_eq!(s.d[(0, 0)], int(2), "first factor is the entry gcd");
        assert_eq!(s.d[(1, 1)], int(4), "product of factors is |det| = 8");
        assert_eq!(s.u.det().abs(), int(1));
        assert_eq!(s.v.det().abs(), int(1));
    }

    #[test]
    fn snf_classic_divisibility_fix() {
        let a = IntMatrix::from_rows_i64(&[vec![4, 0], vec![0, 6]]);
        let s = a.snf();
        assert_eq!(s.d[(0, 0)], int(2));
        assert_eq!(s.d[(1, 1)], int(12));
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d);
    }

    #[test]
    fn snf_of_empty_and_zero() {
        let z = IntMatrix::zeros(0, 3);
        let s = z.snf();
        assert_eq!(s.d.rows(), 0);
        assert_eq!(s.v.rows(), 3);
        assert!(s.v.is_identity());

        let z = IntMatrix::zeros(2, 2);
        let s = z.snf();
        assert!(s.d.is_zero_matrix());
    }

    #[test]
    fn solve_linear_diophantine() {
        // Oracle: extended Euclid, 2*(-1) + 3*1 = 1.
        let a = IntMatrix::from_rows_i64(&[vec![2, 3]]);
        let x = a.solve(&[int(1)]).expect("2x + 3y = 1 is solvable");
        assert_eq!(&int(2) * &x[0] + &int(3) * &x[1], int(1));

        let a = IntMatrix::from_rows_i64(&[vec![2]]);
        assert!(a.solve(&[int(3)]).is_none(), "2x = 3 has no integer solution");

        let a = IntMatrix::from_rows_i64(&[vec![2, 0], vec![0, 3]]);
        let x = a.solve(&[int(2), int(3)]).unwrap();
        assert_eq!(x, vec![int(1), int(1)]);
    }

    #[test]
    fn solve_against_box_search() {
        // Every box-findable solution must also be found by solve (it is
        // complete), and every solve result must verify.
        let cases = [
            vec![vec![2, 4], vec![3, 5]],
            vec![vec![6, 10], vec![15, 4]],
            vec![vec![2, 0], vec![0, 0]],
            vec![vec![3, 6], vec![6, 12]],
        ];
        for rows in &cases {
            let a = IntMatrix::from_rows_i64(rows);
            for b0 in -4i64..=4 {
                for b1 in -4i64..=4 {
                    let b = [int(b0), int(b1)];
                    let found = a.solve(&b);
                    let mut box_hit = false;
                    'search: for x0 in -20i64..=20 {
                        for x1 in -20i64..=20 {
                            if rows[0][0] * x0 + rows[0][1] * x1 == b0
                                && rows[1][0] * x0 + rows[1][1] * x1 == b1
                            {
                                box_hit = true;
                                break 'search;
                            }
                        }
                    }
                    if box_hit {
                        assert!(found.is_some(), "solve missed a solution for rhs ({b0},{b1})");
                    }
                    if let Some(x) = found {
                        let ax = a.mul(&IntMatrix::from_col(&x));
                        assert_eq!(ax.col_vec(0), b.to_vec(), "solve returned a non-solution");
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_basis_simple() {
        // {(x, y) : 2x - 2y = 0} is generated by (1, 1).
        let a = IntMatrix::from_rows_i64(&[vec![2, -2]]);
        let k = a.kernel_basis();
        assert_eq!(k.cols(), 1);
        assert!(a.mul(&k).is_zero_matrix());
        assert_eq!(k[(0, 0)].abs(), int(1));
        assert_eq!(k[(0, 0)], k[(1, 0)]);
    }

    #[test]
    fn kernel_basis_rank_deficient() {
        let a = IntMatrix::from_rows_i64(&[vec![1, 2], vec![2, 4]]);
        let k = a.kernel_basis();
        assert_eq!(k.cols(), 1);
        assert!(a.mul(&k).is_zero_matrix());
        // The kernel basis must be saturated: (2, -1) generates.
        assert_eq!(k[(0, 0)].abs(), int(2));
        assert_eq!(k[(1, 0)].abs(), int(1));
    }

    #[test]
    fn kernel_complete_against_box_search() {
        let a = IntMatrix::from_rows_i64(&[vec![2, 3, 1], vec![4, 6, 2]]);
        let k = a.kernel_basis();
        assert!(a.mul(&k).is_zero_matrix());
        // Every small kernel vector must be an integer combination of basis
        // columns, i.e. solvable.
        for x0 in -3i64..=3 {
            for x1 in -3i64..=3 {
                for x2 in -3i64..=3 {
                    if 2 * x0 + 3 * x1 + x2 == 0 {
                        let v = [int(x0), int(x1), int(x2)];
                        assert!(
                            k.solve(&v).is_some(),
                            "kernel vector ({x0},{x1},{x2}) not spanned by basis"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn column_basis_spans_same_lattice() {
        let a = IntMatrix::from_rows_i64(&[vec![2, 4, 6], vec![0, 2, 2]]);
        let b = a.column_basis();
        // Mutual containment of column lattices.
        for c in 0..a.cols() {
            assert!(b.solve(&a.col_vec(c)).is_some());
        }
        for c in 0..b.cols() {
            assert!(a.solve(&b.col_vec(c)).is_some());
        }
    }

    #[test]
    fn reduce_mod_row_basis_canonicalises() {
        let rels = IntMatrix::from_rows_i64(&[vec![2, 0], vec![0, 3]]);
        let h = rels.row_basis();
        let mut v = vec![int(5), int(7)];
        reduce_mod_row_basis(&mut v, &h);
        assert_eq!(v, vec![int(1), int(1)]);
        let mut w = vec![int(-1), int(-1)];
        reduce_mod_row_basis(&mut w, &h);
        assert_eq!(w, vec![int(1), int(2)]);
    }

    #[test]
    fn kron_vectorisation_identity() {
        let a = IntMatrix::from_rows_i64(&[vec![1, 2], vec![3, 4]]);
        let x = IntMatrix::from_rows_i64(&[vec![5, 6], vec![7, 8]]);
        let b = IntMatrix::from_rows_i64(&[vec![1, 0], vec![2, 1]]);
        let axb = a.mul(&x).mul(&b);
        let k = kron(&b.transpose(), &a);
        let vx = x.vec_col();
        let lhs = k.mul(&IntMatrix::from_col(&vx));
        assert_eq!(lhs.col_vec(0), axb.vec_col());
    }

    #[test]
    fn matrix_system_solves_sylvester_style_equation() {
        // Find X with A X = B.
        let a = IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]]);
        let b = IntMatrix::from_rows_i64(&[vec![3, 5], vec![2, 3]]);
        let mut sys = MatrixSystem::new();
        let x = sys.unknown(2, 2);
        let i2 = IntMatrix::identity(2);
        sys.equation(&[Term { block: x, left: &a, right: &i2 }], &b);
        let sol = sys.solve().expect("A is unimodular, X = A^-1 B exists");
        assert_eq!(a.mul(&sol[0]), b);
    }

    #[test]
    fn matrix_system_congruence_with_slack() {
        // X ≡ [[1]] mod 5: X - 5 S = [[1]].
        let mut sys = MatrixSystem::new();
        let x = sys.unknown(1, 1);
        let s = sys.unknown(1, 1);
        let i1 = IntMatrix::identity(1);
        let five = IntMatrix::from_rows_i64(&[vec![5]]);
        sys.equation(
            &[Term { block: x, left: &i1, right: &i1 }, Term { block: s, left: &five, right: &i1 }],
            &IntMatrix::from_rows_i64(&[vec![1]]),
        );
        let sol = sys.solve().unwrap();
        let x = &sol[0][(0, 0)];
        let s = &sol[1][(0, 0)];
        assert_eq!(x + int(5) * s, int(1));
    }

    #[test]
    fn matrix_system_detects_unsolvable() {
        let mut sys = MatrixSystem::new();
        let x = sys.unknown(1, 1);
        let two = IntMatrix::from_rows_i64(&[vec![2]]);
        let i1 = IntMatrix::identity(1);
        sys.equation(&[Term { block: x, left: &two, right: &i1 }], &IntMatrix::from_rows_i64(&[vec![1]]));
        assert!(sys.solve().is_none(), "2x = 1 has no integer solution");
    }

    #[test]
    fn infeasibility_certificates_replay() {
        // 3x + 6s = 1 has no solution; the certificate must replay against
        // the system by plain arithmetic, and must reject when tampered.
        let mut sys = MatrixSystem::new();
        let x = sys.unknown(1, 1);
        let s = sys.unknown(1, 1);
        let i1 = IntMatrix::identity(1);
        let three = IntMatrix::from_rows_i64(&[vec![3]]);
        let six = IntMatrix::from_rows_i64(&[vec![6]]);
        sys.equation(
            &[Term { block: x, left: &three, right: &i1 }, Term { block: s, left: &six, right: &i1 }],
            &IntMatrix::from_rows_i64(&[vec![1]]),
        );
        let cert = sys.solve_or_certificate().expect_err("gcd(3,6) does not divide 1");
        assert!(sys.check_infeasibility(&cert));
        let mut forged = cert;
        forged.modulus += int(1);
        assert!(!sys.check_infeasibility(&forged));

        // The feasible neighbour solves instead of certifying.
        let mut sys = MatrixSystem::new();
        let x = sys.unknown(1, 1);
        let s = sys.unknown(1, 1);
        sys.equation(
            &[Term { block: x, left: &three, right: &i1 }, Term { block: s, left: &six, right: &i1 }],
            &IntMatrix::from_rows_i64(&[vec![3]]),
        );
        let sol = sys.solve_or_certificate().expect("3 divides 3");
        assert_eq!(
            three.mul(&sol[0]).add(&six.mul(&sol[1])),
            IntMatrix::from_rows_i64(&[vec![3]])
        );
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(IntMatrix::identity(0).det(), int(1));
        assert_eq!(IntMatrix::from_rows_i64(&[vec![7]]).det(), int(7));
        assert_eq!(IntMatrix::from_rows_i64(&[vec![1, 2], vec![3, 4]]).det(), int(-2));
        assert_eq!(
            IntMatrix::from_rows_i64(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 1]]).det(),
            int(0)
        );
        assert_eq!(
            IntMatrix::from_rows_i64(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 2]]).det(),
            int(6)
        );
        assert_eq!(
            IntMatrix::from_rows_i64(&[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]).det(),
            int(-1)
        );
    }
}
