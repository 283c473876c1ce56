//! Exact linear algebra over ℤ and over the τ-fraction field.
//!
//! Integer side: dense matrices over arbitrary-precision integers with
//! Smith normal form (unimodular diagonalization with divisibility),
//! Hermite normal form for canonical sublattice bases, integer linear
//! solving and kernels — the engines behind finitely generated abelian
//! group arithmetic and Gysin computations.
//!
//! Field side: dense matrices over [`TauFraction`] with deterministic
//! reduced row echelon form (leftmost-pivot), rank, kernel, solving and
//! inversion — the engines behind flag and mixed-Hodge linear algebra.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalars::TauFraction;

// ---------------------------------------------------------------------------
// Integer matrices
// ---------------------------------------------------------------------------

/// A dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| BigInt::from(x)))
            .collect();
        IntMat { rows: r, cols: c, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> IntMat {
        let mut t = IntMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &IntMat) -> IntMat {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        let mut out = IntMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = &self[(i, k)] * &rhs[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    /// Horizontal concatenation [self | rhs].
    pub fn hstack(&self, rhs: &IntMat) -> IntMat {
        assert_eq!(self.rows, rhs.rows, "row mismatch");
        let mut out = IntMat::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..rhs.cols {
                out[(i, self.cols + j)] = rhs[(i, j)].clone();
            }
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m[(i, k)].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    let a = m[(k, j)].clone();
                    let b = m[(p, j)].clone();
                    m[(k, j)] = b;
                    m[(p, j)] = a;
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = t / &prev;
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[a] += q * row[b]
    fn add_row(&mut self, a: usize, b: usize, q: &BigInt) {
        for j in 0..self.cols {
            let t = &self[(b, j)] * q;
            self[(a, j)] += t;
        }
    }

    /// col[a] += q * col[b]
    fn add_col(&mut self, a: usize, b: usize, q: &BigInt) {
        for i in 0..self.rows {
            let t = &self[(i, b)] * q;
            self[(i, a)] += t;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let t = -self[(a, j)].clone();
            self[(a, j)] = t;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// Smith normal form: U·M·V = D with U, V unimodular and D diagonal with
/// d₁ | d₂ | … and dᵢ ≥ 0.
pub struct Snf {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
}

impl Snf {
    /// The nonzero diagonal entries (all ≥ 1, dividing in sequence).
    pub fn nonzero_diagonal(&self) -> Vec<BigInt> {
        (0..self.d.nrows().min(self.d.ncols()))
            .map(|t| self.d[(t, t)].clone())
            .filter(|x| !x.is_zero())
            .collect()
    }
}

pub fn smith_normal_form(m: &IntMat) -> Snf {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut d = m.clone();
    let mut u = IntMat::identity(rows);
    let mut v = IntMat::identity(cols);
    let bound = rows.min(cols);

    for t in 0..bound {
        'pivot: loop {
            // Find the entry of minimal absolute value in the trailing block.
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if d[(i, j)].is_zero() {
                        continue;
                    }
                    match best {
                        Some((bi, bj)) if d[(bi, bj)].abs() <= d[(i, j)].abs() => {}
                        _ => best = Some((i, j)),
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finalize(u, d, v);
            };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            // Clear the pivot column and row by Euclidean steps.
            let mut clean = true;
            for i in t + 1..rows {
                if !d[(i, t)].is_zero() {
                    let q = -(&d[(i, t)] / &d[(t, t)]);
                    d.add_row(i, t, &q);
                    u.add_row(i, t, &q);
                    if !d[(i, t)].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..cols {
                if !d[(t, j)].is_zero() {
                    let q = -(&d[(t, j)] / &d[(t, t)]);
                    d.add_col(j, t, &q);
                    v.add_col(j, t, &q);
                    if !d[(t, j)].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue 'pivot;
            }

            // Enforce divisibility of the remaining block by the pivot.
            for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&d[(i, j)] % &d[(t, t)]).is_zero() {
                        d.add_row(t, i, &BigInt::one());
                        u.add_row(t, i, &BigInt::one());
                        continue 'pivot;
                    }
                }
            }
            break;
        }
    }
    finalize(u, d, v)
}

fn finalize(mut u: IntMat, mut d: IntMat, v: IntMat) -> Snf {
    for t in 0..d.nrows().min(d.ncols()) {
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    Snf { u, d, v }
}

/// Solve M·x = b over ℤ; `None` when no integral solution exists.
pub fn integer_solve(m: &IntMat, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(b.len(), m.nrows(), "shape mismatch");
    let snf = smith_normal_form(m);
    let mut ub = vec![BigInt::zero(); m.nrows()];
    for i in 0..m.nrows() {
        for k in 0..m.nrows() {
            ub[i] += &snf.u[(i, k)] * &b[k];
        }
    }
    let mut y = vec![BigInt::zero(); m.ncols()];
    let bound = m.nrows().min(m.ncols());
    for t in 0..bound {
        let dt = &snf.d[(t, t)];
        if dt.is_zero() {
            if !ub[t].is_zero() {
                return None;
            }
        } else {
            let (q, r) = ub[t].div_rem(dt);
            if !r.is_zero() {
                return None;
            }
            y[t] = q;
        }
    }
    if ub[bound..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut x = vec![BigInt::zero(); m.ncols()];
    for i in 0..m.ncols() {
        for k in 0..m.ncols() {
            x[i] += &snf.v[(i, k)] * &y[k];
        }
    }
    Some(x)
}

/// A basis (as rows) of the integer kernel {x : M·x = 0}.
pub fn integer_kernel(m: &IntMat) -> Vec<Vec<BigInt>> {
    let snf = smith_normal_form(m);
    let bound = m.nrows().min(m.ncols());
    let mut basis = Vec::new();
    for t in 0..m.ncols() {
        let free = t >= bound || snf.d[(t, t)].is_zero();
        if free {
            basis.push(snf.v.col(t));
        }
    }
    basis
}

/// Row-style Hermite normal form of the lattice spanned by the rows:
/// returns a canonical basis (as rows of an r×cols matrix in echelon
/// form with positive pivots and reduced entries above each pivot).
pub fn hermite_row_basis(gens: &IntMat) -> IntMat {
    let mut rows: Vec<Vec<BigInt>> = (0..gens.nrows())
        .map(|i| (0..gens.ncols()).map(|j| gens[(i, j)].clone()).collect())
        .collect();
    let cols = gens.ncols();
    let mut pivot_rows: Vec<Vec<BigInt>> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        // Reduce all rows below the current pivot block on column c by
        // gcd steps until at most one has a nonzero entry there.
        loop {
            let mut nonzero: Vec<usize> = (r..rows.len()).filter(|&i| !rows[i][c].is_zero()).collect();
            if nonzero.len() <= 1 {
                break;
            }
            nonzero.sort_by_key(|&i| rows[i][c].abs());
            let (a, b) = (nonzero[0], nonzero[1]);
            let q = &rows[b][c] / &rows[a][c];
            for j in 0..cols {
                let t = &rows[a][j] * &q;
                rows[b][j] -= t;
            }
        }
        if let Some(i) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) {
            rows.swap(r, i);
            if rows[r][c].is_negative() {
                for j in 0..cols {
                    let t = -rows[r][j].clone();
                    rows[r][j] = t;
                }
            }
            // Reduce the entries above the pivot into [0, pivot).
            for i in 0..r {
                let q = rows[i][c].div_floor(&rows[r][c]);
                if !q.is_zero() {
                    for j in 0..cols {
                        let t = &rows[r][j] * &q;
                        rows[i][j] -= t;
                    }
                }
            }
            r += 1;
        }
    }
    rows.truncate(r);
    pivot_rows.append(&mut rows);
    let mut out = IntMat::zeros(pivot_rows.len(), cols);
    for (i, row) in pivot_rows.iter().enumerate() {
        for j in 0..cols {
            out[(i, j)] = row[j].clone();
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Matrices over the τ-fraction field
// ---------------------------------------------------------------------------

/// A dense matrix over [`TauFraction`], row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<TauFraction>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            data: vec![TauFraction::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = TauFraction::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> TauFraction) -> Self {
        let mut m = QMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_int_mat(m: &IntMat) -> Self {
        QMat::from_fn(m.nrows(), m.ncols(), |i, j| {
            TauFraction::from_scalar(crate::scalars::TauScalar::from_rational(
                crate::scalars::Rational::from_bigint(m[(i, j)].clone()),
            ))
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> QMat {
        QMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, rhs: &QMat) -> QMat {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        let mut out = QMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    if rhs[(k, j)].is_zero() {
                        continue;
                    }
                    out[(i, j)] = &out[(i, j)] + &(&self[(i, k)] * &rhs[(k, j)]);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        QMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        QMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }

    pub fn scale(&self, c: &TauFraction) -> QMat {
        QMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * c)
    }

    /// Entrywise τ ↦ −τ.
    pub fn conjugate(&self) -> QMat {
        QMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conjugate())
    }

    pub fn hstack(&self, rhs: &QMat) -> QMat {
        assert_eq!(self.rows, rhs.rows, "row mismatch");
        QMat::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                rhs[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn vstack(&self, rhs: &QMat) -> QMat {
        assert_eq!(self.cols, rhs.cols, "column mismatch");
        QMat::from_fn(self.rows + rhs.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)].clone()
            } else {
                rhs[(i - self.rows, j)].clone()
            }
        })
    }

    pub fn col(&self, j: usize) -> QMat {
        QMat::from_fn(self.rows, 1, |i, _| self[(i, j)].clone())
    }

    pub fn row(&self, i: usize) -> QMat {
        QMat::from_fn(1, self.cols, |_, j| self[(i, j)].clone())
    }

    pub fn submatrix_rows(&self, rows: &[usize]) -> QMat {
        QMat::from_fn(rows.len(), self.cols, |i, j| self[(rows[i], j)].clone())
    }

    /// In-place reduction to reduced row echelon form (leftmost pivots,
    /// first nonzero candidate row, pivots normalized to 1, entries above
    /// and below pivots cleared — fully deterministic).  Returns the
    /// pivot column indices.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            for j in 0..self.cols {
                self.data.swap(r * self.cols + j, p * self.cols + j);
            }
            let inv = self[(r, c)].recip().expect("nonzero pivot");
            for j in 0..self.cols {
                self[(r, j)] = &self[(r, j)] * &inv;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let f = self[(i, c)].clone();
                    for j in 0..self.cols {
                        let t = &self[(r, j)] * &f;
                        self[(i, j)] = &self[(i, j)] - &t;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// A basis (as columns) of {x : self·x = 0}.
    pub fn kernel(&self) -> QMat {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = QMat::zeros(self.cols, free.len());
        for (k, &fc) in free.iter().enumerate() {
            out[(fc, k)] = TauFraction::one();
            for (pr, &pc) in pivots.iter().enumerate() {
                out[(pc, k)] = -&r[(pr, fc)];
            }
        }
        out
    }

    /// Solve self·X = B exactly; `None` if inconsistent.  Free variables
    /// are set to zero (deterministic particular solution).
    pub fn solve(&self, b: &QMat) -> Option<QMat> {
        assert_eq!(self.rows, b.rows, "shape mismatch");
        let aug = self.hstack(b);
        let (r, pivots) = aug.rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = QMat::zeros(self.cols, b.cols);
        for (pr, &pc) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(pc, j)] = r[(pr, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let x = self.solve(&QMat::identity(self.rows))?;
        if self.mul(&x) == QMat::identity(self.rows) {
            Some(x)
        } else {
            None
        }
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = TauFraction;
    fn index(&self, (i, j): (usize, usize)) -> &TauFraction {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut TauFraction {
        &mut self.data[i * self.cols + j]
    }
}
