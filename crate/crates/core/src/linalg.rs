//! Small dense row-major matrices and a cyclic Jacobi eigensolver for real
//! symmetric matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(r).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|r| crate::scalar::dot(self.row(r), v)).collect())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.rows {
            for c in (r + 1)..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }

    fn off_diagonal_norm(&self) -> T {
        let mut acc = T::zero();
        for r in 0..self.rows {
            for (c, &x) in self.row(r).iter().enumerate() {
                if c != r {
                    acc += x * x;
                }
            }
        }
        acc.sqrt()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Eigenpairs of a real symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub eigenvalues: Vec<T>,
    /// Eigenvectors stored as columns.
    pub eigenvectors: Matrix<T>,
    pub sweeps: usize,
}

pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Cyclic Jacobi diagonalization of a real symmetric matrix.
///
/// Each sweep visits every `(p, q)` pair once in round-robin order: a sweep is
/// split into steps of disjoint pairs whose rotations are applied together,
/// which keeps all updates on contiguous rows. Pairs with `|a_pq|` below
/// `tol / n` are skipped; together they cannot hold the off-diagonal norm
/// above `tol`. Stops once the off-diagonal Frobenius norm drops below `1e-12`
/// (or a few ulps of the matrix norm for narrower scalar types), giving up
/// after [`JACOBI_MAX_SWEEPS`] sweeps. Each eigenvector's first
/// non-negligible component is made non-negative.
pub fn symmetric_eigen<T: Scalar>(matrix: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    let n = matrix.rows();
    if n != matrix.cols() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            matrix.cols()
        )));
    }
    if matrix.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }

    let mut a = matrix.clone();
    // Rows of `vt` are the eigenvectors; keeps rotation updates contiguous.
    let mut vt = Matrix::<T>::identity(n);
    let scale = a.frobenius_norm();
    let tol = T::lit(JACOBI_TOLERANCE).max(T::epsilon() * T::lit(16.0) * scale);
    let skip = tol / T::from_usize_exact(n.max(1));

    let players = n + n % 2;
    let mut rotations = Vec::with_capacity(players / 2);
    let mut sweeps = 0;
    let mut off = a.off_diagonal_norm();
    while off >= tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off.as_f64(),
            });
        }
        sweeps += 1;
        for round in 0..players.saturating_sub(1) {
            rotations.clear();
            for (p, q) in round_robin(players, round) {
                if q >= n {
                    continue;
                }
                if let Some(r) = Rotation::new(&a, p, q, skip) {
                    rotations.push(r);
                }
            }
            if rotations.is_empty() {
                continue;
            }
            apply_step(&mut a, &mut vt, &rotations);
        }
        off = a.off_diagonal_norm();
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    let negligible = T::lit(1e-10).max(T::epsilon() * T::lit(100.0));
    for (col, &src) in order.iter().enumerate() {
        let v = vt.row(src);
        let flip = v.iter().find(|x| x.abs() > negligible).is_some_and(|&x| x < T::zero());
        for (r, &x) in v.iter().enumerate() {
            eigenvectors[(r, col)] = if flip { -x } else { x };
        }
    }

    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// Pairs of round `round` in a circle-method tournament of `players` (even)
/// entrants; every pair meets exactly once over `players - 1` rounds.
fn round_robin(players: usize, round: usize) -> impl Iterator<Item = (usize, usize)> {
    let m = players - 1;
    let seat = move |pos: usize| if pos == 0 { 0 } else { 1 + (pos - 1 + round) % m };
    (0..players / 2).map(move |i| {
        let (x, y) = (seat(i), seat(players - 1 - i));
        (x.min(y), x.max(y))
    })
}

struct Rotation<T> {
    p: usize,
    q: usize,
    c: T,
    s: T,
    app: T,
    aqq: T,
    apq: T,
    t: T,
}

impl<T: Scalar> Rotation<T> {
    fn new(a: &Matrix<T>, p: usize, q: usize, skip: T) -> Option<Self> {
        let apq = a[(p, q)];
        if apq.abs() <= skip {
            return None;
        }
        let app = a[(p, p)];
        let aqq = a[(q, q)];
        let theta = (aqq - app) / (T::lit(2.0) * apq);
        let mag = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
        let t = if theta < T::zero() { -mag } else { mag };
        let c = T::one() / (t * t + T::one()).sqrt();
        Some(Rotation {
            p,
            q,
            c,
            s: t * c,
            app,
            aqq,
            apq,
            t,
        })
    }
}

fn rotate_rows<T: Scalar>(data: &mut [T], n: usize, r: &Rotation<T>) {
    let (lo, hi) = data.split_at_mut(r.q * n);
    let row_p = &mut lo[r.p * n..(r.p + 1) * n];
    let row_q = &mut hi[..n];
    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = r.c * xp - r.s * xq;
        *y = r.s * xp + r.c * xq;
    }
}

/// `A <- J^T A J` and `V^T <- J^T V^T` for a set of disjoint rotations `J`.
fn apply_step<T: Scalar>(a: &mut Matrix<T>, vt: &mut Matrix<T>, rotations: &[Rotation<T>]) {
    let n = a.rows();
    for r in rotations {
        rotate_rows(a.as_mut_slice(), n, r);
        rotate_rows(vt.as_mut_slice(), n, r);
    }
    for row in a.as_mut_slice().chunks_exact_mut(n) {
        for r in rotations {
            let (xp, xq) = (row[r.p], row[r.q]);
            row[r.p] = r.c * xp - r.s * xq;
            row[r.q] = r.s * xp + r.c * xq;
        }
    }
    for r in rotations {
        a[(r.p, r.p)] = r.app - r.t * r.apq;
        a[(r.q, r.q)] = r.aqq + r.t * r.apq;
        a[(r.p, r.q)] = T::zero();
        a[(r.q, r.p)] = T::zero();
    }
}
