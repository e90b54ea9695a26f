//! Exact dense linear algebra over ℚ.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Q;

/// Row-major rational matrix; the shape is kept even when a side is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<Q>>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![vec![Q::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = Q::one();
        }
        m
    }

    pub fn from_rows(cols: usize, data: Vec<Vec<Q>>) -> Self {
        assert!(data.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix { rows: data.len(), cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(rows: usize, cols: &[Vec<Q>]) -> Self {
        let mut m = Matrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length");
            for i in 0..rows {
                m.data[i][j] = c[i].clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.data[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i]
    }

    pub fn column(&self, j: usize) -> Vec<Q> {
        self.data.iter().map(|r| r[j].clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.iter().all(|v| v.is_zero()))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j][i] = self.data[i][j].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.data[k][j];
                    if !b.is_zero() {
                        out.data[i][j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        self.data
            .iter()
            .map(|r| {
                r.iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Q::zero(), |s, (a, b)| s + a * b)
            })
            .collect()
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack row counts");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        Matrix { rows: self.rows, cols: self.cols + other.cols, data }
    }

    /// Keep the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix { rows: idx.len(), cols: self.cols, data: idx.iter().map(|&i| self.data[i].clone()).collect() }
    }

    /// Keep the listed columns, in order.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data: self.data.iter().map(|r| idx.iter().map(|&j| r[j].clone()).collect()).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        rank(self)
    }
}

/// Clear denominators row by row.
fn integer_rows(m: &Matrix) -> Vec<Vec<BigInt>> {
    m.data
        .iter()
        .map(|r| {
            let l = r.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            r.iter().map(|v| v.numer() * (&l / v.denom())).collect()
        })
        .collect()
}

/// Rank by fraction-free (Bareiss) elimination; the pivot is the first
/// nonzero entry in the leftmost column that still has one.
pub fn rank(m: &Matrix) -> usize {
    let mut a = integer_rows(m);
    let (rows, cols) = (m.rows, m.cols);
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Reduced row echelon form and the pivot columns.
pub fn rref(m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut a = m.data.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = Q::one() / &a[r][c];
        for v in a[r].iter_mut().skip(c) {
            *v *= &inv;
        }
        for i in 0..m.rows {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for j in c..m.cols {
                if !a[r][j].is_zero() {
                    let delta = &f * &a[r][j];
                    a[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (Matrix { rows: m.rows, cols: m.cols, data: a }, pivots)
}

/// A basis of `{v : m v = 0}`, one vector per free column.
pub fn kernel(m: &Matrix) -> Vec<Vec<Q>> {
    let (e, pivots) = rref(m);
    let mut out = Vec::new();
    let mut is_pivot = vec![false; m.cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    for free in (0..m.cols).filter(|&j| !is_pivot[j]) {
        let mut v = vec![Q::zero(); m.cols];
        v[free] = Q::one();
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -e.data[r][free].clone();
        }
        out.push(v);
    }
    out
}

/// Some solution of `m x = b`, if one exists.
pub fn solve(m: &Matrix, b: &[Q]) -> Option<Vec<Q>> {
    assert_eq!(m.rows, b.len(), "right-hand side length");
    let aug = m.hstack(&Matrix::from_cols(m.rows, &[b.to_vec()]));
    let (e, pivots) = rref(&aug);
    if pivots.last() == Some(&m.cols) {
        return None;
    }
    let mut x = vec![Q::zero(); m.cols];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = e.data[r][m.cols].clone();
    }
    Some(x)
}

pub fn det(m: &Matrix) -> Q {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    let mut a = m.data.clone();
    let n = m.rows;
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &a[c][c];
            for j in c..n {
                let delta = &f * &a[c][j];
                a[i][j] -= delta;
            }
        }
    }
    d
}

/// Rank of the image of `f` restricted to the span of `z`, modulo the span
/// of `b`: `rank[f·Z | B] − rank B`.
pub fn induced_rank(f: &Matrix, z: &[Vec<Q>], b: &Matrix) -> usize {
    let fz = Matrix::from_cols(f.rows, &z.iter().map(|v| f.mul_vec(v)).collect::<Vec<_>>());
    rank(&fz.hstack(b)) - rank(b)
}

/// Largest absolute entry, for diagnostics.
pub fn max_abs(m: &Matrix) -> Q {
    m.data.iter().flatten().map(|v| v.abs()).fold(Q::zero(), |a, b| if b > a { b } else { a })
}
