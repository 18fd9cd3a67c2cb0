//! Dense matrices over a [`Scalar`] with zero-skipping
//! Gauss–Jordan elimination.
//!
//! Exact rank and kernel computations drive the stabilizer, Casimir and
//! first-Bianchi computations, so elimination skips zero entries aggressively:
//! most matrices that arise here are sparse.

use std::ops::{Index, IndexMut};

use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon<S> {
    pub reduced: Mat<S>,
    pub pivots: Vec<usize>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |r, c| if r == c { S::one() } else { S::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<S>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Mat::from_fn(r, c, |i, j| cols[j][i].clone())
    }

    pub fn diag(entries: &[S]) -> Self {
        let n = entries.len();
        Mat::from_fn(n, n, |r, c| if r == c { entries[r].clone() } else { S::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn mul(&self, o: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, o.rows, "matrix product shape mismatch");
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        out.data[i * o.cols + j] += &a.times(b);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut s = S::zero();
                for (k, x) in v.iter().enumerate() {
                    s.add_product(&self[(i, k)], x);
                }
                s
            })
            .collect()
    }

    pub fn add(&self, o: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "sum shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.plus(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "difference shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.minus(b)).collect(),
        }
    }

    pub fn scale(&self, k: &S) -> Mat<S> {
        self.map(|x| x.times(k))
    }

    pub fn neg(&self) -> Mat<S> {
        self.map(|x| x.negated())
    }

    pub fn transpose(&self) -> Mat<S> {
        Mat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn conj(&self) -> Mat<S> {
        self.map(|x| x.conj())
    }

    pub fn adjoint(&self) -> Mat<S> {
        Mat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> S {
        let mut t = S::zero();
        for i in 0..self.rows.min(self.cols) {
            t += &self[(i, i)];
        }
        t
    }

    /// AB − BA.
    pub fn commutator(&self, o: &Mat<S>) -> Mat<S> {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(S::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn kron(&self, o: &Mat<S>) -> Mat<S> {
        Mat::from_fn(self.rows * o.rows, self.cols * o.cols, |r, c| {
            self[(r / o.rows, c / o.cols)].times(&o[(r % o.rows, c % o.cols)])
        })
    }

    /// Block-diagonal matrix diag(A, B).
    pub fn block_diag(a: &Mat<S>, b: &Mat<S>) -> Mat<S> {
        Mat::from_fn(a.rows + b.rows, a.cols + b.cols, |r, c| {
            match (r < a.rows, c < a.cols) {
                (true, true) => a[(r, c)].clone(),
                (false, false) => b[(r - a.rows, c - a.cols)].clone(),
                _ => S::zero(),
            }
        })
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn vstack(parts: &[&Mat<S>]) -> Mat<S> {
        let cols = parts.first().map_or(0, |m| m.cols);
        assert!(parts.iter().all(|m| m.cols == cols), "vstack column mismatch");
        let mut data = Vec::new();
        for m in parts {
            data.extend(m.data.iter().cloned());
        }
        Mat { rows: data.len() / cols.max(1), cols, data }
    }

    /// Largest entry magnitude (used as the scale for float pivoting).
    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(S::magnitude).fold(0.0, f64::max)
    }

    /// Gauss–Jordan elimination to reduced row echelon form.
    pub fn echelon(&self) -> Echelon<S> {
        let scale = if S::EXACT { 0.0 } else { self.max_magnitude() };
        let mut m = self.clone();
        let (rows, cols) = (m.rows, m.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let pick = if S::EXACT {
                (r..rows).find(|&i| !m[(i, c)].is_zero())
            } else {
                (r..rows)
                    .filter(|&i| !m[(i, c)].negligible(scale))
                    .max_by(|&i, &j| m[(i, c)].magnitude().total_cmp(&m[(j, c)].magnitude()))
            };
            let Some(p) = pick else {
                if !S::EXACT {
                    for i in r..rows {
                        m[(i, c)] = S::zero();
                    }
                }
                continue;
            };
            if p != r {
                for j in 0..cols {
                    m.data.swap(p * cols + j, r * cols + j);
                }
            }
            let inv = m[(r, c)].inv().expect("pivot is nonzero");
            let support: Vec<usize> = (c..cols).filter(|&j| !m[(r, j)].is_zero()).collect();
            for &j in &support {
                m[(r, j)] = m[(r, j)].times(&inv);
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let f = m[(i, c)].clone();
                if f.is_zero() {
                    continue;
                }
                for &j in &support {
                    let t = f.times(&m[(r, j)]);
                    m.data[i * cols + j] -= &t;
                }
                m[(i, c)] = S::zero();
            }
            pivots.push(c);
            r += 1;
        }
        Echelon { reduced: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Basis of the right kernel {v : Av = 0}.
    pub fn nullspace(&self) -> Vec<Vec<S>> {
        let Echelon { reduced, pivots } = self.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (k, &pc) in pivots.iter().enumerate() {
                    v[pc] = reduced[(k, f)].negated();
                }
                v
            })
            .collect()
    }

    /// A particular solution of Ax = b (free variables set to zero).
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        assert_eq!(b.len(), self.rows, "right-hand side length mismatch");
        let aug = Mat::from_fn(self.rows, self.cols + 1, |r, c| {
            if c < self.cols {
                self[(r, c)].clone()
            } else {
                b[r].clone()
            }
        });
        let Echelon { reduced, pivots } = aug.echelon();
        if pivots.last() == Some(&self.cols) {
            return Err(Error::Inconsistent(format!(
                "{}×{} system has no solution",
                self.rows, self.cols
            )));
        }
        let mut x = vec![S::zero(); self.cols];
        for (k, &pc) in pivots.iter().enumerate() {
            x[pc] = reduced[(k, self.cols)].clone();
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Mat<S>> {
        if !self.is_square() {
            return Err(Error::Shape(format!("inverse of {}×{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let aug = Mat::from_fn(n, 2 * n, |r, c| {
            if c < n {
                self[(r, c)].clone()
            } else if c - n == r {
                S::one()
            } else {
                S::zero()
            }
        });
        let Echelon { reduced, pivots } = aug.echelon();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        Ok(Mat::from_fn(n, n, |r, c| reduced[(r, c + n)].clone()))
    }
}

/// Dimension of the span of the given vectors.
pub fn span_rank<S: Scalar>(vectors: &[Vec<S>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Mat::from_rows(vectors.to_vec()).rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Exact, Float};

    fn q(n: i64) -> Exact {
        Exact::from_i64(n)
    }

    #[test]
    fn inverse_round_trip() {
        let a = Mat::from_rows(vec![
            vec![q(2), q(1), q(0)],
            vec![q(0), q(1), Exact::i()],
            vec![Exact::sqrt3(), q(0), q(1)],
        ]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Mat::identity(3));
    }

    #[test]
    fn singular_inverse_errors() {
        let a = Mat::from_rows(vec![vec![q(1), q(2)], vec![q(2), q(4)]]);
        assert!(matches!(a.inverse(), Err(Error::Singular)));
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        let a = Mat::from_rows(vec![
            vec![q(1), q(2), q(3), q(4)],
            vec![q(2), q(4), q(6), q(8)],
            vec![q(0), q(1), Exact::i(), q(0)],
        ]);
        let ker = a.nullspace();
        assert_eq!(ker.len(), 2);
        for v in ker {
            assert!(a.mul_vec(&v).iter().all(Scalar::is_zero));
        }
    }

    #[test]
    fn inconsistent_system_is_reported() {
        let a = Mat::from_rows(vec![vec![q(1), q(1)], vec![q(1), q(1)]]);
        assert!(a.solve(&[q(1), q(2)]).is_err());
        let x = a.solve(&[q(3), q(3)]).unwrap();
        assert_eq!(a.mul_vec(&x), vec![q(3), q(3)]);
    }

    #[test]
    fn float_rank_uses_tolerance() {
        let a = Mat::from_rows(vec![
            vec![Float::new(1.0, 0.0), Float::new(2.0, 0.0)],
            vec![Float::new(2.0, 0.0), Float::new(4.0 + 1e-14, 0.0)],
        ]);
        assert_eq!(a.rank(), 1);
    }
}
