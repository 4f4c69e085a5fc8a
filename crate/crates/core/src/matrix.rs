use std::fmt;
use std::ops::Index;

use thiserror::Error;

use crate::scalar::{LiteralError, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {dim}")]
    Ragged { row: usize, len: usize, dim: usize },
    #[error(transparent)]
    Literal(#[from] LiteralError),
}

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        SquareMatrix { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, MatrixError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(MatrixError::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(MatrixError::Ragged {
                    row,
                    len: r.len(),
                    dim,
                });
            }
            data.extend(r);
        }
        Ok(SquareMatrix { dim, data })
    }

    /// Builds a matrix from number literals (`"0.75"`, `"3/4"`).
    pub fn parse_rows<T: AsRef<str>>(rows: &[Vec<T>]) -> Result<Self, MatrixError> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| S::parse_literal(s.as_ref())).collect())
            .collect::<Result<Vec<Vec<S>>, _>>()?;
        Self::from_rows(parsed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks(self.dim)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            (0..n).fold(S::zero(), |acc, l| {
                acc + self.get(i, l).clone() * rhs.get(l, j).clone()
            })
        })
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.dim, v.len(), "dimension mismatch");
        self.rows()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SquareMatrix<T> {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Row-major array of number strings; `parse_rows` reads it back exactly.
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        self.rows()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect()
    }
}

impl<S> Index<(usize, usize)> for SquareMatrix<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.dim + j]
    }
}

impl<S: fmt::Debug> fmt::Debug for SquareMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim.max(1))).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let err = SquareMatrix::<f64>::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, MatrixError::Ragged { row: 1, .. }));
        assert!(matches!(
            SquareMatrix::<f64>::from_rows(vec![]),
            Err(MatrixError::Empty)
        ));
    }

    #[test]
    fn multiplication() {
        let a = SquareMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = a.mul(&SquareMatrix::identity(2));
        assert_eq!(a, b);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(*a.mul(&a).get(0, 1), 10.0);
    }
}
