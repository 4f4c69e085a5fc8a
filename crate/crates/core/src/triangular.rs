//! Closed-form powers of upper-triangular transition kernels.
//!
//! For an upper-triangular `R` whose diagonal entries are pairwise distinct,
//! every entry of `R^t` is a mixture of diagonal powers:
//!
//! ```text
//! (R^t)[i][j] = sum_{k=i..=j} p[i][j][k] * r[k][k]^(t-1),   t >= 1
//! ```
//!
//! The power factors `p` are defined by the recursion
//!
//! ```text
//! p[j][j][j] = r[j][j]
//! p[i][j][k] = 0                                                  k < i or k > j
//! p[i][j][k] = sum_{l=k..j-1} p[i][l][k] * r[l][j] / (r[k][k] - r[j][j])   i <= k < j
//! p[i][j][j] = r[i][j] - sum_{l=i..j-1} p[i][j][l]                  i < j
//! ```
//!
//! Only diagonal *differences* are ever divided by, so singular kernels (a zero
//! on the diagonal) are fine as long as `0^0 = 1`.
//!
//! Indices in this module are 0-based; user-facing messages number states from 1.

use std::fmt;

use thiserror::Error;

use crate::matrix::SquareMatrix;
use crate::scalar::{powu, Scalar};

/// Default minimum gap between any two diagonal entries.
pub const DEFAULT_DIAGONAL_TOLERANCE: f64 = 1e-9;

/// Slack allowed on probability bounds and column sums.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BelowDiagonal { row: usize, col: usize, value: f64 },
    OutOfRange { row: usize, col: usize, value: f64 },
    ColumnSum { col: usize, sum: f64 },
    DiagonalCollision { first: usize, second: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::BelowDiagonal { row, col, value } => write!(
                f,
                "entry ({}, {}) = {value} lies below the diagonal but is nonzero",
                row + 1,
                col + 1
            ),
            Violation::OutOfRange { row, col, value } => write!(
                f,
                "entry ({}, {}) = {value} is not a probability",
                row + 1,
                col + 1
            ),
            Violation::ColumnSum { col, sum } => {
                write!(f, "column {} sums to {sum} > 1", col + 1)
            }
            Violation::DiagonalCollision {
                first,
                second,
                value,
            } => write!(
                f,
                "states {} and {} share the diagonal value {value}",
                first + 1,
                second + 1
            ),
        }
    }
}

/// Every invariant a kernel violates; empty when the kernel is usable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn diagonal_collisions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.violations.iter().filter_map(|v| match *v {
            Violation::DiagonalCollision { first, second, .. } => Some((first, second)),
            _ => None,
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid transition kernel: {0}")]
    Invalid(ValidationReport),
    #[error("index ({row}, {col}) out of range for a {dim}x{dim} kernel")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },
}

/// Checks triangularity, probability ranges, substochastic columns and
/// pairwise-distinct diagonal entries.
pub fn validate_kernel<S: Scalar>(m: &SquareMatrix<S>, diagonal_tolerance: f64) -> ValidationReport {
    let n = m.dim();
    let one = S::one();
    let slack = S::from_f64(PROBABILITY_TOLERANCE);
    let mut violations = Vec::new();

    for i in 0..n {
        for j in 0..n {
            let x = m.get(i, j);
            if i > j && !x.is_zero() {
                violations.push(Violation::BelowDiagonal {
                    row: i,
                    col: j,
                    value: x.to_f64(),
                });
            } else if *x < -slack.clone() || *x > one.clone() + slack.clone() {
                violations.push(Violation::OutOfRange {
                    row: i,
                    col: j,
                    value: x.to_f64(),
                });
            }
        }
    }

    for j in 0..n {
        let sum = (0..n).fold(S::zero(), |acc, i| acc + m.get(i, j).clone());
        if sum > one.clone() + slack.clone() {
            violations.push(Violation::ColumnSum {
                col: j,
                sum: sum.to_f64(),
            });
        }
    }

    let gap = S::from_f64(diagonal_tolerance);
    for a in 0..n {
        for b in a + 1..n {
            let d = (m.get(a, a).clone() - m.get(b, b).clone()).abs();
            if d <= gap {
                violations.push(Violation::DiagonalCollision {
                    first: a,
                    second: b,
                    value: m.get(a, a).to_f64(),
                });
            }
        }
    }

    ValidationReport { violations }
}

/// Upper-triangular substochastic kernel over the non-optimal states.
///
/// Column `j` holds the transition probabilities out of state `j`; the column
/// deficit is the one-step probability of reaching the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularKernel<S> {
    matrix: SquareMatrix<S>,
}

impl<S: Scalar> TriangularKernel<S> {
    pub fn new(matrix: SquareMatrix<S>) -> Result<Self, KernelError> {
        Self::with_tolerance(matrix, DEFAULT_DIAGONAL_TOLERANCE)
    }

    pub fn with_tolerance(matrix: SquareMatrix<S>, diagonal_tolerance: f64) -> Result<Self, KernelError> {
        let report = validate_kernel(&matrix, diagonal_tolerance);
        if report.is_valid() {
            Ok(TriangularKernel { matrix })
        } else {
            Err(KernelError::Invalid(report))
        }
    }

    /// Wraps a matrix already known to satisfy every kernel invariant.
    pub(crate) fn from_valid(matrix: SquareMatrix<S>) -> Self {
        debug_assert!(validate_kernel(&matrix, 0.0).is_valid());
        TriangularKernel { matrix }
    }

    pub(crate) fn convert<T: Scalar>(&self) -> TriangularKernel<T> {
        TriangularKernel {
            matrix: self.matrix.map(crate::scalar::convert),
        }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, crate::Error> {
        Ok(Self::new(SquareMatrix::from_rows(rows)?)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> &S {
        self.matrix.get(i, j)
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.dim()).map(|k| self.entry(k, k).clone()).collect()
    }

    pub fn matrix(&self) -> &SquareMatrix<S> {
        &self.matrix
    }

    /// Probability of jumping from state `j` straight to the optimum.
    pub fn escape_probability(&self, j: usize) -> S {
        (0..=j).fold(S::one(), |acc, i| acc - self.entry(i, j).clone())
    }

    /// `q_{t} = R q_{t-1}` without touching the zero lower triangle.
    pub fn apply(&self, q: &[S]) -> Vec<S> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (i..n).fold(S::zero(), |acc, j| {
                    acc + self.entry(i, j).clone() * q[j].clone()
                })
            })
            .collect()
    }
}

/// Multiplication and division tally for the instrumented routines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: u64,
    pub divisions: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.multiplications + self.divisions
    }
}

/// The tensor `p[i][j][k]`, together with the kernel diagonal it expands in.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFactors<S> {
    dim: usize,
    diagonal: Vec<S>,
    data: Vec<S>,
}

impl<S: Scalar> PowerFactors<S> {
    fn zeros(diagonal: Vec<S>) -> Self {
        let dim = diagonal.len();
        PowerFactors {
            dim,
            diagonal,
            data: vec![S::zero(); dim * dim * dim],
        }
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues of the kernel, in state order.
    pub fn diagonal(&self) -> &[S] {
        &self.diagonal
    }

    pub fn factor(&self, i: usize, j: usize, k: usize) -> &S {
        &self.data[self.idx(i, j, k)]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, v: S) {
        let at = self.idx(i, j, k);
        self.data[at] = v;
    }

    /// `[p[i][j][k]]` for fixed `i`, rows `k`, columns `j`.
    pub fn slab(&self, i: usize) -> SquareMatrix<S> {
        SquareMatrix::from_fn(self.dim, |k, j| self.factor(i, j, k).clone())
    }

    fn check(&self, i: usize, j: usize) -> Result<(), KernelError> {
        if i >= self.dim || j >= self.dim {
            Err(KernelError::IndexOutOfRange {
                row: i,
                col: j,
                dim: self.dim,
            })
        } else {
            Ok(())
        }
    }

    /// Entry `(i, j)` of `R^t`. `t = 0` gives the identity.
    pub fn power_entry(&self, i: usize, j: usize, t: u64) -> Result<S, KernelError> {
        self.check(i, j)?;
        if t == 0 {
            return Ok(if i == j { S::one() } else { S::zero() });
        }
        if i > j {
            return Ok(S::zero());
        }
        Ok((i..=j).fold(S::zero(), |acc, k| {
            acc + self.factor(i, j, k).clone() * powu(&self.diagonal[k], t - 1)
        }))
    }

    pub fn kernel_power(&self, t: u64) -> SquareMatrix<S> {
        if t == 0 {
            return SquareMatrix::identity(self.dim);
        }
        let powers: Vec<S> = self.diagonal.iter().map(|d| powu(d, t - 1)).collect();
        SquareMatrix::from_fn(self.dim, |i, j| {
            if i > j {
                S::zero()
            } else {
                (i..=j).fold(S::zero(), |acc, k| {
                    acc + self.factor(i, j, k).clone() * powers[k].clone()
                })
            }
        })
    }

    /// Iterator over `(R^t)[i][j]` for `t = 1, 2, ...`, one mixture evaluation
    /// and one power update per step.
    pub fn entry_series(&self, i: usize, j: usize) -> Result<EntrySeries<S>, KernelError> {
        self.check(i, j)?;
        let terms: Vec<(S, S)> = if i > j {
            Vec::new()
        } else {
            (i..=j)
                .map(|k| (self.factor(i, j, k).clone(), self.diagonal[k].clone()))
                .collect()
        };
        let powers = vec![S::one(); terms.len()];
        Ok(EntrySeries { terms, powers })
    }
}

/// Streaming evaluation of one entry of successive kernel powers.
#[derive(Debug, Clone)]
pub struct EntrySeries<S> {
    terms: Vec<(S, S)>,
    powers: Vec<S>,
}

impl<S: Scalar> EntrySeries<S> {
    /// Next entry value; the per-step cost is at most `2L` multiplications.
    pub fn next_counted(&mut self, ops: &mut OpCount) -> S {
        let mut value = S::zero();
        for ((p, lambda), pow) in self.terms.iter().zip(self.powers.iter_mut()) {
            value = value + p.clone() * pow.clone();
            *pow = pow.clone() * lambda.clone();
            ops.multiplications += 2;
        }
        value
    }
}

impl<S: Scalar> Iterator for EntrySeries<S> {
    type Item = S;

    fn next(&mut self) -> Option<S> {
        Some(self.next_counted(&mut OpCount::default()))
    }
}

pub fn compute_power_factors<S: Scalar>(kernel: &TriangularKernel<S>) -> PowerFactors<S> {
    compute_power_factors_counted(kernel, &mut OpCount::default())
}

/// Power factors in `O(L^3)` multiplications and divisions.
///
/// For fixed `k`, the recursion for `p[i][j][k]` in `j > k` is linear with
/// coefficients that do not depend on `i`, so `p[i][j][k] = p[i][k][k] * g[k][j]`
/// where `g[k][k] = 1` and
/// `g[k][j] = sum_{l=k..j-1} g[k][l] * r[l][j] / (r[k][k] - r[j][j])`.
/// `g` is computed once; each factor then costs a single multiplication.
/// Schedule: `i` outer, `j` ascending, `k` ascending.
pub fn compute_power_factors_counted<S: Scalar>(
    kernel: &TriangularKernel<S>,
    ops: &mut OpCount,
) -> PowerFactors<S> {
    let n = kernel.dim();
    let r = |i: usize, j: usize| kernel.entry(i, j).clone();

    let mut growth = SquareMatrix::<S>::zeros(n);
    for k in 0..n {
        growth.set(k, k, S::one());
        for j in k + 1..n {
            let mut acc = S::zero();
            for l in k..j {
                acc = acc + growth.get(k, l).clone() * r(l, j);
                ops.multiplications += 1;
            }
            growth.set(k, j, acc / (r(k, k) - r(j, j)));
            ops.divisions += 1;
        }
    }

    let mut p = PowerFactors::zeros(kernel.diagonal());
    for i in 0..n {
        p.set(i, i, i, r(i, i));
        for j in i + 1..n {
            let mut lower = S::zero();
            for k in i..j {
                let v = p.factor(i, k, k).clone() * growth.get(k, j).clone();
                ops.multiplications += 1;
                lower = lower + v.clone();
                p.set(i, j, k, v);
            }
            p.set(i, j, j, r(i, j) - lower);
        }
    }
    p
}

/// Power factors by the defining recursion, term for term (`O(L^4)`).
///
/// Kept as an independent reference for [`compute_power_factors`].
pub fn reference_power_factors<S: Scalar>(
    kernel: &TriangularKernel<S>,
    ops: &mut OpCount,
) -> PowerFactors<S> {
    let n = kernel.dim();
    let r = |i: usize, j: usize| kernel.entry(i, j).clone();
    let mut p = PowerFactors::zeros(kernel.diagonal());
    for i in 0..n {
        p.set(i, i, i, r(i, i));
        for j in i + 1..n {
            let mut lower = S::zero();
            for k in i..j {
                let mut acc = S::zero();
                for l in k..j {
                    acc = acc + p.factor(i, l, k).clone() * r(l, j);
                    ops.multiplications += 1;
                }
                let v = acc / (r(k, k) - r(j, j));
                ops.divisions += 1;
                lower = lower + v.clone();
                p.set(i, j, k, v);
            }
            p.set(i, j, j, r(i, j) - lower);
        }
    }
    p
}

/// `R^t` by repeated multiplication; the identity for `t = 0`.
pub fn brute_force_power<S: Scalar>(m: &SquareMatrix<S>, t: u64) -> SquareMatrix<S> {
    let mut acc = SquareMatrix::identity(m.dim());
    for _ in 0..t {
        acc = acc.mul(m);
    }
    acc
}
