//! Fitness-level problems: kernel, fitness errors, optimum and initial mass.
//!
//! States are numbered by distance to the optimum. For bitstring problems the
//! state of `x` is its number of zero bits, so state 0 is the all-ones optimum
//! and the modelled non-optimal states are levels `1..=n`, stored at indices
//! `0..n`. Fitness errors therefore increase with the index.

use std::fmt;

use thiserror::Error;

use crate::matrix::SquareMatrix;
use crate::scalar::{convert, powu, Scalar};
use crate::triangular::{KernelError, TriangularKernel, DEFAULT_DIAGONAL_TOLERANCE, PROBABILITY_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("fitness error of state {state} is {value}, must be positive")]
    NonPositiveError { state: usize, value: f64 },
    #[error("fitness errors must be nondecreasing: state {state} has a smaller error than state {}", state - 1)]
    UnsortedErrors { state: usize },
    #[error("initial mass of state {state} is negative")]
    NegativeMass { state: usize },
    #[error("initial mass sums to {total} > 1")]
    MassExceedsOne { total: f64 },
    #[error("level fitness must strictly decrease with the number of zero bits; levels {level} and {} violate this", level + 1)]
    NotMonotone { level: usize },
    #[error("custom fitness table has {found} levels, expected n + 1 = {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("bitstring length must be at least 1")]
    EmptyBitstring,
    #[error("mutation rate {0} is outside (0, 1)")]
    MutationRate(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Level-based fitness: a function of the number of one bits only.
#[derive(Debug, Clone, PartialEq)]
pub enum FitnessFamily<S> {
    /// `f(x) = |x|`
    OneMax,
    /// `f(x) = |x|^2`
    Square,
    /// `f(x) = ln(|x| + 1)`
    Log,
    /// Fitness per level, indexed by number of zero bits `0..=n`.
    Custom(Vec<S>),
}

impl<S: Scalar> FitnessFamily<S> {
    /// Fitness of a string with `zeros` zero bits out of `n`.
    pub fn level_fitness(&self, n: usize, zeros: usize) -> S {
        let ones = n - zeros;
        match self {
            FitnessFamily::OneMax => S::from_usize(ones),
            FitnessFamily::Square => S::from_usize(ones * ones),
            FitnessFamily::Log => S::from_f64(((ones + 1) as f64).ln()),
            FitnessFamily::Custom(table) => table[zeros].clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FitnessFamily::OneMax => "onemax",
            FitnessFamily::Square => "square",
            FitnessFamily::Log => "log",
            FitnessFamily::Custom(_) => "custom",
        }
    }

    /// Checks `n >= 1` and, for custom tables, length and strict decrease.
    pub fn validate(&self, n: usize) -> Result<(), ProblemError> {
        if n == 0 {
            return Err(ProblemError::EmptyBitstring);
        }
        if let FitnessFamily::Custom(table) = self {
            if table.len() != n + 1 {
                return Err(ProblemError::TableLength {
                    expected: n + 1,
                    found: table.len(),
                });
            }
            if let Some(level) = table.windows(2).position(|w| w[0] <= w[1]) {
                return Err(ProblemError::NotMonotone { level });
            }
        }
        Ok(())
    }

    pub fn convert<T: Scalar>(&self) -> FitnessFamily<T> {
        match self {
            FitnessFamily::OneMax => FitnessFamily::OneMax,
            FitnessFamily::Square => FitnessFamily::Square,
            FitnessFamily::Log => FitnessFamily::Log,
            FitnessFamily::Custom(t) => FitnessFamily::Custom(t.iter().map(convert).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mutation<S> {
    /// Flip exactly one uniformly chosen bit.
    OneBit,
    /// Flip each bit independently with the given probability.
    Bitwise(S),
}

impl<S: Scalar> Mutation<S> {
    pub fn convert<T: Scalar>(&self) -> Mutation<T> {
        match self {
            Mutation::OneBit => Mutation::OneBit,
            Mutation::Bitwise(p) => Mutation::Bitwise(convert(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialDistribution<S> {
    /// All mass on the state farthest from the optimum.
    Worst,
    /// Equal mass on every non-optimal state.
    Uniform,
    Explicit(Vec<S>),
}

impl<S: Scalar> InitialDistribution<S> {
    pub fn resolve(&self, dim: usize) -> Vec<S> {
        match self {
            InitialDistribution::Worst => {
                let mut q = vec![S::zero(); dim];
                q[dim - 1] = S::one();
                q
            }
            InitialDistribution::Uniform => vec![S::from_ratio(1, dim as i64); dim],
            InitialDistribution::Explicit(q) => q.clone(),
        }
    }
}

/// A fitness-level model of a (1+1) strictly elitist EA.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelProblem<S> {
    kernel: TriangularKernel<S>,
    errors: Vec<S>,
    f_opt: S,
    q0: Vec<S>,
    label: String,
}

impl<S: Scalar> LevelProblem<S> {
    pub fn new(
        kernel: TriangularKernel<S>,
        errors: Vec<S>,
        f_opt: S,
        q0: Vec<S>,
        label: impl Into<String>,
    ) -> Result<Self, ProblemError> {
        let dim = kernel.dim();
        check_errors(&errors, dim)?;
        check_mass(&q0, dim)?;
        Ok(LevelProblem {
            kernel,
            errors,
            f_opt,
            q0,
            label: label.into(),
        })
    }

    /// Assembles a problem from raw data with the default diagonal tolerance.
    pub fn from_explicit(
        matrix: SquareMatrix<S>,
        errors: Vec<S>,
        f_opt: S,
        q0: Vec<S>,
    ) -> Result<Self, ProblemError> {
        Self::from_explicit_with_tolerance(matrix, errors, f_opt, q0, DEFAULT_DIAGONAL_TOLERANCE)
    }

    pub fn from_explicit_with_tolerance(
        matrix: SquareMatrix<S>,
        errors: Vec<S>,
        f_opt: S,
        q0: Vec<S>,
        diagonal_tolerance: f64,
    ) -> Result<Self, ProblemError> {
        let kernel = TriangularKernel::with_tolerance(matrix, diagonal_tolerance)?;
        Self::new(kernel, errors, f_opt, q0, "explicit")
    }

    pub fn kernel(&self) -> &TriangularKernel<S> {
        &self.kernel
    }

    pub fn errors(&self) -> &[S] {
        &self.errors
    }

    pub fn f_opt(&self) -> &S {
        &self.f_opt
    }

    pub fn q0(&self) -> &[S] {
        &self.q0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Fitness of non-optimal state `s` (0-based).
    pub fn state_fitness(&self, s: usize) -> S {
        self.f_opt.clone() - self.errors[s].clone()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_initial(self, initial: &InitialDistribution<S>) -> Result<Self, ProblemError> {
        let q0 = initial.resolve(self.dim());
        check_mass(&q0, self.dim())?;
        Ok(LevelProblem { q0, ..self })
    }

    pub fn convert<T: Scalar>(&self) -> LevelProblem<T> {
        LevelProblem {
            kernel: self.kernel.convert(),
            errors: self.errors.iter().map(convert).collect(),
            f_opt: convert(&self.f_opt),
            q0: self.q0.iter().map(convert).collect(),
            label: self.label.clone(),
        }
    }
}

impl<S: Scalar> fmt::Display for LevelProblem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (L = {}, f_opt = {})", self.label, self.dim(), self.f_opt)
    }
}

fn check_errors<S: Scalar>(errors: &[S], dim: usize) -> Result<(), ProblemError> {
    if errors.len() != dim {
        return Err(ProblemError::DimensionMismatch {
            what: "error vector",
            expected: dim,
            found: errors.len(),
        });
    }
    for (s, e) in errors.iter().enumerate() {
        if *e <= S::zero() {
            return Err(ProblemError::NonPositiveError {
                state: s + 1,
                value: e.to_f64(),
            });
        }
        if s > 0 && *e < errors[s - 1] {
            return Err(ProblemError::UnsortedErrors { state: s + 1 });
        }
    }
    Ok(())
}

fn check_mass<S: Scalar>(q0: &[S], dim: usize) -> Result<(), ProblemError> {
    if q0.len() != dim {
        return Err(ProblemError::DimensionMismatch {
            what: "initial distribution",
            expected: dim,
            found: q0.len(),
        });
    }
    if let Some(s) = q0.iter().position(|q| *q < S::zero()) {
        return Err(ProblemError::NegativeMass { state: s + 1 });
    }
    let total = q0.iter().fold(S::zero(), |a, q| a + q.clone());
    if total > S::one() + S::from_f64(PROBABILITY_TOLERANCE) {
        return Err(ProblemError::MassExceedsOne {
            total: total.to_f64(),
        });
    }
    Ok(())
}

fn binomial<S: Scalar>(n: usize, k: usize) -> S {
    if k > n {
        return S::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(S::one(), |acc, m| {
        acc * S::from_usize(n - m) / S::from_usize(m + 1)
    })
}

/// Level transition matrix of a (1+1) strictly elitist EA on an `n`-bit
/// string, for any level-based fitness that strictly prefers more one bits.
pub fn level_chain_matrix<S: Scalar>(
    n: usize,
    mutation: &Mutation<S>,
) -> Result<SquareMatrix<S>, ProblemError> {
    if n == 0 {
        return Err(ProblemError::EmptyBitstring);
    }
    match mutation {
        Mutation::OneBit => Ok(SquareMatrix::from_fn(n, |i, j| {
            // index s holds level s + 1
            let level = j + 1;
            if i == j {
                S::one() - S::from_ratio(level as i64, n as i64)
            } else if i + 1 == j {
                S::from_ratio(level as i64, n as i64)
            } else {
                S::zero()
            }
        })),
        Mutation::Bitwise(p) => {
            if !(*p > S::zero() && *p < S::one()) {
                return Err(ProblemError::MutationRate(p.to_f64()));
            }
            Ok(bitwise_matrix(n, p))
        }
    }
}

/// Probability that bitwise mutation turns `from` zero bits into `to` zero
/// bits (`to < from`): `a = from - to + b` zeros flip while `b` ones flip.
fn bitwise_improvement<S: Scalar>(n: usize, from: usize, to: usize, p: &S) -> S {
    let keep = S::one() - p.clone();
    let ones = n - from;
    (0..=to.min(ones)).fold(S::zero(), |acc, b| {
        let a = from - to + b;
        let zeros_part = binomial::<S>(from, a) * powu(p, a as u64) * powu(&keep, (from - a) as u64);
        let ones_part = binomial::<S>(ones, b) * powu(p, b as u64) * powu(&keep, (ones - b) as u64);
        acc + zeros_part * ones_part
    })
}

fn bitwise_matrix<S: Scalar>(n: usize, p: &S) -> SquareMatrix<S> {
    let mut m = SquareMatrix::zeros(n);
    for j in 0..n {
        let from = j + 1;
        let mut leaving = bitwise_improvement(n, from, 0, p);
        for i in 0..j {
            let r = bitwise_improvement(n, from, i + 1, p);
            leaving = leaving + r.clone();
            m.set(i, j, r);
        }
        m.set(j, j, S::one() - leaving);
    }
    m
}

/// Builds the level problem for a bitstring family under the given mutation.
pub fn level_chain<S: Scalar>(
    family: &FitnessFamily<S>,
    n: usize,
    mutation: &Mutation<S>,
    diagonal_tolerance: f64,
) -> Result<LevelProblem<S>, ProblemError> {
    family.validate(n)?;
    let matrix = level_chain_matrix(n, mutation)?;
    let kernel = TriangularKernel::with_tolerance(matrix, diagonal_tolerance)?;
    let f_opt = family.level_fitness(n, 0);
    let errors = (1..=n)
        .map(|level| f_opt.clone() - family.level_fitness(n, level))
        .collect();
    let q0 = InitialDistribution::Worst.resolve(n);
    let label = match mutation {
        Mutation::OneBit => format!("{}-n{n}-onebit", family.name()),
        Mutation::Bitwise(p) => format!("{}-n{n}-bitwise-{p}", family.name()),
    };
    LevelProblem::new(kernel, errors, f_opt, q0, label)
}

/// Onebit mutation (randomised local search): `r[j-1][j] = j/n`,
/// `r[j][j] = 1 - j/n` in level numbering. Starts from the all-zeros string.
pub fn onebit_level_chain<S: Scalar>(
    family: &FitnessFamily<S>,
    n: usize,
) -> Result<LevelProblem<S>, ProblemError> {
    level_chain(family, n, &Mutation::OneBit, DEFAULT_DIAGONAL_TOLERANCE)
}

/// Standard bitwise mutation with rate `p_mut`. Offspring of equal or worse
/// fitness are rejected, so all non-improving mass stays on the diagonal.
pub fn bitwise_level_chain<S: Scalar>(
    family: &FitnessFamily<S>,
    n: usize,
    p_mut: S,
) -> Result<LevelProblem<S>, ProblemError> {
    level_chain(family, n, &Mutation::Bitwise(p_mut), DEFAULT_DIAGONAL_TOLERANCE)
}

/// Bidiagonal kernel `S` with the diagonal of `R` and superdiagonal
/// `s[j-1][j] = 1 - r[j][j]`: each state can only move one level closer.
pub fn bound_kernel<S: Scalar>(kernel: &TriangularKernel<S>) -> TriangularKernel<S> {
    let n = kernel.dim();
    let m = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            kernel.entry(i, i).clone()
        } else if i + 1 == j {
            S::one() - kernel.entry(j, j).clone()
        } else {
            S::zero()
        }
    });
    TriangularKernel::from_valid(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn worked_kernel() -> SquareMatrix<BigRational> {
        SquareMatrix::parse_rows(&[
            vec!["3/4", "1/2", "0", "0"],
            vec!["0", "1/2", "3/4", "0"],
            vec!["0", "0", "1/4", "1"],
            vec!["0", "0", "0", "0"],
        ])
        .unwrap()
    }

    #[test]
    fn onemax_n4_is_worked_kernel() {
        let p = onebit_level_chain::<BigRational>(&FitnessFamily::OneMax, 4).unwrap();
        assert_eq!(*p.kernel().matrix(), worked_kernel());
        assert_eq!(p.errors(), &[q(1, 1), q(2, 1), q(3, 1), q(4, 1)]);
        assert_eq!(*p.f_opt(), q(4, 1));
        assert_eq!(p.q0(), &[q(0, 1), q(0, 1), q(0, 1), q(1, 1)]);
    }

    #[test]
    fn log_n4_errors() {
        let p = onebit_level_chain::<f64>(&FitnessFamily::Log, 4).unwrap();
        let l5 = 5f64.ln();
        let expect = [l5 - 4f64.ln(), l5 - 3f64.ln(), l5 - 2f64.ln(), l5];
        for (a, b) in p.errors().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(*p.kernel().matrix(), worked_kernel().map(|x| x.to_f64()));
    }

    #[test]
    fn square_n4_errors() {
        let p = onebit_level_chain::<BigRational>(&FitnessFamily::Square, 4).unwrap();
        assert_eq!(p.errors(), &[q(7, 1), q(12, 1), q(15, 1), q(16, 1)]);
        assert_eq!(*p.f_opt(), q(16, 1));
    }

    #[test]
    fn single_bit_chain() {
        let p = onebit_level_chain::<f64>(&FitnessFamily::OneMax, 1).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(*p.kernel().entry(0, 0), 0.0);
        assert_eq!(p.errors(), &[1.0]);
        assert!(matches!(
            onebit_level_chain::<f64>(&FitnessFamily::OneMax, 0),
            Err(ProblemError::EmptyBitstring)
        ));
    }

    #[test]
    fn bitwise_two_bits_half_rate() {
        let p = bitwise_level_chain(&FitnessFamily::<BigRational>::OneMax, 2, q(1, 2)).unwrap();
        let expect = SquareMatrix::from_rows(vec![vec![q(3, 4), q(1, 2)], vec![q(0, 1), q(1, 4)]]).unwrap();
        assert_eq!(*p.kernel().matrix(), expect);
    }

    #[test]
    fn bitwise_one_bit() {
        let p = bitwise_level_chain(&FitnessFamily::<f64>::OneMax, 1, 0.3).unwrap();
        assert!((p.kernel().entry(0, 0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn bitwise_rejects_bad_rate() {
        for rate in [0.0, 1.0, -0.1, 1.5] {
            assert!(matches!(
                bitwise_level_chain(&FitnessFamily::<f64>::OneMax, 3, rate),
                Err(ProblemError::MutationRate(_))
            ));
        }
    }

    #[test]
    fn custom_table_must_decrease() {
        let bad = FitnessFamily::Custom(vec![3.0, 2.0, 2.0]);
        assert!(matches!(
            onebit_level_chain(&bad, 2),
            Err(ProblemError::NotMonotone { level: 1 })
        ));
        let short = FitnessFamily::Custom(vec![3.0, 2.0]);
        assert!(matches!(
            onebit_level_chain(&short, 2),
            Err(ProblemError::TableLength { .. })
        ));
        let ok = FitnessFamily::Custom(vec![10.0, 4.0, 1.0]);
        let p = onebit_level_chain(&ok, 2).unwrap();
        assert_eq!(p.errors(), &[6.0, 9.0]);
    }

    #[test]
    fn explicit_problem_checks() {
        let m = worked_kernel();
        let e = vec![q(1, 1), q(2, 1), q(3, 1), q(4, 1)];
        let q0 = vec![q(0, 1), q(0, 1), q(0, 1), q(1, 1)];
        assert!(LevelProblem::from_explicit(m.clone(), e.clone(), q(4, 1), q0.clone()).is_ok());

        let err = LevelProblem::from_explicit(m.clone(), e[..3].to_vec(), q(4, 1), q0.clone());
        assert!(matches!(err, Err(ProblemError::DimensionMismatch { .. })));

        let unsorted = vec![q(2, 1), q(1, 1), q(3, 1), q(4, 1)];
        let err = LevelProblem::from_explicit(m.clone(), unsorted, q(4, 1), q0.clone());
        assert!(matches!(err, Err(ProblemError::UnsortedErrors { state: 2 })));

        let zero = vec![q(0, 1), q(2, 1), q(3, 1), q(4, 1)];
        let err = LevelProblem::from_explicit(m.clone(), zero, q(4, 1), q0.clone());
        assert!(matches!(err, Err(ProblemError::NonPositiveError { state: 1, .. })));

        let heavy = vec![q(1, 2), q(0, 1), q(0, 1), q(3, 4)];
        let err = LevelProblem::from_explicit(m.clone(), e.clone(), q(4, 1), heavy);
        assert!(matches!(err, Err(ProblemError::MassExceedsOne { .. })));

        let neg = vec![q(-1, 2), q(0, 1), q(0, 1), q(1, 1)];
        let err = LevelProblem::from_explicit(m, e, q(4, 1), neg);
        assert!(matches!(err, Err(ProblemError::NegativeMass { state: 1 })));
    }

    #[test]
    fn minimal_problem() {
        let m = SquareMatrix::from_rows(vec![vec![0.5]]).unwrap();
        assert!(LevelProblem::from_explicit(m, vec![1.0], 1.0, vec![1.0]).is_ok());
    }

    #[test]
    fn bound_kernel_examples() {
        let k = TriangularKernel::new(worked_kernel()).unwrap();
        assert_eq!(bound_kernel(&k), k);

        let k = TriangularKernel::from_rows(vec![vec![0.5, 0.2], vec![0.0, 0.3]]).unwrap();
        let s = bound_kernel(&k);
        assert_eq!(*s.entry(0, 1), 0.7);
        assert_eq!(s.diagonal(), k.diagonal());

        let k = TriangularKernel::from_rows(vec![vec![0.2, 0.0], vec![0.0, 0.9]]).unwrap();
        let s = bound_kernel(&k);
        assert!((s.entry(0, 1) - 0.1f64).abs() < 1e-15);
    }

    #[test]
    fn initial_distributions() {
        let p = onebit_level_chain::<BigRational>(&FitnessFamily::OneMax, 4).unwrap();
        let p = p.with_initial(&InitialDistribution::Uniform).unwrap();
        assert_eq!(p.q0(), &[q(1, 4), q(1, 4), q(1, 4), q(1, 4)]);
        let bad = InitialDistribution::Explicit(vec![q(1, 1)]);
        assert!(p.with_initial(&bad).is_err());
    }
}
