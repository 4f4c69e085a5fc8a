//! Exact convergence trajectories for (1+1) strictly elitist evolutionary
//! algorithms.
//!
//! A strictly elitist EA with states sorted by fitness has an upper-triangular
//! transition kernel `R` among its non-optimal states. When the diagonal of `R`
//! has no repeated values, every power `R^t` has a closed form in the diagonal
//! entries, and so do the relative approximation error
//! `E_t = e . R^t q0 / f_opt`, the expected fitness `F_t` and the average
//! convergence rate `R_t`.
//!
//! The pipeline:
//!
//! 1. build a [`LevelProblem`] from explicit data or a bitstring family
//!    ([`level::onebit_level_chain`], [`level::bitwise_level_chain`]);
//! 2. compute the [`PowerFactors`] of its kernel;
//! 3. reduce them to a [`SpectralErrorModel`] with [`analytics::coefficients`];
//! 4. evaluate `E_t`, `F_t`, `R_t` for any `t`.
//!
//! Every step is generic over [`Scalar`]; `f64` is the working backend and
//! [`BigRational`](num_rational::BigRational) makes the results exact.
//! [`simulate`] runs the EA itself for comparison.
//!
//! ```
//! use levelchain::{analytics, level, triangular};
//!
//! let problem = level::onebit_level_chain::<f64>(&level::FitnessFamily::OneMax, 4).unwrap();
//! let factors = triangular::compute_power_factors(problem.kernel());
//! let model = analytics::coefficients(&problem, &factors).unwrap();
//! assert!((model.error_at(3) - 0.75f64.powi(3)).abs() < 1e-15);
//! ```

pub mod analytics;
pub mod level;
pub mod matrix;
pub mod problem_file;
pub mod scalar;
pub mod simulate;
pub mod triangular;

use num_rational::BigRational;
use thiserror::Error;

pub use analytics::{SpectralErrorModel, TrajectoryMetrics};
pub use level::{FitnessFamily, InitialDistribution, LevelProblem, Mutation};
pub use matrix::SquareMatrix;
pub use scalar::Scalar;
pub use simulate::{EmpiricalSeries, SimulationSettings};
pub use triangular::{PowerFactors, TriangularKernel};

pub type Kernel = TriangularKernel<f64>;
pub type ExactKernel = TriangularKernel<BigRational>;
pub type Factors = PowerFactors<f64>;
pub type ExactFactors = PowerFactors<BigRational>;
pub type Problem = LevelProblem<f64>;
pub type ExactProblem = LevelProblem<BigRational>;
pub type ErrorModel = SpectralErrorModel<f64>;
pub type ExactErrorModel = SpectralErrorModel<BigRational>;
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Matrix(#[from] matrix::MatrixError),
    #[error(transparent)]
    Kernel(#[from] triangular::KernelError),
    #[error(transparent)]
    Problem(#[from] level::ProblemError),
    #[error(transparent)]
    ProblemFile(#[from] problem_file::ProblemFileError),
    #[error(transparent)]
    Analytics(#[from] analytics::AnalyticsError),
    #[error(transparent)]
    Simulation(#[from] simulate::SimError),
}
