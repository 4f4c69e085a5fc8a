//! TOML problem descriptions.
//!
//! A problem is either a bitstring family:
//!
//! ```toml
//! family = "square"        # onemax | square | log | custom
//! n = 4
//! mutation = "onebit"      # onebit | bitwise
//! p_mut = "1/4"            # bitwise only, defaults to 1/n
//! levels = [16, 9, 4, 1, 0] # custom only: fitness by number of zero bits
//! initial = "worst"        # worst | uniform | [q_1, ..., q_n]
//! ```
//!
//! or an explicit chain:
//!
//! ```toml
//! matrix = [["3/4", "1/2", 0, 0], [0, 0.5, 0.75, 0], [0, 0, 0.25, 1], [0, 0, 0, 0]]
//! errors = [1, 2, 3, 4]
//! f_opt = 4
//! q0 = [0, 0, 0, 1]
//! ```
//!
//! Numbers may be TOML integers, TOML floats or strings holding a decimal or a
//! ratio. Floats are read through their shortest decimal form, so `0.1` is
//! exactly one tenth in rational mode.

use serde::Deserialize;
use thiserror::Error;

use crate::level::{level_chain, FitnessFamily, InitialDistribution, LevelProblem, Mutation, ProblemError};
use crate::matrix::{MatrixError, SquareMatrix};
use crate::scalar::{LiteralError, Scalar};
use crate::triangular::KernelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemFileError {
    #[error("could not parse problem: {0}")]
    Syntax(String),
    #[error("a problem needs either `family` or `matrix`, not both")]
    Ambiguous,
    #[error("a problem needs either `family` (with `n`) or `matrix`")]
    Underspecified,
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("field `{field}` does not apply to {kind} problems")]
    Misplaced { field: &'static str, kind: &'static str },
    #[error("unknown {field} `{value}`")]
    Unknown { field: &'static str, value: String },
    #[error(transparent)]
    Literal(#[from] LiteralError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl ProblemFileError {
    /// The kernel validation report, when that is what failed.
    pub fn kernel_error(&self) -> Option<&KernelError> {
        match self {
            ProblemFileError::Problem(ProblemError::Kernel(k)) => Some(k),
            _ => None,
        }
    }
}

/// A number as written in a problem file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Integer(i64),
    Float(f64),
    Text(String),
}

impl Literal {
    pub fn text(&self) -> String {
        match self {
            Literal::Integer(i) => i.to_string(),
            Literal::Float(f) => format!("{f}"),
            Literal::Text(s) => s.clone(),
        }
    }

    pub fn parse<S: Scalar>(&self) -> Result<S, LiteralError> {
        S::parse_literal(&self.text())
    }
}

fn parse_all<S: Scalar>(xs: &[Literal]) -> Result<Vec<S>, LiteralError> {
    xs.iter().map(Literal::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(String),
    Vector(Vec<Literal>),
}

impl InitialSpec {
    pub fn resolve<S: Scalar>(&self) -> Result<InitialDistribution<S>, ProblemFileError> {
        match self {
            InitialSpec::Named(name) => match name.as_str() {
                "worst" => Ok(InitialDistribution::Worst),
                "uniform" => Ok(InitialDistribution::Uniform),
                _ => Err(ProblemFileError::Unknown {
                    field: "initial distribution",
                    value: name.clone(),
                }),
            },
            InitialSpec::Vector(v) => Ok(InitialDistribution::Explicit(parse_all(v)?)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub label: Option<String>,
    pub family: Option<String>,
    pub n: Option<usize>,
    pub mutation: Option<String>,
    pub p_mut: Option<Literal>,
    pub levels: Option<Vec<Literal>>,
    pub matrix: Option<Vec<Vec<Literal>>>,
    pub errors: Option<Vec<Literal>>,
    pub f_opt: Option<Literal>,
    pub q0: Option<Vec<Literal>>,
    pub initial: Option<InitialSpec>,
}

/// Bitstring part of a family problem, as needed by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct BitstringSetup<S> {
    pub family: FitnessFamily<S>,
    pub n: usize,
    pub mutation: Mutation<S>,
    pub initial: InitialDistribution<S>,
}

impl ProblemSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ProblemFileError> {
        toml::from_str(text).map_err(|e| ProblemFileError::Syntax(e.to_string()))
    }

    pub fn is_family(&self) -> bool {
        self.family.is_some()
    }

    fn check_shape(&self) -> Result<(), ProblemFileError> {
        match (&self.family, &self.matrix) {
            (Some(_), Some(_)) => return Err(ProblemFileError::Ambiguous),
            (None, None) => return Err(ProblemFileError::Underspecified),
            _ => {}
        }
        let misplaced = |field: &'static str, present: bool, kind: &'static str| {
            if present {
                Err(ProblemFileError::Misplaced { field, kind })
            } else {
                Ok(())
            }
        };
        if self.is_family() {
            misplaced("errors", self.errors.is_some(), "family")?;
            misplaced("f_opt", self.f_opt.is_some(), "family")?;
            misplaced("q0", self.q0.is_some(), "family")?;
        } else {
            misplaced("n", self.n.is_some(), "explicit")?;
            misplaced("mutation", self.mutation.is_some(), "explicit")?;
            misplaced("p_mut", self.p_mut.is_some(), "explicit")?;
            misplaced("levels", self.levels.is_some(), "explicit")?;
        }
        Ok(())
    }

    /// Family, length, mutation and start distribution of a family problem.
    pub fn bitstring<S: Scalar>(&self) -> Result<BitstringSetup<S>, ProblemFileError> {
        self.check_shape()?;
        let name = self.family.as_deref().ok_or(ProblemFileError::Underspecified)?;
        let n = self.n.ok_or(ProblemFileError::Missing("n"))?;
        let family = match name {
            "onemax" => FitnessFamily::OneMax,
            "square" => FitnessFamily::Square,
            "log" => FitnessFamily::Log,
            "custom" => FitnessFamily::Custom(parse_all(
                self.levels.as_deref().ok_or(ProblemFileError::Missing("levels"))?,
            )?),
            other => {
                return Err(ProblemFileError::Unknown {
                    field: "family",
                    value: other.to_string(),
                })
            }
        };
        if !matches!(family, FitnessFamily::Custom(_)) && self.levels.is_some() {
            return Err(ProblemFileError::Misplaced {
                field: "levels",
                kind: "built-in family",
            });
        }
        let mutation = match self.mutation.as_deref().unwrap_or("onebit") {
            "onebit" => {
                if self.p_mut.is_some() {
                    return Err(ProblemFileError::Misplaced {
                        field: "p_mut",
                        kind: "onebit",
                    });
                }
                Mutation::OneBit
            }
            "bitwise" => Mutation::Bitwise(match &self.p_mut {
                Some(p) => p.parse()?,
                None => S::from_ratio(1, n.max(1) as i64),
            }),
            other => {
                return Err(ProblemFileError::Unknown {
                    field: "mutation",
                    value: other.to_string(),
                })
            }
        };
        let initial = match &self.initial {
            Some(spec) => spec.resolve()?,
            None => InitialDistribution::Worst,
        };
        Ok(BitstringSetup {
            family,
            n,
            mutation,
            initial,
        })
    }

    pub fn build<S: Scalar>(&self, diagonal_tolerance: f64) -> Result<LevelProblem<S>, ProblemFileError> {
        self.check_shape()?;
        let problem = if self.is_family() {
            let setup = self.bitstring::<S>()?;
            level_chain(&setup.family, setup.n, &setup.mutation, diagonal_tolerance)?
                .with_initial(&setup.initial)?
        } else {
            let rows: Vec<Vec<String>> = self
                .matrix
                .as_ref()
                .expect("checked above")
                .iter()
                .map(|r| r.iter().map(Literal::text).collect())
                .collect();
            let matrix = SquareMatrix::<S>::parse_rows(&rows)?;
            let errors = parse_all(self.errors.as_deref().ok_or(ProblemFileError::Missing("errors"))?)?;
            let f_opt = self.f_opt.as_ref().ok_or(ProblemFileError::Missing("f_opt"))?.parse()?;
            let dim = matrix.dim();
            let initial = match (&self.q0, &self.initial) {
                (Some(_), Some(_)) => {
                    return Err(ProblemFileError::Misplaced {
                        field: "initial",
                        kind: "explicit problems that already give q0",
                    })
                }
                (Some(q0), None) => InitialDistribution::Explicit(parse_all(q0)?),
                (None, Some(spec)) => spec.resolve()?,
                (None, None) => return Err(ProblemFileError::Missing("q0")),
            };
            LevelProblem::from_explicit_with_tolerance(
                matrix,
                errors,
                f_opt,
                initial.resolve(dim),
                diagonal_tolerance,
            )?
        };
        Ok(match &self.label {
            Some(label) => problem.with_label(label.clone()),
            None => problem,
        })
    }
}
