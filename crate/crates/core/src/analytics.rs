//! Spectral form of the relative approximation error.
//!
//! With power factors `p` of the kernel, the error after `t >= 1` generations is
//!
//! ```text
//! E_t = sum_k c_k * lambda_k^(t-1),   lambda_k = r[k][k]
//! c_k = sum_i sum_{j>=i} e_i * p[i][j][k] * q0_j / f_opt
//! ```
//!
//! and the expected fitness and average convergence rate follow as
//! `F_t = f_opt * (1 - E_t)` and `R_t = 1 - (E_t / E_0)^(1/t)`.
//! `E_0 = e . q0 / f_opt` is taken straight from the initial distribution.
//!
//! For strictly elitist chains `F_t <= f_opt`, so the rate is computed from the
//! signed ratio `E_t / E_0` without an absolute value.

use std::fmt::Write as _;

use thiserror::Error;

use crate::level::LevelProblem;
use crate::scalar::{display_signed, format_rounded, powu, Scalar};
use crate::triangular::{OpCount, PowerFactors};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("optimal fitness must be positive, got {0}")]
    NonPositiveOptimum(f64),
    #[error("power factors have dimension {factors}, problem has {problem}")]
    DimensionMismatch { factors: usize, problem: usize },
    #[error("average convergence rate is undefined when the initial error is zero")]
    UndefinedRate,
    #[error("average convergence rate needs t >= 1")]
    RateAtZero,
    #[error("horizon must be at least 1")]
    EmptyHorizon,
}

/// `E_t` as a mixture of eigenvalue powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralErrorModel<S> {
    eigenvalues: Vec<S>,
    coefficients: Vec<S>,
    f_opt: S,
    initial_error: S,
}

/// Builds the spectral model of `problem` from the factors of its kernel.
pub fn coefficients<S: Scalar>(
    problem: &LevelProblem<S>,
    factors: &PowerFactors<S>,
) -> Result<SpectralErrorModel<S>, AnalyticsError> {
    let n = problem.dim();
    if factors.dim() != n {
        return Err(AnalyticsError::DimensionMismatch {
            factors: factors.dim(),
            problem: n,
        });
    }
    let f_opt = problem.f_opt().clone();
    if f_opt <= S::zero() {
        return Err(AnalyticsError::NonPositiveOptimum(f_opt.to_f64()));
    }
    let e = problem.errors();
    let q = problem.q0();

    let mut c = vec![S::zero(); n];
    for i in 0..n {
        for j in i..n {
            if q[j].is_zero() {
                continue;
            }
            let weight = e[i].clone() * q[j].clone();
            for (k, ck) in c.iter_mut().enumerate().take(j + 1).skip(i) {
                *ck = ck.clone() + weight.clone() * factors.factor(i, j, k).clone();
            }
        }
    }
    let coefficients = c.into_iter().map(|ck| ck / f_opt.clone()).collect();

    let initial_error = e
        .iter()
        .zip(q)
        .fold(S::zero(), |acc, (ei, qi)| acc + ei.clone() * qi.clone())
        / f_opt.clone();

    Ok(SpectralErrorModel {
        eigenvalues: factors.diagonal().to_vec(),
        coefficients,
        f_opt,
        initial_error,
    })
}

impl<S: Scalar> SpectralErrorModel<S> {
    pub fn eigenvalues(&self) -> &[S] {
        &self.eigenvalues
    }

    pub fn coefficients(&self) -> &[S] {
        &self.coefficients
    }

    pub fn f_opt(&self) -> &S {
        &self.f_opt
    }

    /// `E_0`
    pub fn initial_error(&self) -> &S {
        &self.initial_error
    }

    /// `F_0 = f_opt (1 - E_0)`
    pub fn initial_fitness(&self) -> S {
        self.f_opt.clone() * (S::one() - self.initial_error.clone())
    }

    /// States whose eigenvalue is not below 1; mass there never drains.
    pub fn non_convergent_states(&self) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, l)| **l >= S::one())
            .map(|(k, _)| k)
            .collect()
    }

    /// Same model with `delta` added to every coefficient. Used as a
    /// deliberately wrong prediction when checking the comparison machinery.
    pub fn with_coefficient_offset(&self, delta: S) -> Self {
        SpectralErrorModel {
            coefficients: self
                .coefficients
                .iter()
                .map(|c| c.clone() + delta.clone())
                .collect(),
            ..self.clone()
        }
    }

    pub fn error_at(&self, t: u64) -> S {
        if t == 0 {
            return self.initial_error.clone();
        }
        self.coefficients
            .iter()
            .zip(&self.eigenvalues)
            .fold(S::zero(), |acc, (c, l)| acc + c.clone() * powu(l, t - 1))
    }

    pub fn fitness_at(&self, t: u64) -> S {
        self.f_opt.clone() * (S::one() - self.error_at(t))
    }

    pub fn avg_rate_at(&self, t: u64) -> Result<f64, AnalyticsError> {
        if t == 0 {
            return Err(AnalyticsError::RateAtZero);
        }
        self.rate_from_error(&self.error_at(t), t)
    }

    fn rate_from_error(&self, error: &S, t: u64) -> Result<f64, AnalyticsError> {
        if self.initial_error.is_zero() {
            return Err(AnalyticsError::UndefinedRate);
        }
        Ok(average_rate(
            (error.clone() / self.initial_error.clone()).to_f64(),
            t,
        ))
    }

    /// Streaming `E_1, E_2, ...` at `2L` multiplications per step.
    pub fn error_series(&self) -> ErrorSeries<S> {
        ErrorSeries {
            terms: self
                .coefficients
                .iter()
                .cloned()
                .zip(self.eigenvalues.iter().cloned())
                .collect(),
            powers: vec![S::one(); self.eigenvalues.len()],
        }
    }

    /// `F_t`, `E_t` and `R_t` for `t = 0..=horizon`.
    pub fn series(&self, horizon: u64) -> Result<TrajectoryMetrics<S>, AnalyticsError> {
        if horizon == 0 {
            return Err(AnalyticsError::EmptyHorizon);
        }
        let mut records = Vec::with_capacity(horizon as usize + 1);
        records.push(TrajectoryRecord {
            t: 0,
            fitness: self.initial_fitness(),
            error: self.initial_error.clone(),
            rate: None,
        });
        for (t, error) in (1..=horizon).zip(self.error_series()) {
            records.push(TrajectoryRecord {
                t,
                fitness: self.f_opt.clone() * (S::one() - error.clone()),
                rate: Some(self.rate_from_error(&error, t)?),
                error,
            });
        }
        Ok(TrajectoryMetrics {
            f_opt: self.f_opt.clone(),
            records,
        })
    }
}

/// `1 - ratio^(1/t)`; a ratio driven below zero by rounding counts as zero.
pub fn average_rate(ratio: f64, t: u64) -> f64 {
    1.0 - ratio.max(0.0).powf(1.0 / t as f64)
}

#[derive(Debug, Clone)]
pub struct ErrorSeries<S> {
    terms: Vec<(S, S)>,
    powers: Vec<S>,
}

impl<S: Scalar> ErrorSeries<S> {
    pub fn next_counted(&mut self, ops: &mut OpCount) -> S {
        let mut value = S::zero();
        for ((c, lambda), pow) in self.terms.iter().zip(self.powers.iter_mut()) {
            value = value + c.clone() * pow.clone();
            *pow = pow.clone() * lambda.clone();
            ops.multiplications += 2;
        }
        value
    }
}

impl<S: Scalar> Iterator for ErrorSeries<S> {
    type Item = S;

    fn next(&mut self) -> Option<S> {
        Some(self.next_counted(&mut OpCount::default()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<S> {
    pub t: u64,
    pub fitness: S,
    pub error: S,
    /// Absent at `t = 0`.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMetrics<S> {
    pub f_opt: S,
    pub records: Vec<TrajectoryRecord<S>>,
}

impl<S: Scalar> TrajectoryMetrics<S> {
    pub fn horizon(&self) -> u64 {
        self.records.last().map_or(0, |r| r.t)
    }
}

/// `e . R^t q0 / f_opt` by `t` matrix-vector products. Shares no code with the
/// power-factor path.
pub fn exact_error_via_matrix<S: Scalar>(problem: &LevelProblem<S>, t: u64) -> S {
    let mut q = problem.q0().to_vec();
    for _ in 0..t {
        q = problem.kernel().apply(&q);
    }
    problem
        .errors()
        .iter()
        .zip(&q)
        .fold(S::zero(), |acc, (e, qi)| acc + e.clone() * qi.clone())
        / problem.f_opt().clone()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Decimals shown for coefficients.
    pub digits: usize,
    /// Terms with `|c_k|` below this are left out of the expressions.
    pub cutoff: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            digits: 3,
            cutoff: 5e-4,
        }
    }
}

const MINUS: &str = "\u{2212}";
const TIMES: &str = "\u{00d7}";

/// Eigenvalues print with two decimals when that is exact, else with
/// `digits + 2`.
fn format_eigenvalue(x: f64, digits: usize) -> String {
    for d in 2..digits + 2 {
        let s = format!("{x:.d$}");
        if (s.parse::<f64>().unwrap_or(f64::NAN) - x).abs() < 1e-12 {
            return s;
        }
    }
    format_rounded(x, digits + 2)
}

fn format_quantity(x: f64, digits: usize) -> String {
    let s = format!("{x}");
    match s.split_once('.') {
        Some((_, frac)) if frac.len() > digits + 2 => format_rounded(x, digits + 2),
        _ => s,
    }
}

struct Term {
    coefficient: f64,
    eigenvalue: f64,
}

fn mixture(terms: &[Term], opts: &ReportOptions, negate: bool, leading: bool) -> String {
    let mut out = String::new();
    for (n, term) in terms.iter().enumerate() {
        let c = if negate { -term.coefficient } else { term.coefficient };
        let body = format!(
            "{}{TIMES}{}^(t{MINUS}1)",
            format_rounded(c.abs(), opts.digits),
            format_eigenvalue(term.eigenvalue, opts.digits)
        );
        if n == 0 && leading {
            if c < 0.0 {
                out.push_str(MINUS);
            }
        } else {
            out.push_str(if c < 0.0 { " \u{2212} " } else { " + " });
        }
        out.push_str(&body);
    }
    out
}

/// Human-readable closed forms of `E_t`, `F_t` and `R_t` with the eigenvalues
/// and exact coefficients.
pub fn closed_form_report<S: Scalar>(model: &SpectralErrorModel<S>, opts: &ReportOptions) -> String {
    let mut kept = Vec::new();
    let mut dropped = 0usize;
    for (c, l) in model.coefficients.iter().zip(&model.eigenvalues) {
        let cf = c.to_f64();
        if cf.abs() < opts.cutoff {
            if !c.is_zero() {
                dropped += 1;
            }
        } else {
            kept.push(Term {
                coefficient: cf,
                eigenvalue: l.to_f64(),
            });
        }
    }

    let list = |xs: &[S]| xs.iter().map(display_signed).collect::<Vec<_>>().join(", ");
    let f_opt = model.f_opt.to_f64();
    let f_opt_text = format_quantity(f_opt, opts.digits);
    let e0 = model.initial_error.to_f64();

    let mut out = String::new();
    let _ = writeln!(out, "lambda_k = ({})", list(&model.eigenvalues));
    let _ = writeln!(out, "c_k = ({})", list(&model.coefficients));
    let _ = writeln!(out, "f_opt = {}", display_signed(&model.f_opt));
    let _ = writeln!(out, "E_0 = {}", display_signed(&model.initial_error));

    if kept.is_empty() {
        let _ = writeln!(out, "E_t = 0");
        let _ = writeln!(out, "F_t = {f_opt_text}");
    } else {
        let _ = writeln!(out, "E_t = {}", mixture(&kept, opts, false, true));
        let _ = writeln!(
            out,
            "F_t = {f_opt_text}{TIMES}(1{})",
            mixture(&kept, opts, true, false)
        );
    }
    if e0 == 0.0 {
        let _ = writeln!(out, "R_t undefined (E_0 = 0)");
    } else if kept.is_empty() {
        let _ = writeln!(out, "R_t = 1");
    } else if (e0 - 1.0).abs() < 1e-12 {
        let _ = writeln!(out, "R_t = 1 {MINUS} ({})^(1/t)", mixture(&kept, opts, false, true));
    } else {
        let _ = writeln!(
            out,
            "R_t = 1 {MINUS} (({}) / {})^(1/t)",
            mixture(&kept, opts, false, true),
            format_rounded(e0, opts.digits + 2)
        );
    }
    if dropped > 0 {
        let _ = writeln!(
            out,
            "({dropped} term(s) with |c_k| < {} omitted)",
            opts.cutoff
        );
    }
    out
}
