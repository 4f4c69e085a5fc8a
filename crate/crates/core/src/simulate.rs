//! Monte-Carlo runs of the (1+1) strictly elitist EA.
//!
//! Two executors share the aggregation: [`run_bitstring`] mutates real
//! bitstrings and applies strict elitist selection, [`run_chain`] jumps between
//! the lumped level states of a [`LevelProblem`]. Every trajectory runs for
//! exactly `horizon` generations; the optimum is absorbing, so continuing past
//! it leaves `F_t` unchanged.
//!
//! Reproducibility: run `r` draws from ChaCha8 seeded with `seed` on stream `r`.
//! Runs are grouped into fixed chunks of [`CHUNK_RUNS`]; each chunk is reduced
//! with Welford's update and the chunk summaries are merged in index order, so
//! the output is bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{average_rate, TrajectoryMetrics};
use crate::level::{FitnessFamily, InitialDistribution, LevelProblem, Mutation, ProblemError};
use crate::scalar::Scalar;

pub const CHUNK_RUNS: u64 = 1024;

/// Threshold on `|z|` used when none is configured.
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("number of runs must be at least 1")]
    NoRuns,
    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: u64, right: u64 },
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationSettings {
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            horizon: 35,
            runs: 100_000,
            seed: 42,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRecord {
    pub t: u64,
    pub mean_fitness: f64,
    /// Standard error of `mean_fitness`.
    pub stderr: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSeries {
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub f_opt: f64,
    pub records: Vec<EmpiricalRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var.max(0.0) / self.count as f64).sqrt()
    }
}

fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Index into `q0` drawn by mass, or `None` for the leftover optimum mass.
fn sample_state(q0: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (s, q) in q0.iter().enumerate() {
        acc += q;
        if u < acc {
            return Some(s);
        }
    }
    None
}

/// Runs `trajectory(run, rng, out)` for every run and aggregates per generation.
fn aggregate<F>(settings: &SimulationSettings, f_opt: f64, trajectory: F) -> Result<EmpiricalSeries, SimError>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    if settings.runs == 0 {
        return Err(SimError::NoRuns);
    }
    let len = settings.horizon as usize + 1;
    let chunks = settings.runs.div_ceil(CHUNK_RUNS);

    let reduce_chunk = |c: u64| -> Vec<Welford> {
        let mut acc = vec![Welford::default(); len];
        let mut buf = vec![0.0; len];
        let end = ((c + 1) * CHUNK_RUNS).min(settings.runs);
        for run in c * CHUNK_RUNS..end {
            let mut rng = run_rng(settings.seed, run);
            trajectory(&mut rng, &mut buf);
            for (w, x) in acc.iter_mut().zip(&buf) {
                w.push(*x);
            }
        }
        acc
    };

    let partials: Vec<Vec<Welford>> = match settings.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::WorkerPool(e.to_string()))?
            .install(|| (0..chunks).into_par_iter().map(reduce_chunk).collect()),
        None => (0..chunks).into_par_iter().map(reduce_chunk).collect(),
    };

    let mut total = vec![Welford::default(); len];
    for part in &partials {
        for (w, p) in total.iter_mut().zip(part) {
            w.merge(p);
        }
    }

    let e0 = 1.0 - total[0].mean / f_opt;
    let records = total
        .iter()
        .enumerate()
        .map(|(t, w)| {
            let error = 1.0 - w.mean / f_opt;
            let rate = (t > 0 && e0 > 0.0).then(|| average_rate(error / e0, t as u64));
            EmpiricalRecord {
                t: t as u64,
                mean_fitness: w.mean,
                stderr: w.stderr(),
                error,
                rate,
            }
        })
        .collect();

    Ok(EmpiricalSeries {
        horizon: settings.horizon,
        runs: settings.runs,
        seed: settings.seed,
        f_opt,
        records,
    })
}

/// Simulates the EA on `n`-bit strings. The initial individual has a level
/// drawn from `initial` and its zero bits at uniformly random positions.
pub fn run_bitstring(
    family: &FitnessFamily<f64>,
    n: usize,
    mutation: &Mutation<f64>,
    initial: &InitialDistribution<f64>,
    settings: &SimulationSettings,
) -> Result<EmpiricalSeries, SimError> {
    family.validate(n)?;
    if let Mutation::Bitwise(p) = mutation {
        if !(*p > 0.0 && *p < 1.0) {
            return Err(ProblemError::MutationRate(*p).into());
        }
    }
    let q0 = initial.resolve(n);
    if q0.len() != n {
        return Err(ProblemError::DimensionMismatch {
            what: "initial distribution",
            expected: n,
            found: q0.len(),
        }
        .into());
    }
    let fitness: Vec<f64> = (0..=n).map(|z| family.level_fitness(n, z)).collect();

    aggregate(settings, fitness[0], |rng, out| {
        let zeros = sample_state(&q0, rng).map_or(0, |s| s + 1);
        let mut bits = vec![true; n];
        // partial Fisher-Yates: the first `zeros` positions of a random permutation
        let mut order: Vec<usize> = (0..n).collect();
        for z in 0..zeros {
            let pick = rng.random_range(z..n);
            order.swap(z, pick);
            bits[order[z]] = false;
        }
        let mut parent_zeros = zeros;
        let mut child = bits.clone();

        out[0] = fitness[parent_zeros];
        for slot in out.iter_mut().skip(1) {
            child.copy_from_slice(&bits);
            let mut child_zeros = parent_zeros;
            match mutation {
                Mutation::OneBit => {
                    let i = rng.random_range(0..n);
                    child[i] = !child[i];
                    if child[i] {
                        child_zeros -= 1;
                    } else {
                        child_zeros += 1;
                    }
                }
                Mutation::Bitwise(p) => {
                    for b in child.iter_mut() {
                        if rng.random_bool(*p) {
                            *b = !*b;
                            if *b {
                                child_zeros -= 1;
                            } else {
                                child_zeros += 1;
                            }
                        }
                    }
                }
            }
            if fitness[child_zeros] > fitness[parent_zeros] {
                std::mem::swap(&mut bits, &mut child);
                parent_zeros = child_zeros;
            }
            *slot = fitness[parent_zeros];
        }
    })
}

/// Simulates the lumped chain: from state `j`, move to state `i` with
/// probability `r[i][j]`, otherwise to the optimum.
pub fn run_chain(problem: &LevelProblem<f64>, settings: &SimulationSettings) -> Result<EmpiricalSeries, SimError> {
    let n = problem.dim();
    let f_opt = *problem.f_opt();
    let fitness: Vec<f64> = (0..n).map(|s| problem.state_fitness(s)).collect();
    let kernel = problem.kernel();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..=j).map(|i| *kernel.entry(i, j)).collect())
        .collect();
    let q0 = problem.q0();

    aggregate(settings, f_opt, |rng, out| {
        let mut state = sample_state(q0, rng);
        out[0] = state.map_or(f_opt, |s| fitness[s]);
        for slot in out.iter_mut().skip(1) {
            if let Some(j) = state {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                state = None;
                for (i, r) in columns[j].iter().enumerate() {
                    acc += r;
                    if u < acc {
                        state = Some(i);
                        break;
                    }
                }
            }
            *slot = state.map_or(f_opt, |s| fitness[s]);
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub t: u64,
    pub expected: f64,
    pub observed: f64,
    /// Standard error of `observed - expected`.
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub threshold: f64,
    pub max_abs_z: f64,
    pub passed: bool,
}

fn z_score(diff: f64, stderr: f64, scale: f64) -> f64 {
    if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-9 * scale.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn finish(rows: Vec<ComparisonRow>, threshold: f64) -> ComparisonReport {
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    ComparisonReport {
        rows,
        threshold,
        max_abs_z,
        passed: max_abs_z <= threshold,
    }
}

/// Per-generation z-scores of the empirical mean fitness against `F_t`.
pub fn compare<S: Scalar>(
    analytic: &TrajectoryMetrics<S>,
    empirical: &EmpiricalSeries,
    threshold: f64,
) -> Result<ComparisonReport, SimError> {
    if analytic.horizon() != empirical.horizon {
        return Err(SimError::HorizonMismatch {
            left: analytic.horizon(),
            right: empirical.horizon,
        });
    }
    let rows = analytic
        .records
        .iter()
        .zip(&empirical.records)
        .map(|(a, e)| {
            let expected = a.fitness.to_f64();
            ComparisonRow {
                t: a.t,
                expected,
                observed: e.mean_fitness,
                stderr: e.stderr,
                z: z_score(e.mean_fitness - expected, e.stderr, expected),
            }
        })
        .collect();
    Ok(finish(rows, threshold))
}

/// Two-sample z-scores between independent empirical series.
pub fn compare_empirical(
    left: &EmpiricalSeries,
    right: &EmpiricalSeries,
    threshold: f64,
) -> Result<ComparisonReport, SimError> {
    if left.horizon != right.horizon {
        return Err(SimError::HorizonMismatch {
            left: left.horizon,
            right: right.horizon,
        });
    }
    let rows = left
        .records
        .iter()
        .zip(&right.records)
        .map(|(a, b)| {
            let stderr = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
            ComparisonRow {
                t: a.t,
                expected: a.mean_fitness,
                observed: b.mean_fitness,
                stderr,
                z: z_score(b.mean_fitness - a.mean_fitness, stderr, a.mean_fitness),
            }
        })
        .collect();
    Ok(finish(rows, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::onebit_level_chain;
    use crate::triangular::TriangularKernel;

    fn settings(horizon: u64, runs: u64) -> SimulationSettings {
        SimulationSettings {
            horizon,
            runs,
            seed: 7,
            workers: None,
        }
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.5).collect();
        let mut whole = Welford::default();
        xs.iter().for_each(|x| whole.push(*x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..30].iter().for_each(|x| a.push(*x));
        xs[30..].iter().for_each(|x| b.push(*x));
        a.merge(&b);
        assert_eq!(a.count, whole.count);
        assert!((a.mean - whole.mean).abs() < 1e-12);
        assert!((a.m2 - whole.m2).abs() < 1e-9);
    }

    #[test]
    fn first_onebit_step_from_zeros_always_improves() {
        let s = run_bitstring(
            &FitnessFamily::OneMax,
            4,
            &Mutation::OneBit,
            &InitialDistribution::Worst,
            &settings(1, 500),
        )
        .unwrap();
        assert_eq!(s.records.len(), 2);
        assert_eq!(s.records[0].mean_fitness, 0.0);
        assert_eq!(s.records[1].mean_fitness, 1.0);
        assert_eq!(s.records[1].stderr, 0.0);
    }

    #[test]
    fn zero_horizon_square() {
        let s = run_bitstring(
            &FitnessFamily::Square,
            4,
            &Mutation::OneBit,
            &InitialDistribution::Worst,
            &settings(0, 10),
        )
        .unwrap();
        assert_eq!(s.records.len(), 1);
        assert_eq!(s.records[0].mean_fitness, 0.0);
    }

    #[test]
    fn zero_kernel_absorbs_in_one_step() {
        let k = TriangularKernel::from_rows(vec![vec![0.0]]).unwrap();
        let p = LevelProblem::new(k, vec![1.0], 1.0, vec![1.0], "absorb").unwrap();
        let s = run_chain(&p, &settings(3, 200)).unwrap();
        assert_eq!(s.records[0].mean_fitness, 0.0);
        for r in &s.records[1..] {
            assert_eq!(r.mean_fitness, 1.0);
            assert_eq!(r.stderr, 0.0);
        }
    }

    #[test]
    fn no_runs_is_an_error() {
        let p = onebit_level_chain::<f64>(&FitnessFamily::OneMax, 3).unwrap();
        assert_eq!(run_chain(&p, &settings(3, 0)), Err(SimError::NoRuns));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = onebit_level_chain::<f64>(&FitnessFamily::Log, 5).unwrap();
        let mut a = settings(20, 5000);
        a.workers = Some(1);
        let mut b = a;
        b.workers = Some(4);
        assert_eq!(run_chain(&p, &a).unwrap(), run_chain(&p, &b).unwrap());
    }

    #[test]
    fn mean_fitness_is_nondecreasing() {
        let s = run_bitstring(
            &FitnessFamily::Square,
            6,
            &Mutation::Bitwise(1.0 / 6.0),
            &InitialDistribution::Uniform,
            &settings(30, 3000),
        )
        .unwrap();
        assert!(s.records.windows(2).all(|w| w[1].mean_fitness >= w[0].mean_fitness));
    }

    #[test]
    fn degenerate_z_scores() {
        assert_eq!(z_score(0.0, 0.0, 1.0), 0.0);
        assert_eq!(z_score(1e-14, 0.0, 1.0), 0.0);
        assert_eq!(z_score(0.5, 0.0, 1.0), f64::INFINITY);
        assert_eq!(z_score(-0.5, 0.25, 1.0), -2.0);
    }

    #[test]
    fn identical_series_compare_clean() {
        let p = onebit_level_chain::<f64>(&FitnessFamily::OneMax, 3).unwrap();
        let s = run_chain(&p, &settings(5, 100)).unwrap();
        let r = compare_empirical(&s, &s, 4.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_abs_z, 0.0);
        let short = run_chain(&p, &settings(4, 100)).unwrap();
        assert!(matches!(
            compare_empirical(&s, &short, 4.0),
            Err(SimError::HorizonMismatch { .. })
        ));
    }
}
