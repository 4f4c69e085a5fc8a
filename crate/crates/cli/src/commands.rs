use levelchain::analytics::{self, closed_form_report, SpectralErrorModel, TrajectoryMetrics};
use levelchain::problem_file::ProblemFileError;
use levelchain::simulate::{self, EmpiricalSeries};
use levelchain::triangular::{brute_force_power, compute_power_factors};
use levelchain::{LevelProblem, Rational, Scalar};

use crate::config::{RunConfig, SimulationMode};
use crate::output::{emit, optional, Table};
use crate::CliError;

fn problem_error(e: ProblemFileError) -> CliError {
    match e {
        ProblemFileError::Syntax(_)
        | ProblemFileError::Ambiguous
        | ProblemFileError::Underspecified
        | ProblemFileError::Missing(_)
        | ProblemFileError::Misplaced { .. }
        | ProblemFileError::Unknown { .. } => CliError::Config(e.to_string()),
        other => CliError::Problem(other.to_string()),
    }
}

fn build<S: Scalar>(cfg: &RunConfig) -> Result<LevelProblem<S>, CliError> {
    let problem = cfg
        .problem
        .build::<S>(cfg.diagonal_tolerance())
        .map_err(problem_error)?;
    Ok(problem.with_label(cfg.label()))
}

fn model<S: Scalar>(cfg: &RunConfig, problem: &LevelProblem<S>) -> Result<SpectralErrorModel<S>, CliError> {
    let factors = compute_power_factors(problem.kernel());
    let model = analytics::coefficients(problem, &factors).map_err(|e| CliError::Problem(e.to_string()))?;
    for s in model.non_convergent_states() {
        eprintln!(
            "levelchain: warning: state {} never leaves (diagonal entry 1); E_t does not vanish",
            s + 1
        );
    }
    match &cfg.analysis.coefficient_offset {
        Some(delta) => {
            let delta: S = delta.parse().map_err(|e| CliError::Config(e.to_string()))?;
            Ok(model.with_coefficient_offset(delta))
        }
        None => Ok(model),
    }
}

fn trajectory<S: Scalar>(cfg: &RunConfig, horizon: u64) -> Result<(SpectralErrorModel<S>, TrajectoryMetrics<S>), CliError> {
    let problem = build::<S>(cfg)?;
    let model = model(cfg, &problem)?;
    let series = model.series(horizon).map_err(|e| CliError::Problem(e.to_string()))?;
    Ok((model, series))
}

fn analyze_with<S: Scalar>(cfg: &RunConfig) -> Result<(), CliError> {
    let (model, series) = trajectory::<S>(cfg, cfg.horizon())?;
    let mut table = Table::new(["t", "F", "E", "R"])?;
    for r in &series.records {
        table.row([r.t.to_string(), r.fitness.to_string(), r.error.to_string(), optional(r.rate)])?;
    }
    let report = format!("{}\n{}", cfg.label(), closed_form_report(&model, &cfg.report_options()));
    emit(cfg, &table.into_bytes()?, &report)
}

pub fn analyze(cfg: &RunConfig, rational: bool) -> Result<(), CliError> {
    if rational {
        analyze_with::<Rational>(cfg)
    } else {
        analyze_with::<f64>(cfg)
    }
}

fn run_simulation(cfg: &RunConfig) -> Result<EmpiricalSeries, CliError> {
    let settings = cfg.settings();
    let result = match cfg.simulation_mode()? {
        SimulationMode::Bitstring => {
            // Building the chain first gives the same diagnostics as analyze.
            build::<f64>(cfg)?;
            let setup = cfg.problem.bitstring::<f64>().map_err(problem_error)?;
            simulate::run_bitstring(&setup.family, setup.n, &setup.mutation, &setup.initial, &settings)
        }
        SimulationMode::Chain => simulate::run_chain(&build::<f64>(cfg)?, &settings),
    };
    result.map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let series = run_simulation(cfg)?;
    let mut table = Table::new(["t", "mean_F", "stderr", "E_emp", "R_emp"])?;
    for r in &series.records {
        table.row([
            r.t.to_string(),
            r.mean_fitness.to_string(),
            r.stderr.to_string(),
            r.error.to_string(),
            optional(r.rate),
        ])?;
    }
    let report = format!(
        "{}: {} runs, seed {}, horizon {}\n",
        cfg.label(),
        series.runs,
        series.seed,
        series.horizon
    );
    emit(cfg, &table.into_bytes()?, &report)
}

fn compare_with<S: Scalar>(cfg: &RunConfig) -> Result<(), CliError> {
    let horizon = cfg.common_horizon()?;
    let (_, analytic) = trajectory::<S>(cfg, horizon)?;
    let empirical = run_simulation(cfg)?;
    let report = simulate::compare(&analytic, &empirical, cfg.z_threshold())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut table = Table::new(["t", "F", "mean_F", "stderr", "z"])?;
    for r in &report.rows {
        table.row([
            r.t.to_string(),
            r.expected.to_string(),
            r.observed.to_string(),
            r.stderr.to_string(),
            r.z.to_string(),
        ])?;
    }
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    let summary = format!(
        "{}: {verdict} max |z| = {:.3} (threshold {}) over t = 0..{horizon}, {} runs\n",
        cfg.label(),
        report.max_abs_z,
        report.threshold,
        empirical.runs
    );
    emit(cfg, &table.into_bytes()?, &summary)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Statistical {
            max_abs_z: report.max_abs_z,
            threshold: report.threshold,
        })
    }
}

pub fn compare(cfg: &RunConfig, rational: bool) -> Result<(), CliError> {
    if rational {
        compare_with::<Rational>(cfg)
    } else {
        compare_with::<f64>(cfg)
    }
}

fn matrix_table<S: Scalar>(m: &levelchain::SquareMatrix<S>) -> Result<Vec<u8>, CliError> {
    let dim = m.dim();
    let header = std::iter::once("state".to_string()).chain((1..=dim).map(|j| j.to_string()));
    let mut table = Table::new(header)?;
    for (i, row) in m.rows().enumerate() {
        table.row(std::iter::once((i + 1).to_string()).chain(row.iter().map(|x| x.to_string())))?;
    }
    table.into_bytes()
}

fn power_with<S: Scalar>(cfg: &RunConfig, t: u64, oracle: bool) -> Result<(), CliError> {
    let problem = build::<S>(cfg)?;
    let factors = compute_power_factors(problem.kernel());
    let power = factors.kernel_power(t);
    let mut report = format!("{}: R^{t} from power factors\n", cfg.label());
    if oracle {
        let direct = brute_force_power(problem.kernel().matrix(), t);
        let csv = matrix_table(&direct)?;
        report.push_str("direct multiplication:\n");
        report.push_str(&String::from_utf8_lossy(&csv));
        report.push_str(&format!("max deviation: {:e}\n", power.max_abs_diff(&direct)));
    }
    emit(cfg, &matrix_table(&power)?, &report)
}

pub fn power(cfg: &RunConfig, t: u64, oracle: bool, rational: bool) -> Result<(), CliError> {
    if rational {
        power_with::<Rational>(cfg, t, oracle)
    } else {
        power_with::<f64>(cfg, t, oracle)
    }
}
