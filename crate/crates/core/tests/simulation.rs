use levelchain::analytics::coefficients;
use levelchain::level::{bitwise_level_chain, level_chain, FitnessFamily, InitialDistribution, Mutation};
use levelchain::simulate::{compare, compare_empirical, run_bitstring, run_chain, SimulationSettings};
use levelchain::triangular::compute_power_factors;

const Z: f64 = 4.0;

fn settings(seed: u64) -> SimulationSettings {
    SimulationSettings {
        horizon: 30,
        runs: 20_000,
        seed,
        workers: None,
    }
}

#[test]
fn bitwise_bitstring_and_chain_agree_with_closed_form() {
    let n = 6;
    let family = FitnessFamily::Square;
    let p = 1.0 / n as f64;
    let problem = bitwise_level_chain::<f64>(&family, n, p).unwrap();
    let analytic = coefficients(&problem, &compute_power_factors(problem.kernel()))
        .unwrap()
        .series(30)
        .unwrap();
    let bits = run_bitstring(&family, n, &Mutation::Bitwise(p), &InitialDistribution::Worst, &settings(1)).unwrap();
    let chain = run_chain(&problem, &settings(2)).unwrap();
    for report in [
        compare(&analytic, &bits, Z).unwrap(),
        compare(&analytic, &chain, Z).unwrap(),
        compare_empirical(&bits, &chain, Z).unwrap(),
    ] {
        assert!(report.passed, "max |z| = {}", report.max_abs_z);
    }
}

#[test]
fn uniform_start_with_custom_levels() {
    let n = 5;
    let family = FitnessFamily::Custom(vec![10.0, 7.0, 6.5, 3.0, 1.0, 0.0]);
    let problem = level_chain(&family, n, &Mutation::OneBit, 1e-9)
        .unwrap()
        .with_initial(&InitialDistribution::Uniform)
        .unwrap();
    let analytic = coefficients(&problem, &compute_power_factors(problem.kernel()))
        .unwrap()
        .series(30)
        .unwrap();
    let bits = run_bitstring(&family, n, &Mutation::OneBit, &InitialDistribution::Uniform, &settings(3)).unwrap();
    let report = compare(&analytic, &bits, Z).unwrap();
    assert!(report.passed, "max |z| = {}", report.max_abs_z);
}

#[test]
fn perturbed_closed_form_is_rejected() {
    let problem = bitwise_level_chain::<f64>(&FitnessFamily::OneMax, 6, 1.0 / 6.0).unwrap();
    let model = coefficients(&problem, &compute_power_factors(problem.kernel())).unwrap();
    let off = model.with_coefficient_offset(0.02).series(30).unwrap();
    let chain = run_chain(&problem, &settings(4)).unwrap();
    assert!(!compare(&off, &chain, Z).unwrap().passed);
}
