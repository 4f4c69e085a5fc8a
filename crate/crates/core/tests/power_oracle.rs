mod common;

use levelchain::analytics::{coefficients, exact_error_via_matrix};
use levelchain::triangular::{brute_force_power, compute_power_factors, reference_power_factors, OpCount};
use levelchain::{Rational, SquareMatrix};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_power_matches_repeated_multiplication(c in common::chain(8)) {
        let kernel = c.kernel::<f64>();
        let factors = compute_power_factors(&kernel);
        let mut direct = SquareMatrix::identity(kernel.dim());
        for t in 0..=100u64 {
            let dev = factors.kernel_power(t).max_abs_diff(&direct);
            prop_assert!(dev <= 1e-9, "t = {}: deviation {:e}", t, dev);
            direct = direct.mul(kernel.matrix());
        }
    }

    #[test]
    fn closed_form_error_matches_matrix_iteration(c in common::chain(8)) {
        let problem = c.problem::<f64>();
        let factors = compute_power_factors(problem.kernel());
        let model = coefficients(&problem, &factors).unwrap();
        let mut q = problem.q0().to_vec();
        for t in 0..=100u64 {
            let direct: f64 = problem.errors().iter().zip(&q).map(|(e, x)| e * x).sum::<f64>()
                / problem.f_opt();
            let closed = model.error_at(t);
            prop_assert!((closed - direct).abs() <= 1e-9, "t = {}: {} vs {}", t, closed, direct);
            q = problem.kernel().apply(&q);
        }
    }

    #[test]
    fn induction_step(c in common::chain(8), t in 1u64..100) {
        let kernel = c.kernel::<f64>();
        let factors = compute_power_factors(&kernel);
        let next = factors.kernel_power(t).mul(kernel.matrix());
        prop_assert!(factors.kernel_power(t + 1).max_abs_diff(&next) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_power_and_error_agree(c in common::chain(8)) {
        let problem = c.problem::<Rational>();
        let kernel = problem.kernel();
        let factors = compute_power_factors(kernel);
        let model = coefficients(&problem, &factors).unwrap();
        let mut direct = SquareMatrix::identity(kernel.dim());
        for t in 0..=100u64 {
            if t % 10 == 0 || t < 5 {
                prop_assert_eq!(&factors.kernel_power(t), &direct, "t = {}", t);
            }
            direct = direct.mul(kernel.matrix());
        }
        for t in [0u64, 1, 2, 3, 7, 20, 50, 100] {
            prop_assert_eq!(model.error_at(t), exact_error_via_matrix(&problem, t), "t = {}", t);
        }
    }

    #[test]
    fn factors_sum_to_kernel_entries(c in common::chain(8)) {
        let kernel = c.kernel::<Rational>();
        let factors = compute_power_factors(&kernel);
        let n = kernel.dim();
        for i in 0..n {
            for j in 0..n {
                let total = (i..=j).fold(Rational::from_integer(0.into()), |acc, k| acc + factors.factor(i, j, k));
                let expected = if i <= j { kernel.entry(i, j).clone() } else { Rational::from_integer(0.into()) };
                prop_assert_eq!(total, expected, "({}, {})", i, j);
            }
        }
    }

    #[test]
    fn factored_recursion_equals_reference(c in common::chain(8)) {
        let kernel = c.kernel::<Rational>();
        let fast = compute_power_factors(&kernel);
        let slow = reference_power_factors(&kernel, &mut OpCount::default());
        prop_assert_eq!(fast, slow);
    }
}

#[test]
fn brute_force_power_of_zero_is_identity() {
    let m = SquareMatrix::<f64>::from_rows(vec![vec![0.5, 0.25], vec![0.0, 0.25]]).unwrap();
    assert_eq!(brute_force_power(&m, 0), SquareMatrix::identity(2));
}
