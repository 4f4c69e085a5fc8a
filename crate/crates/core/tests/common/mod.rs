#![allow(dead_code)]

use levelchain::scalar::convert;
use levelchain::{LevelProblem, Rational, Scalar, SquareMatrix, TriangularKernel};
use num_traits::One;
use proptest::prelude::*;

/// Randomized chain data in exact arithmetic. Diagonal entries come from a
/// grid of step 1/1000 and keep pairwise gaps above 0.05.
#[derive(Debug, Clone)]
pub struct RandomChain {
    pub matrix: SquareMatrix<Rational>,
    pub errors: Vec<Rational>,
    pub f_opt: Rational,
    pub q0: Vec<Rational>,
}

impl RandomChain {
    pub fn kernel<S: Scalar>(&self) -> TriangularKernel<S> {
        TriangularKernel::new(self.matrix.map(convert::<Rational, S>)).unwrap()
    }

    pub fn problem<S: Scalar>(&self) -> LevelProblem<S> {
        LevelProblem::from_explicit(
            self.matrix.map(convert::<Rational, S>),
            self.errors.iter().map(convert).collect(),
            convert(&self.f_opt),
            self.q0.iter().map(convert).collect(),
        )
        .unwrap()
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn spread_diagonal(raw: Vec<u16>) -> Option<Vec<i64>> {
    let mut sorted: Vec<i64> = raw.iter().map(|&x| x as i64).collect();
    sorted.sort_unstable();
    if sorted.windows(2).all(|w| w[1] - w[0] > 50) {
        Some(raw.iter().map(|&x| x as i64).collect())
    } else {
        None
    }
}

pub fn chain(max_dim: usize) -> impl Strategy<Value = RandomChain> {
    (1..=max_dim)
        .prop_flat_map(|l| {
            (
                prop::collection::vec(0u16..1000, l).prop_filter_map("diagonal gap", spread_diagonal),
                prop::collection::vec(prop::collection::vec(0u32..5, l + 1), l),
                prop::collection::vec(1u32..6, l),
                prop::collection::vec(0u32..4, l),
                1u32..10,
            )
        })
        .prop_map(|(diag, weights, steps, q_weights, headroom)| {
            let l = diag.len();
            let mut m = SquareMatrix::<Rational>::zeros(l);
            for j in 0..l {
                let stay = q(diag[j], 1000);
                let leave = Rational::one() - stay.clone();
                m.set(j, j, stay);
                // weights[j][i] for i < j, weights[j][l] is the escape weight.
                let w = &weights[j];
                let total: u32 = w[..j].iter().sum::<u32>() + w[l] + 1;
                for i in 0..j {
                    m.set(i, j, leave.clone() * q(w[i] as i64, total as i64));
                }
            }
            let mut errors = Vec::with_capacity(l);
            let mut acc = 0i64;
            for s in steps {
                acc += s as i64;
                errors.push(q(acc, 1));
            }
            let f_opt = q(acc + headroom as i64, 1);
            let mut qw: Vec<i64> = q_weights.iter().map(|&x| x as i64).collect();
            if qw.iter().all(|&x| x == 0) {
                qw[l - 1] = 1;
            }
            let qs: i64 = qw.iter().sum();
            RandomChain {
                matrix: m,
                errors,
                f_opt,
                q0: qw.iter().map(|&x| q(x, qs)).collect(),
            }
        })
}

