//! Seeded randomized checks of the Pucci operators against an
//! eigen-decomposition oracle.

use flatlab::operators::{pucci_minus, pucci_plus};
use flatlab::{EllipticOperator, EllipticityConstants, OperatorKind, Result, SymMatrix};
use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Absolute tolerance of every check.
pub const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub cases: usize,
    /// `max |P±(X) - oracle|` over both operators.
    pub max_oracle_error: f64,
    /// Smallest slack of `P-(Y) <= F(X+Y) - F(X) <= P+(Y)` over all three
    /// operators.
    pub min_sandwich_slack: f64,
    /// `max |a⁻¹F(aX) - F(X)|` over all three operators.
    pub max_homogeneity_error: f64,
    pub oracle_pass: bool,
    pub sandwich_pass: bool,
    pub homogeneity_pass: bool,
    pub pass: bool,
}

fn random_sym(rng: &mut ChaCha8Rng) -> SymMatrix {
    let a = rng.random_range(-1.0..1.0);
    let b = rng.random_range(-1.0..1.0);
    let d = rng.random_range(-1.0..1.0);
    SymMatrix::from_rows(&[vec![a, b], vec![b, d]]).expect("2x2 symmetric")
}

fn oracle(c: &EllipticityConstants, x: &SymMatrix) -> (f64, f64) {
    let m = Matrix2::new(x.get(0, 0), x.get(0, 1), x.get(1, 0), x.get(1, 1));
    let eig = SymmetricEigen::new(m).eigenvalues;
    let (mut lo, mut hi) = (0.0, 0.0);
    for &l in eig.iter() {
        if l > 0.0 {
            lo -= c.big_lambda * l;
            hi -= c.lambda * l;
        } else {
            lo -= c.lambda * l;
            hi -= c.big_lambda * l;
        }
    }
    (lo, hi)
}

/// Runs `cases` random instances. Each case draws constants
/// `0.5 <= λ <= 1 <= Λ <= 4`, symmetric `X, Y` with entries in `[-1, 1]` and
/// a scale `a` in `[0.1, 10]`.
pub fn run(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_oracle_error = 0.0f64;
    let mut min_sandwich_slack = f64::INFINITY;
    let mut max_homogeneity_error = 0.0f64;
    for _ in 0..cases {
        let lambda = rng.random_range(0.5..=1.0);
        let big_lambda = rng.random_range(1.0..=4.0);
        let c = EllipticityConstants::new(lambda, big_lambda)?;
        let x = random_sym(&mut rng);
        let y = random_sym(&mut rng);
        let a = rng.random_range(0.1..=10.0);

        let (lo, hi) = oracle(&c, &x);
        max_oracle_error = max_oracle_error
            .max((pucci_minus(&c, &x) - lo).abs())
            .max((pucci_plus(&c, &x) - hi).abs());

        for kind in [OperatorKind::NegLaplacian, OperatorKind::PucciMinus, OperatorKind::PucciPlus] {
            let op = EllipticOperator::new(kind, c);
            let (s1, s2) = op.pucci_sandwich(&x, &y);
            min_sandwich_slack = min_sandwich_slack.min(s1).min(s2);
            let h = op.rescaled(a)?.eval(&x) - op.eval(&x);
            max_homogeneity_error = max_homogeneity_error.max(h.abs());
        }
    }
    if cases == 0 {
        min_sandwich_slack = 0.0;
    }
    let oracle_pass = max_oracle_error <= TOL;
    let sandwich_pass = min_sandwich_slack >= -TOL;
    let homogeneity_pass = max_homogeneity_error <= TOL;
    Ok(SuiteReport {
        seed,
        cases,
        max_oracle_error,
        min_sandwich_slack,
        max_homogeneity_error,
        oracle_pass,
        sandwich_pass,
        homogeneity_pass,
        pass: oracle_pass && sandwich_pass && homogeneity_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes_and_repeats() {
        let a = run(3, 50).unwrap();
        assert!(a.pass, "{a:?}");
        assert_eq!(a, run(3, 50).unwrap());
    }
}
