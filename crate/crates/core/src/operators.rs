//! The uniformly elliptic nonlinearities `F` and their ellipticity checks.
//!
//! Sign convention: `F` is nonincreasing in the matrix order, so
//! `F(X) = -tr X` is the (negative) Laplacian and the Pucci operators are
//!
//! ```text
//! P-(X) = -Λ tr X⁺ - λ tr X⁻
//! P+(X) = -λ tr X⁺ - Λ tr X⁻ = -P-(-X)
//! ```
//!
//! where `tr X⁺` (`tr X⁻`) sums the positive (negative) eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::matrix::SymMatrix;

/// Absolute eigenvalue tolerance for positive semidefiniteness checks.
pub const TOL_EIG: f64 = 1e-10;

/// Ellipticity constants `0 < λ <= Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityConstants {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
}

impl EllipticityConstants {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<EllipticityConstants> {
        if !(lambda > 0.0 && lambda.is_finite() && big_lambda.is_finite()) {
            return config(format!("lambda must be positive and finite (got {lambda})"));
        }
        if big_lambda < lambda {
            return config(format!(
                "need lambda <= Lambda (got lambda = {lambda}, Lambda = {big_lambda})"
            ));
        }
        Ok(EllipticityConstants { lambda, big_lambda })
    }

    pub fn unit() -> EllipticityConstants {
        EllipticityConstants {
            lambda: 1.0,
            big_lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    NegLaplacian,
    PucciMinus,
    PucciPlus,
}

impl std::str::FromStr for OperatorKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<OperatorKind> {
        match s {
            "neg-laplacian" => Ok(OperatorKind::NegLaplacian),
            "pucci-minus" => Ok(OperatorKind::PucciMinus),
            "pucci-plus" => Ok(OperatorKind::PucciPlus),
            other => config(format!(
                "unknown operator '{other}' (expected neg-laplacian, pucci-minus or pucci-plus)"
            )),
        }
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::NegLaplacian => "neg-laplacian",
            OperatorKind::PucciMinus => "pucci-minus",
            OperatorKind::PucciPlus => "pucci-plus",
        })
    }
}

/// One of the built-in operators together with its ellipticity constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticOperator {
    pub kind: OperatorKind,
    pub constants: EllipticityConstants,
}

impl EllipticOperator {
    pub fn neg_laplacian() -> EllipticOperator {
        EllipticOperator {
            kind: OperatorKind::NegLaplacian,
            constants: EllipticityConstants::unit(),
        }
    }

    pub fn pucci_minus(constants: EllipticityConstants) -> EllipticOperator {
        EllipticOperator {
            kind: OperatorKind::PucciMinus,
            constants,
        }
    }

    pub fn pucci_plus(constants: EllipticityConstants) -> EllipticOperator {
        EllipticOperator {
            kind: OperatorKind::PucciPlus,
            constants,
        }
    }

    /// The constants actually in force: `λ = Λ = 1` for the Laplacian.
    pub fn new(kind: OperatorKind, constants: EllipticityConstants) -> EllipticOperator {
        match kind {
            OperatorKind::NegLaplacian => EllipticOperator::neg_laplacian(),
            _ => EllipticOperator { kind, constants },
        }
    }

    /// `F(X)`.
    pub fn eval(&self, x: &SymMatrix) -> f64 {
        match self.kind {
            OperatorKind::NegLaplacian => -x.trace(),
            OperatorKind::PucciMinus => pucci_minus(&self.constants, x),
            OperatorKind::PucciPlus => pucci_plus(&self.constants, x),
        }
    }

    /// Slacks `(F(X) - F(X+Y) - λ tr Y, Λ tr Y - (F(X) - F(X+Y)))` of the
    /// uniform ellipticity inequality; `Y` must be positive semidefinite.
    pub fn ellipticity_gap(&self, x: &SymMatrix, y: &SymMatrix) -> Result<(f64, f64)> {
        if !y.is_psd(TOL_EIG) {
            return domain("ellipticity gap needs a positive semidefinite increment Y");
        }
        let c = self.constants;
        let drop = self.eval(x) - self.eval(&x.add(y));
        let tr = y.trace();
        Ok((drop - c.lambda * tr, c.big_lambda * tr - drop))
    }

    /// Slacks `(F(X+Y) - F(X) - P-(Y), P+(Y) - (F(X+Y) - F(X)))` of the
    /// Pucci sandwich, for any symmetric `Y`.
    pub fn pucci_sandwich(&self, x: &SymMatrix, y: &SymMatrix) -> (f64, f64) {
        let c = self.constants;
        let diff = self.eval(&x.add(y)) - self.eval(x);
        (diff - pucci_minus(&c, y), pucci_plus(&c, y) - diff)
    }

    /// The evaluator `X -> a^{-1} F(a X)`.
    pub fn rescaled(&self, a: f64) -> Result<Rescaled> {
        if !(a > 0.0 && a.is_finite()) {
            return domain(format!("rescaling factor must be positive (got {a})"));
        }
        Ok(Rescaled { op: *self, a })
    }
}

/// `X -> a^{-1} F(a X)`; it has the same ellipticity constants as `F`.
#[derive(Debug, Clone, Copy)]
pub struct Rescaled {
    op: EllipticOperator,
    a: f64,
}

impl Rescaled {
    pub fn eval(&self, x: &SymMatrix) -> f64 {
        self.op.eval(&x.scale(self.a)) / self.a
    }

    pub fn factor(&self) -> f64 {
        self.a
    }
}

/// `P-(X) = -Λ tr X⁺ - λ tr X⁻`.
pub fn pucci_minus(c: &EllipticityConstants, x: &SymMatrix) -> f64 {
    x.eigenvalues()
        .into_iter()
        .map(|l| if l > 0.0 { -c.big_lambda * l } else { -c.lambda * l })
        .sum()
}

/// `P+(X) = -λ tr X⁺ - Λ tr X⁻`.
pub fn pucci_plus(c: &EllipticityConstants, x: &SymMatrix) -> f64 {
    x.eigenvalues()
        .into_iter()
        .map(|l| if l > 0.0 { -c.lambda * l } else { -c.big_lambda * l })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c12() -> EllipticityConstants {
        EllipticityConstants::new(1.0, 2.0).unwrap()
    }

    fn all_ops() -> Vec<EllipticOperator> {
        vec![
            EllipticOperator::neg_laplacian(),
            EllipticOperator::pucci_minus(c12()),
            EllipticOperator::pucci_plus(c12()),
        ]
    }

    fn random_sym(rng: &mut ChaCha8Rng) -> SymMatrix {
        let (a, b, d) = (
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        SymMatrix::from_rows(&[vec![a, b], vec![b, d]]).unwrap()
    }

    fn random_psd(rng: &mut ChaCha8Rng) -> SymMatrix {
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        SymMatrix::diag(&[rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)]).rotated(theta)
    }

    #[test]
    fn pucci_minus_examples() {
        let p = EllipticOperator::pucci_minus(c12());
        assert_eq!(p.eval(&SymMatrix::diag(&[1.0, -1.0])), -1.0);
        assert_eq!(p.eval(&SymMatrix::identity(2)), -4.0);
        for op in all_ops() {
            assert_eq!(op.eval(&SymMatrix::zeros(2)), 0.0);
        }
        let unit = EllipticOperator::pucci_minus(EllipticityConstants::unit());
        let x = SymMatrix::from_rows(&[vec![0.3, -1.2], vec![-1.2, 2.5]]).unwrap();
        assert_abs_diff_eq!(unit.eval(&x), -x.trace(), epsilon = 1e-14);
    }

    #[test]
    fn ellipticity_gap_examples() {
        let lap = EllipticOperator::neg_laplacian();
        let x = SymMatrix::from_rows(&[vec![0.7, 0.1], vec![0.1, -2.0]]).unwrap();
        let (lo, hi) = lap.ellipticity_gap(&x, &SymMatrix::identity(2)).unwrap();
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 0.0, epsilon = 1e-14);

        let p = EllipticOperator::pucci_minus(c12());
        let gap = p
            .ellipticity_gap(&SymMatrix::zeros(2), &SymMatrix::diag(&[1.0, 0.0]))
            .unwrap();
        assert_eq!(gap, (1.0, 0.0));

        let not_psd = SymMatrix::diag(&[1.0, -0.5]);
        assert!(matches!(
            p.ellipticity_gap(&x, &not_psd),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn ellipticity_gap_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for op in all_ops() {
            for _ in 0..100 {
                let x = random_sym(&mut rng);
                let y = random_psd(&mut rng);
                let (lo, hi) = op.ellipticity_gap(&x, &y).unwrap();
                assert!(lo >= -1e-12 && hi >= -1e-12, "{op:?} {lo} {hi}");
            }
        }
    }

    #[test]
    fn sandwich_examples() {
        let p = EllipticOperator::pucci_minus(c12());
        let x = SymMatrix::diag(&[1.0, 0.0]);
        assert_eq!(p.pucci_sandwich(&x, &SymMatrix::zeros(2)), (0.0, 0.0));
        assert_eq!(
            p.pucci_sandwich(&x, &SymMatrix::diag(&[-1.0, 1.0])),
            (1.0, 1.0)
        );
        let lap = EllipticOperator::neg_laplacian();
        let y = SymMatrix::from_rows(&[vec![-0.4, 0.9], vec![0.9, 1.3]]).unwrap();
        let (lo, hi) = lap.pucci_sandwich(&x, &y);
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rescaling() {
        let p = EllipticOperator::pucci_minus(c12());
        let x = SymMatrix::diag(&[1.0, -1.0]);
        assert_eq!(p.rescaled(1.0).unwrap().eval(&x), p.eval(&x));
        assert_eq!(p.rescaled(3.0).unwrap().eval(&x), -1.0);
        assert!(matches!(
            EllipticOperator::neg_laplacian().rescaled(0.0),
            Err(crate::Error::Domain(_))
        ));
        assert!(EllipticOperator::neg_laplacian().rescaled(-2.0).is_err());
    }

    #[test]
    fn constants_validation() {
        assert!(EllipticityConstants::new(2.0, 1.0).is_err());
        assert!(EllipticityConstants::new(0.0, 1.0).is_err());
        assert!(EllipticityConstants::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn kind_round_trips_through_str() {
        for op in all_ops() {
            let s = op.kind.to_string();
            assert_eq!(s.parse::<OperatorKind>().unwrap(), op.kind);
        }
        assert!("laplacian".parse::<OperatorKind>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sym() -> impl Strategy<Value = SymMatrix> {
            (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
                .prop_map(|(a, b, d)| SymMatrix::from_rows(&[vec![a, b], vec![b, d]]).unwrap())
        }

        proptest! {
            #[test]
            fn sandwiched_between_pucci(x in sym(), l in 0.1..2.0f64, extra in 0.0..3.0f64) {
                let c = EllipticityConstants::new(l, l + extra).unwrap();
                for op in [EllipticOperator::pucci_minus(c), EllipticOperator::pucci_plus(c),
                           EllipticOperator::new(OperatorKind::NegLaplacian, c)] {
                    // The Laplacian only fits between Pucci operators whose
                    // constants bracket 1.
                    let cc = if op.kind == OperatorKind::NegLaplacian {
                        EllipticityConstants::new(l.min(1.0), (l + extra).max(1.0)).unwrap()
                    } else { c };
                    let v = op.eval(&x);
                    let scale = 1.0 + v.abs();
                    prop_assert!(pucci_minus(&cc, &x) <= v + 1e-12 * scale);
                    prop_assert!(v <= pucci_plus(&cc, &x) + 1e-12 * scale);
                }
            }

            #[test]
            fn monotone_and_homogeneous(x in sym(), theta in 0.0..3.2f64,
                                        y0 in 0.0..2.0f64, y1 in 0.0..2.0f64, t in 0.01..50.0f64) {
                let y = SymMatrix::diag(&[y0, y1]).rotated(theta);
                for op in all_ops() {
                    let fx = op.eval(&x);
                    prop_assert!(op.eval(&x.add(&y)) <= fx + 1e-12 * (1.0 + fx.abs()));
                    let ft = op.eval(&x.scale(t));
                    prop_assert!((ft - t * fx).abs() <= 1e-12 * (1.0 + ft.abs()));
                }
            }

            #[test]
            fn plus_is_dual_of_minus(x in sym(), l in 0.1..2.0f64, extra in 0.0..3.0f64) {
                let c = EllipticityConstants::new(l, l + extra).unwrap();
                let lhs = pucci_plus(&c, &x);
                let rhs = -pucci_minus(&c, &x.neg());
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }
}
