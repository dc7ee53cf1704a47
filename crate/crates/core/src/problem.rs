//! Problem instances: `|p + ∇u|^γ F(D²u) = f` in the unit ball with
//! Dirichlet data `g` on the boundary band.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::grid::{Grid, Point, ScalarField, MAX_DIM};
use crate::operators::{EllipticOperator, EllipticityConstants, OperatorKind};

/// Named closed-form functions used for boundary data, right-hand sides and
/// analytic fields.
///
/// | name              | function                  |
/// |-------------------|---------------------------|
/// | `zero`            | `0`                       |
/// | `const:c`         | `c`                       |
/// | `linear-x1`       | `x₁`                      |
/// | `linear-x2`       | `x₂`                      |
/// | `linear:q1,q2,..` | `q · x`                   |
/// | `saddle`          | `x₁² - x₂²`               |
/// | `harmonic-x1x2`   | `x₁ x₂`                   |
/// | `radial-3-2`      | `|x|^{3/2}`               |
/// | `radial-power:a`  | `|x|^{1+a}`               |
/// | `abs-x1`          | `|x₁|`                    |
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Zero,
    Const(f64),
    LinearX1,
    LinearX2,
    Linear(Point),
    Saddle,
    HarmonicX1X2,
    Radial32,
    RadialPower(f64),
    AbsX1,
}

impl Preset {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let at = |k: usize| x.get(k).copied().unwrap_or(0.0);
        let r = || x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            Preset::Zero => 0.0,
            Preset::Const(c) => *c,
            Preset::LinearX1 => at(0),
            Preset::LinearX2 => at(1),
            Preset::Linear(q) => x.iter().zip(q).map(|(a, b)| a * b).sum(),
            Preset::Saddle => at(0) * at(0) - at(1) * at(1),
            Preset::HarmonicX1X2 => at(0) * at(1),
            Preset::Radial32 => r().powf(1.5),
            Preset::RadialPower(a) => r().powf(1.0 + a),
            Preset::AbsX1 => at(0).abs(),
        }
    }

    /// Whether the function is affine, in which case best-plane oscillations
    /// vanish identically.
    pub fn is_affine(&self) -> bool {
        matches!(
            self,
            Preset::Zero | Preset::Const(_) | Preset::LinearX1 | Preset::LinearX2 | Preset::Linear(_)
        )
    }
}

impl FromStr for Preset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Preset> {
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| crate::Error::Config(format!("bad number '{v}' in preset '{s}'")))
        };
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let preset = match (name, arg) {
            ("zero", None) => Preset::Zero,
            ("const", Some(a)) => Preset::Const(num(a)?),
            ("linear-x1", None) => Preset::LinearX1,
            ("linear-x2", None) => Preset::LinearX2,
            ("linear", Some(a)) => {
                let q: Vec<f64> = a.split(',').map(num).collect::<Result<_>>()?;
                if q.is_empty() || q.len() > MAX_DIM {
                    return config(format!("linear preset needs 1 to 3 coefficients: '{s}'"));
                }
                Preset::Linear(crate::grid::point(&q))
            }
            ("saddle", None) => Preset::Saddle,
            ("harmonic-x1x2", None) => Preset::HarmonicX1X2,
            ("radial-3-2", None) => Preset::Radial32,
            ("radial-power", Some(a)) => {
                let a = num(a)?;
                if !(a > 0.0 && a <= 1.0) {
                    return config(format!("radial-power exponent must lie in (0, 1]: '{s}'"));
                }
                Preset::RadialPower(a)
            }
            ("abs-x1", None) => Preset::AbsX1,
            _ => return config(format!("unknown preset '{s}'")),
        };
        Ok(preset)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Zero => write!(f, "zero"),
            Preset::Const(c) => write!(f, "const:{c}"),
            Preset::LinearX1 => write!(f, "linear-x1"),
            Preset::LinearX2 => write!(f, "linear-x2"),
            Preset::Linear(q) => {
                let mut end = MAX_DIM;
                while end > 1 && q[end - 1] == 0.0 {
                    end -= 1;
                }
                let parts: Vec<String> = q[..end].iter().map(|v| v.to_string()).collect();
                write!(f, "linear:{}", parts.join(","))
            }
            Preset::Saddle => write!(f, "saddle"),
            Preset::HarmonicX1X2 => write!(f, "harmonic-x1x2"),
            Preset::Radial32 => write!(f, "radial-3-2"),
            Preset::RadialPower(a) => write!(f, "radial-power:{a}"),
            Preset::AbsX1 => write!(f, "abs-x1"),
        }
    }
}

impl Serialize for Preset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Preset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Preset, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A preset multiplied by a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub preset: Preset,
    pub scale: f64,
}

impl ClosedForm {
    pub fn new(preset: Preset) -> ClosedForm {
        ClosedForm { preset, scale: 1.0 }
    }

    pub fn scaled(preset: Preset, scale: f64) -> ClosedForm {
        ClosedForm { preset, scale }
    }

    pub fn constant(c: f64) -> ClosedForm {
        ClosedForm::new(Preset::Const(c))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.scale * self.preset.eval(x)
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }
}

/// Constant right-hand side making `u = |x|^{1+α}`, `α = 1/(1+γ)`, an exact
/// solution of `|∇u|^γ F(D²u) = f`.
///
/// With `C = (1+α)^{1+γ}(d+α-1)` and all Hessian eigenvalues of `u`
/// positive, `F(D²u)` is `-c·tr D²u` where `c` is 1 for the Laplacian, `Λ`
/// for `P-` and `λ` for `P+`; hence `f = -c·C`.
pub fn manufactured_rhs(dim: usize, gamma: f64, op: &EllipticOperator) -> f64 {
    let alpha = 1.0 / (1.0 + gamma);
    let c = (1.0 + alpha).powf(1.0 + gamma) * (dim as f64 + alpha - 1.0);
    let weight = match op.kind {
        OperatorKind::NegLaplacian => 1.0,
        OperatorKind::PucciMinus => op.constants.big_lambda,
        OperatorKind::PucciPlus => op.constants.lambda,
    };
    -weight * c
}

/// A full instance of the Dirichlet problem on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub dim: usize,
    pub gamma: f64,
    /// Frozen slope `p`; only the first `dim` entries are used.
    pub drift: Point,
    pub operator: EllipticOperator,
    pub rhs: ClosedForm,
    pub boundary: ClosedForm,
    /// Points per axis.
    pub n: usize,
    pub stencil_radius: usize,
}

impl ProblemSpec {
    /// A two-dimensional instance with the default stencil radius 2, zero
    /// slope and zero right-hand side.
    pub fn new(op: EllipticOperator, gamma: f64, boundary: ClosedForm, n: usize) -> ProblemSpec {
        ProblemSpec {
            dim: 2,
            gamma,
            drift: [0.0; MAX_DIM],
            operator: op,
            rhs: ClosedForm::new(Preset::Zero),
            boundary,
            n,
            stencil_radius: 2,
        }
    }

    pub fn with_rhs(mut self, rhs: ClosedForm) -> ProblemSpec {
        self.rhs = rhs;
        self
    }

    pub fn with_drift(mut self, p: &[f64]) -> ProblemSpec {
        self.drift = crate::grid::point(p);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> ProblemSpec {
        self.gamma = gamma;
        self
    }

    pub fn with_n(mut self, n: usize) -> ProblemSpec {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return config(format!("gamma must be finite and >= 0 (got {})", self.gamma));
        }
        if self.drift.iter().any(|v| !v.is_finite()) {
            return config("slope p must be finite");
        }
        if self.drift[self.dim.min(MAX_DIM)..].iter().any(|&v| v != 0.0) {
            return config(format!("slope p has more than d = {} components", self.dim));
        }
        let c = self.operator.constants;
        EllipticityConstants::new(c.lambda, c.big_lambda)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        self.validate()?;
        Ok(Arc::new(Grid::new(self.dim, self.n, self.stencil_radius)?))
    }
}
