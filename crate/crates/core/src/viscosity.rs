//! Viscosity checks on grid fields.
//!
//! [`equivalence`] solves a problem with `f = 0` twice, once as given and
//! once as `F(D²u) = 0`, and compares. [`touching_check`] tests a field with
//! quadratic test functions: when `u - φ` has a strict discrete local minimum
//! at a node `x` (over the stencil neighbourhood), `φ` touches `u` from below
//! and the supersolution inequality `|p + ∇φ(x)|^γ F(D²φ) >= f(x)` should
//! hold up to `tol_visc`; maxima test the subsolution inequality.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::grid::{Grid, Point, ScalarField, MAX_DIM};
use crate::matrix::SymMatrix;
use crate::operators::EllipticOperator;
use crate::problem::ProblemSpec;
use crate::solver::{solve, SolveOptions, SolveReport};
use crate::stencil::{default_directions, Stencil};

/// Result of [`equivalence`].
#[derive(Debug, Clone)]
pub struct Equivalence {
    /// Solution of `|p + ∇u|^γ F(D²u) = 0`.
    pub degenerate: ScalarField,
    /// Solution of `F(D²u) = 0` with the same data and grid.
    pub uniform: ScalarField,
    /// `max |degenerate - uniform|` over interior nodes.
    pub max_gap: f64,
    pub degenerate_report: SolveReport,
    pub uniform_report: SolveReport,
}

/// Solves `spec` (which must have `f ≡ 0`) and its `γ = 0` counterpart and
/// measures the gap. A solve that does not converge is a numerical error.
pub fn equivalence(spec: &ProblemSpec, opts: &SolveOptions) -> Result<Equivalence> {
    let grid = spec.grid()?;
    let f = spec.rhs.sample(&grid);
    if f.max_abs() != 0.0 {
        return config("the equivalence test needs a zero right-hand side");
    }
    let (degenerate, degenerate_report) = solve(spec, opts)?;
    let mut uniform_spec = spec.clone().with_gamma(0.0);
    uniform_spec.drift = [0.0; MAX_DIM];
    let (uniform, uniform_report) = solve(&uniform_spec, opts)?;
    for (name, rep) in [("degenerate", &degenerate_report), ("uniform", &uniform_report)] {
        if !rep.converged {
            return Err(Error::Numerical(format!(
                "{name} solve stopped after {} sweeps at residual {:e} (tol {:e})",
                rep.iterations, rep.final_residual, rep.tol
            )));
        }
    }
    let max_gap = grid
        .interior()
        .iter()
        .map(|&i| (degenerate.get(i) - uniform.get(i)).abs())
        .fold(0.0, f64::max);
    Ok(Equivalence { degenerate, uniform, max_gap, degenerate_report, uniform_report })
}

/// A quadratic test Hessian with a label such as `diag(2,-1)@45x0.5`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticTest {
    pub id: usize,
    pub label: String,
    pub a: SymMatrix,
}

/// Hessians `±I`, `±diag(1,-1)`, `±diag(2,-1)` and `±diag(1,-2)`, rotated by
/// 0°, 30°, 45° and 60° (in the `x₁x₂` plane) and scaled by 0.5, 1 and 2,
/// with duplicates removed.
///
/// The saddles with nonzero trace, `diag(2,-1)` and `diag(1,-2)`, are what
/// detect convex kinks such as `|x₁|` for the Laplacian.
pub fn default_catalogue(dim: usize) -> Vec<QuadraticTest> {
    let pad = |d: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for (k, x) in d.iter().enumerate().take(dim) {
            v[k] = *x;
        }
        v
    };
    let bases: Vec<(&str, Vec<f64>)> = vec![
        ("I", vec![1.0; dim]),
        ("diag(1,-1)", pad(&[1.0, -1.0])),
        ("diag(2,-1)", pad(&[2.0, -1.0])),
        ("diag(1,-2)", pad(&[1.0, -2.0])),
    ];
    let angles: &[u32] = if dim == 2 { &[0, 30, 45, 60] } else { &[0] };
    let mut out: Vec<QuadraticTest> = Vec::new();
    for (name, d) in &bases {
        for sign in [1.0, -1.0] {
            for &deg in angles {
                for scale in [0.5, 1.0, 2.0] {
                    let mut a = SymMatrix::diag(d).scale(sign * scale);
                    if deg != 0 {
                        a = a.rotated(deg as f64 * PI / 180.0);
                    }
                    let dup = out.iter().any(|t| {
                        (0..dim).all(|i| (0..dim).all(|j| (t.a.get(i, j) - a.get(i, j)).abs() < 1e-12))
                    });
                    if !dup {
                        let s = if sign > 0.0 { "" } else { "-" };
                        out.push(QuadraticTest {
                            id: out.len(),
                            label: format!("{s}{name}@{deg}x{scale}"),
                            a,
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `u - φ` has a local minimum: supersolution test.
    Below,
    /// `u - φ` has a local maximum: subsolution test.
    Above,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Below => "below",
            Side::Above => "above",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlopeChoice {
    Zero,
    /// The centered difference gradient of `u` at the node.
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TouchingEvent {
    pub node: usize,
    pub x: Point,
    pub test: usize,
    pub slope: SlopeChoice,
    /// `∇φ(x)`.
    pub b: Point,
    pub side: Side,
    /// `G F(A) - f` from below, `f - G F(A)` from above; negative values
    /// violate the inequality.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchingOptions {
    /// Absolute tolerance; defaults to `10 h`.
    pub tol_visc: Option<f64>,
    /// Require a strict extremum of `u - φ` (the default). Without it, ties
    /// up to `1e-12 · max(1, ‖u‖∞)` count as touching.
    pub strict: bool,
}

impl Default for TouchingOptions {
    fn default() -> Self {
        TouchingOptions { tol_visc: None, strict: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchingReport {
    pub tol_visc: f64,
    pub tests: Vec<QuadraticTest>,
    pub events: Vec<TouchingEvent>,
    /// Indices into `events` with `slack < -tol_visc`.
    pub violations: Vec<usize>,
    pub nodes_checked: usize,
}

/// Tests every interior node against every `(A, b)` with `A` from `tests`
/// and `b ∈ {0, ∇u(x)}`, where `φ(y) = ½ A(y-x)·(y-x) + b·(y-x)`.
pub fn touching_check(
    u: &ScalarField,
    gamma: f64,
    p: &Point,
    op: &EllipticOperator,
    f: Option<&ScalarField>,
    tests: &[QuadraticTest],
    opts: &TouchingOptions,
) -> Result<TouchingReport> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return config(format!("gamma must be finite and >= 0 (got {gamma})"));
    }
    let grid: &Arc<Grid> = u.grid();
    let dim = grid.dim();
    if tests.iter().any(|t| t.a.dim() != dim) {
        return config("test matrices must match the grid dimension");
    }
    let tol_visc = opts.tol_visc.unwrap_or(10.0 * grid.h());
    let dirs = default_directions(grid);
    let stencil = Stencil::new(grid, &dirs)?;
    let h = grid.h();
    let mut offsets: Vec<(isize, Point)> = Vec::new();
    for d in dirs.directions() {
        for s in [1i64, -1] {
            let step = d.step.map(|v| v * s);
            let mut y = [0.0; MAX_DIM];
            for k in 0..dim {
                y[k] = step[k] as f64 * h;
            }
            offsets.push((grid.flat_offset(&step), y));
        }
    }
    let tie = if opts.strict { 0.0 } else { 1e-12 * u.max_abs().max(1.0) };
    let values = u.values();

    let mut events = Vec::new();
    for &i in grid.interior() {
        let grad = stencil.gradient_raw(values, i);
        let fx = f.map_or(0.0, |f| f.get(i));
        for t in tests {
            let fa = op.eval(&t.a);
            for (slope, b) in [(SlopeChoice::Zero, [0.0; MAX_DIM]), (SlopeChoice::Gradient, grad)] {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (o, y) in &offsets {
                    let j = (i as isize + o) as usize;
                    let phi = 0.5 * t.a.quad_form(y) + (0..dim).map(|k| b[k] * y[k]).sum::<f64>();
                    let d = values[j] - values[i] - phi;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                let below = if opts.strict { lo > 0.0 } else { lo >= -tie };
                let above = if opts.strict { hi < 0.0 } else { hi <= tie };
                if !(below || above) {
                    continue;
                }
                let g = if gamma == 0.0 {
                    1.0
                } else {
                    (0..dim).map(|k| (p[k] + b[k]).powi(2)).sum::<f64>().sqrt().powf(gamma)
                };
                let val = g * fa - fx;
                let x = grid.coords(i);
                for (side, hit, slack) in [(Side::Below, below, val), (Side::Above, above, -val)] {
                    if hit {
                        events.push(TouchingEvent { node: i, x, test: t.id, slope, b, side, slack });
                    }
                }
            }
        }
    }
    let violations = events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.slack < -tol_visc)
        .map(|(k, _)| k)
        .collect();
    Ok(TouchingReport {
        tol_visc,
        tests: tests.to_vec(),
        events,
        violations,
        nodes_checked: grid.interior().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::EllipticityConstants;

    #[test]
    fn catalogue_contents() {
        let cat = default_catalogue(2);
        // ±I are rotation invariant: 2 signs x 3 scales.
        assert!(cat.iter().any(|t| t.label == "diag(2,-1)@0x2"));
        assert!(cat.iter().any(|t| t.label == "-I@0x0.5"));
        assert_eq!(cat.iter().filter(|t| t.label.contains("I@")).count(), 6);
        for (k, t) in cat.iter().enumerate() {
            assert_eq!(t.id, k);
        }
        assert_eq!(default_catalogue(3)[0].a.dim(), 3);
    }

    #[test]
    fn kink_fails_the_supersolution_test() {
        let grid = Arc::new(Grid::new(2, 33, 2).unwrap());
        let u = ScalarField::from_fn(&grid, |x| x[0].abs());
        let rep = touching_check(
            &u,
            0.0,
            &[0.0; 3],
            &EllipticOperator::neg_laplacian(),
            None,
            &default_catalogue(2),
            &TouchingOptions::default(),
        )
        .unwrap();
        let flagged: Vec<&TouchingEvent> = rep.violations.iter().map(|&k| &rep.events[k]).collect();
        assert!(!flagged.is_empty());
        assert!(flagged.iter().all(|e| e.side == Side::Below && e.x[0].abs() < 1e-12));
        let test = &rep.tests[flagged[0].test];
        assert!(test.a.trace() > 0.0, "{}", test.label);
    }

    #[test]
    fn matching_quadratic_has_zero_slack() {
        let grid = Arc::new(Grid::new(2, 17, 2).unwrap());
        let a = SymMatrix::diag(&[1.0, -1.0]);
        let u = ScalarField::from_fn(&grid, |x| 0.5 * (x[0] * x[0] - x[1] * x[1]));
        let test = [QuadraticTest { id: 0, label: "hessian".into(), a }];
        let opts = TouchingOptions { tol_visc: None, strict: false };
        for op in [
            EllipticOperator::neg_laplacian(),
            EllipticOperator::pucci_minus(EllipticityConstants::unit()),
        ] {
            let rep = touching_check(&u, 1.0, &[0.0; 3], &op, None, &test, &opts).unwrap();
            let grad: Vec<&TouchingEvent> =
                rep.events.iter().filter(|e| e.slope == SlopeChoice::Gradient).collect();
            assert_eq!(grad.len(), 2 * grid.interior().len());
            assert!(rep.events.iter().all(|e| e.slack == 0.0));
        }
    }
}
