//! Equivalence of the degenerate and uniform problems, touching checks on
//! solved fields, and translation equivariance.

use flatlab::solver::solve_scheme;
use flatlab::viscosity::{default_catalogue, equivalence, touching_check, TouchingOptions};
use flatlab::{
    solve, ClosedForm, EllipticOperator, EllipticityConstants, Preset, ProblemSpec, Scheme,
    SolveOptions,
};

fn operators() -> Vec<EllipticOperator> {
    let c = EllipticityConstants::new(1.0, 2.0).unwrap();
    vec![
        EllipticOperator::neg_laplacian(),
        EllipticOperator::pucci_minus(c),
        EllipticOperator::pucci_plus(c),
    ]
}

#[test]
fn linear_data_gives_identical_solutions() {
    for op in operators() {
        for gamma in [0.5, 1.0, 3.0] {
            let spec = ProblemSpec::new(op, gamma, ClosedForm::new("linear:0.3,-0.7".parse().unwrap()), 17);
            let eq = equivalence(&spec, &SolveOptions::default()).unwrap();
            assert!(eq.max_gap < 1e-12, "{op:?} gamma {gamma}: {}", eq.max_gap);
        }
    }
}

#[test]
fn harmonic_data_gap_is_below_five_h_squared() {
    let spec = ProblemSpec::new(
        EllipticOperator::neg_laplacian(),
        2.0,
        ClosedForm::new(Preset::HarmonicX1X2),
        65,
    );
    let eq = equivalence(&spec, &SolveOptions::default()).unwrap();
    let h = 2.0 / 64.0;
    assert!(eq.max_gap <= 5.0 * h * h, "{}", eq.max_gap);
    // x₁x₂ is reproduced by the axis Laplacian, so both solves approximate it
    // up to the solver tolerance; the degenerate residual is weak near ∇u = 0.
    let grid = eq.degenerate.grid().clone();
    for &i in grid.interior() {
        let x = grid.coords(i);
        assert!((eq.uniform.get(i) - x[0] * x[1]).abs() < 1e-8);
        assert!((eq.degenerate.get(i) - x[0] * x[1]).abs() < 1e-6);
    }
}

#[test]
fn nonzero_rhs_is_rejected() {
    let spec = ProblemSpec::new(EllipticOperator::neg_laplacian(), 1.0, ClosedForm::new(Preset::Zero), 17)
        .with_rhs(ClosedForm::constant(0.1));
    assert!(matches!(equivalence(&spec, &SolveOptions::default()), Err(flatlab::Error::Config(_))));
}

#[test]
fn solved_harmonic_field_passes_the_touching_check() {
    let spec = ProblemSpec::new(EllipticOperator::neg_laplacian(), 1.0, ClosedForm::new(Preset::Saddle), 65);
    let (u, rep) = solve(&spec, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let report = touching_check(
        &u,
        1.0,
        &[0.0; 3],
        &spec.operator,
        None,
        &default_catalogue(2),
        &TouchingOptions::default(),
    )
    .unwrap();
    assert!(!report.events.is_empty());
    assert!(report.violations.is_empty(), "{} violations", report.violations.len());
}

#[test]
fn translation_equivariance() {
    // v = u + q·x solves the equation with slope p - q and boundary g + q·x.
    let c = EllipticityConstants::new(1.0, 2.0).unwrap();
    let p = [0.3, -0.2, 0.0];
    let q = [0.5, 0.25, 0.0];
    let opts = SolveOptions::default().with_tol(1e-11);
    for op in [EllipticOperator::neg_laplacian(), EllipticOperator::pucci_minus(c)] {
        let spec = ProblemSpec::new(op, 1.0, ClosedForm::new(Preset::Saddle), 33).with_drift(&p);
        let (u, _) = solve(&spec, &opts).unwrap();

        let shifted = spec.clone().with_drift(&[p[0] - q[0], p[1] - q[1]]);
        let scheme = Scheme::new(&shifted).unwrap();
        let boundary = shifted.boundary.sample(scheme.grid()).plus_linear(&q);
        let (v, rep) = solve_scheme(&scheme, &boundary, &opts).unwrap();
        assert!(rep.converged);
        let expected = u.plus_linear(&q);
        let err = v
            .values()
            .iter()
            .zip(expected.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{op:?}: {err}");
    }
}
