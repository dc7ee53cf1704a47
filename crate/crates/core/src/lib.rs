//! Numerical laboratory for the degenerate fully nonlinear equation
//!
//! ```text
//! |p + ∇u|^γ F(D²u) = f   in the unit ball B₁,   γ >= 0,
//! ```
//!
//! where `F` is uniformly elliptic (the negative Laplacian or one of the
//! Pucci extremal operators). The crate provides
//!
//! * grids on the unit ball and fields on them ([`grid`]),
//! * exact evaluation of `F` with ellipticity checks ([`operators`]),
//! * a monotone wide-stencil discretization ([`stencil`]) and a pseudo-time
//!   relaxation solver for the Dirichlet problem ([`solver`]),
//! * regularity measurements: Hölder seminorms, best-plane oscillation
//!   profiles, fitted `C^{1,α}` exponents, improvement-of-flatness traces and
//!   the doubling-of-variables Lipschitz certificate ([`regularity`]),
//! * a discrete touching-function checker and the comparison between
//!   `|p+∇u|^γ F(D²u) = 0` and `F(D²u) = 0` ([`viscosity`]).
//!
//! The guide in `book/` walks through each piece; its code blocks are
//! compiled and run as doctests of this crate.

// Index loops mirror the formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod matrix;
pub mod operators;
pub mod problem;
pub mod regularity;
pub mod solver;
pub mod stencil;
pub mod viscosity;

pub use error::{Error, Result};
pub use grid::{osc, Grid, NodeKind, Point, ScalarField};
pub use matrix::SymMatrix;
pub use operators::{EllipticOperator, EllipticityConstants, OperatorKind};
pub use problem::{ClosedForm, Preset, ProblemSpec};
pub use solver::{solve, SolveOptions, SolveReport, Sweep};
pub use stencil::{DirectionSet, Scheme};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/grids.md")]
    struct Grids;
    #[doc = include_str!("../../../book/src/operators.md")]
    struct Operators;
    #[doc = include_str!("../../../book/src/scheme.md")]
    struct Scheme;
    #[doc = include_str!("../../../book/src/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/flatness.md")]
    struct Flatness;
    #[doc = include_str!("../../../book/src/exponents.md")]
    struct Exponents;
    #[doc = include_str!("../../../book/src/doubling.md")]
    struct Doubling;
    #[doc = include_str!("../../../book/src/viscosity.md")]
    struct Viscosity;
    #[doc = include_str!("../../../book/src/command-line.md")]
    struct CommandLine;
}
