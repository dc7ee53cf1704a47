//! Monotone wide-stencil finite differences.
//!
//! Second derivatives are taken along integer grid directions `e`:
//!
//! ```text
//! Δ_e u(x) = (u(x + h e) - 2 u(x) + u(x - h e)) / (h |e|)²
//! ```
//!
//! The negative Laplacian uses the axis directions only. The Pucci operators
//! are discretized through their Bellman form: a *frame* is a set of `d`
//! mutually orthogonal directions of the [`DirectionSet`], each direction
//! gets a weight in `{λ, Λ}`, and the discrete `P-` (`P+`) is the minimum
//! (maximum) over all frames and weights of `-Σ a_e Δ_e u`. Every entry of
//! this menu is a nonnegative combination of second differences, so the
//! scheme is nonincreasing in each neighbour value and nondecreasing in
//! `u(x)`. It is exact on quadratics whose Hessian is diagonal in one of the
//! frames.

use std::sync::Arc;

use crate::error::{config, domain, Result};
use crate::grid::{Grid, NodeKind, Point, ScalarField, MAX_DIM};
use crate::operators::{EllipticOperator, OperatorKind};
use crate::problem::ProblemSpec;

const MAX_DIRECTIONS: usize = 64;

/// An integer grid direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub step: [i64; MAX_DIM],
    /// Euclidean length of `step`.
    pub length: f64,
}

impl Direction {
    fn new(step: [i64; MAX_DIM]) -> Direction {
        let length = (step.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt();
        Direction { step, length }
    }

    pub fn unit(&self) -> Point {
        let mut u = [0.0; MAX_DIM];
        for k in 0..MAX_DIM {
            u[k] = self.step[k] as f64 / self.length;
        }
        u
    }

    fn radius(&self) -> usize {
        self.step.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

/// Pairwise non-parallel grid directions containing the coordinate axes,
/// together with their orthogonal frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    dirs: Vec<Direction>,
    frames: Vec<Vec<usize>>,
}

impl DirectionSet {
    /// The `d` coordinate axes; a single frame.
    pub fn axes(dim: usize) -> DirectionSet {
        let steps = (0..dim)
            .map(|k| {
                let mut s = [0i64; MAX_DIM];
                s[k] = 1;
                s
            })
            .collect::<Vec<_>>();
        DirectionSet::from_steps(dim, &steps).expect("axes form a valid direction set")
    }

    /// Every primitive integer direction with max-norm at most `radius`, one
    /// representative per line. In 2-D with radius 2 these are the eight
    /// directions `(1,0) (0,1) (1,1) (1,-1) (1,2) (1,-2) (2,1) (2,-1)`.
    pub fn wide(dim: usize, radius: usize) -> DirectionSet {
        let mut steps: Vec<[i64; MAX_DIM]> = crate::grid::box_offsets(dim, radius)
            .into_iter()
            .filter(|s| canonical(s) && gcd_all(s) == 1)
            .collect();
        steps.sort_by_key(|s| {
            let len2: i64 = s.iter().map(|v| v * v).sum();
            (len2, [-s[0], -s[1], -s[2]])
        });
        DirectionSet::from_steps(dim, &steps).expect("primitive directions are non-parallel")
    }

    /// Validates an explicit list of steps.
    pub fn from_steps(dim: usize, steps: &[[i64; MAX_DIM]]) -> Result<DirectionSet> {
        if !(1..=MAX_DIM).contains(&dim) {
            return config(format!("dimension must be 1, 2 or 3 (got {dim})"));
        }
        for s in steps {
            if s.iter().all(|&v| v == 0) {
                return config("zero direction in direction set");
            }
            if s[dim..].iter().any(|&v| v != 0) {
                return config(format!("direction {s:?} has more than {dim} components"));
            }
        }
        for (i, a) in steps.iter().enumerate() {
            for b in &steps[i + 1..] {
                if parallel(a, b) {
                    return config(format!("directions {a:?} and {b:?} are parallel"));
                }
            }
        }
        for k in 0..dim {
            let has_axis = steps
                .iter()
                .any(|s| (0..dim).all(|j| if j == k { s[j] != 0 } else { s[j] == 0 }));
            if !has_axis {
                return config(format!("direction set is missing axis {k}"));
            }
        }
        let dirs: Vec<Direction> = steps.iter().map(|&s| Direction::new(s)).collect();
        let frames = orthogonal_frames(dim, steps);
        Ok(DirectionSet { dim, dirs, frames })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.dirs
    }

    /// Index sets of `d` mutually orthogonal directions.
    pub fn frames(&self) -> &[Vec<usize>] {
        &self.frames
    }

    /// Max-norm reach of the longest direction, in grid steps.
    pub fn radius(&self) -> usize {
        self.dirs.iter().map(Direction::radius).max().unwrap_or(0)
    }

    fn axis_index(&self, k: usize) -> usize {
        self.dirs
            .iter()
            .position(|d| (0..self.dim).all(|j| d.step[j] == i64::from(j == k)))
            .or_else(|| {
                self.dirs
                    .iter()
                    .position(|d| (0..self.dim).all(|j| (d.step[j] != 0) == (j == k)))
            })
            .expect("validated sets contain every axis")
    }
}

fn canonical(s: &[i64; MAX_DIM]) -> bool {
    s.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn gcd_all(s: &[i64; MAX_DIM]) -> i64 {
    s.iter().fold(0, |g, &v| gcd(g, v))
}

fn parallel(a: &[i64; MAX_DIM], b: &[i64; MAX_DIM]) -> bool {
    (0..MAX_DIM).all(|i| (0..MAX_DIM).all(|j| a[i] * b[j] == a[j] * b[i]))
}

fn orthogonal_frames(dim: usize, steps: &[[i64; MAX_DIM]]) -> Vec<Vec<usize>> {
    let dot = |a: usize, b: usize| -> i64 { (0..MAX_DIM).map(|k| steps[a][k] * steps[b][k]).sum() };
    let m = steps.len();
    let mut frames = Vec::new();
    match dim {
        1 => frames.extend((0..m).map(|i| vec![i])),
        2 => {
            for i in 0..m {
                for j in i + 1..m {
                    if dot(i, j) == 0 {
                        frames.push(vec![i, j]);
                    }
                }
            }
        }
        _ => {
            for i in 0..m {
                for j in i + 1..m {
                    if dot(i, j) != 0 {
                        continue;
                    }
                    for k in j + 1..m {
                        if dot(i, k) == 0 && dot(j, k) == 0 {
                            frames.push(vec![i, j, k]);
                        }
                    }
                }
            }
        }
    }
    frames
}

/// Default directions for a grid: all primitive directions within the
/// grid's stencil radius.
pub fn default_directions(grid: &Grid) -> DirectionSet {
    DirectionSet::wide(grid.dim(), grid.stencil_radius())
}

/// A [`DirectionSet`] bound to a grid: flat offsets and `1/(h|e|)²`.
#[derive(Debug, Clone)]
pub struct Stencil {
    grid: Arc<Grid>,
    dirs: DirectionSet,
    offsets: Vec<isize>,
    inv_h2: Vec<f64>,
    axes: Vec<usize>,
    axis_offsets: Vec<isize>,
}

impl Stencil {
    pub fn new(grid: &Arc<Grid>, dirs: &DirectionSet) -> Result<Stencil> {
        if dirs.dim() != grid.dim() {
            return config(format!(
                "direction set is {}-dimensional but the grid is {}-dimensional",
                dirs.dim(),
                grid.dim()
            ));
        }
        if dirs.radius() > grid.stencil_radius() {
            return config(format!(
                "direction set reaches {} grid steps but the grid band is {} wide",
                dirs.radius(),
                grid.stencil_radius()
            ));
        }
        if dirs.len() > MAX_DIRECTIONS {
            return config(format!(
                "at most {MAX_DIRECTIONS} directions are supported (got {})",
                dirs.len()
            ));
        }
        let h = grid.h();
        let offsets = dirs.dirs.iter().map(|d| grid.flat_offset(&d.step)).collect();
        let inv_h2 = dirs
            .dirs
            .iter()
            .map(|d| 1.0 / (h * d.length * h * d.length))
            .collect();
        let axes: Vec<usize> = (0..grid.dim()).map(|k| dirs.axis_index(k)).collect();
        let axis_offsets = (0..grid.dim())
            .map(|k| {
                let mut s = [0i64; MAX_DIM];
                s[k] = 1;
                grid.flat_offset(&s)
            })
            .collect();
        Ok(Stencil {
            grid: Arc::clone(grid),
            dirs: dirs.clone(),
            offsets,
            inv_h2,
            axes,
            axis_offsets,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.dirs
    }

    /// `Δ_e u` at node `i` for direction number `k` (no mask checks).
    #[inline]
    pub fn second_diff_raw(&self, u: &[f64], i: usize, k: usize) -> f64 {
        let o = self.offsets[k];
        let ip = (i as isize + o) as usize;
        let im = (i as isize - o) as usize;
        (u[ip] - 2.0 * u[i] + u[im]) * self.inv_h2[k]
    }

    /// Discrete `F(D²u)` at node `i` (no mask checks).
    pub fn operator_raw(&self, op: &EllipticOperator, u: &[f64], i: usize) -> f64 {
        let c = op.constants;
        match op.kind {
            OperatorKind::NegLaplacian => -self
                .axes
                .iter()
                .map(|&k| self.second_diff_raw(u, i, k))
                .sum::<f64>(),
            OperatorKind::PucciMinus | OperatorKind::PucciPlus => {
                let mut diffs = [0.0f64; MAX_DIRECTIONS];
                let m = self.offsets.len();
                for (k, d) in diffs.iter_mut().enumerate().take(m) {
                    *d = self.second_diff_raw(u, i, k);
                }
                let minus = op.kind == OperatorKind::PucciMinus;
                let mut best = if minus { f64::INFINITY } else { f64::NEG_INFINITY };
                for frame in &self.dirs.frames {
                    let mut v = 0.0;
                    for &k in frame {
                        let a = -c.lambda * diffs[k];
                        let b = -c.big_lambda * diffs[k];
                        v += if minus { a.min(b) } else { a.max(b) };
                    }
                    best = if minus { best.min(v) } else { best.max(v) };
                }
                best
            }
        }
    }

    /// Upper bound on `∂F_h/∂u(x)` over the whole menu: `2Λ Σ_{axes} h⁻²`.
    pub fn diagonal_bound(&self, op: &EllipticOperator) -> f64 {
        let cap = match op.kind {
            OperatorKind::NegLaplacian => 1.0,
            _ => op.constants.big_lambda,
        };
        self.dirs
            .frames
            .iter()
            .map(|f| f.iter().map(|&k| 2.0 * cap * self.inv_h2[k]).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Centered difference gradient at node `i` (no mask checks).
    pub fn gradient_raw(&self, u: &[f64], i: usize) -> Point {
        let h = self.grid.h();
        let mut g = [0.0; MAX_DIM];
        for (k, &o) in self.axis_offsets.iter().enumerate() {
            let ip = (i as isize + o) as usize;
            let im = (i as isize - o) as usize;
            g[k] = (u[ip] - u[im]) / (2.0 * h);
        }
        g
    }

    /// `|p + ∇u|` measured as the root mean square of the one-sided slopes:
    ///
    /// ```text
    /// |p + ∇u|² ≈ Σ_k ½ [(p_k + D⁺_k u)² + (p_k + D⁻_k u)²]
    /// ```
    ///
    /// This equals `|p + ∇_c u|² + Σ_k (h ∂_kk u / 2)²` up to higher order,
    /// so it is second-order consistent where `u` is smooth, and it only
    /// vanishes where `u - (-p)·x` is locally flat. A plain centered
    /// difference vanishes at symmetric critical points, where the discrete
    /// equation with `f != 0` would then have no solution.
    pub fn slope_norm_raw(&self, u: &[f64], i: usize, drift: &Point) -> f64 {
        let h = self.grid.h();
        let mut s2 = 0.0;
        for (k, &o) in self.axis_offsets.iter().enumerate() {
            let ip = (i as isize + o) as usize;
            let im = (i as isize - o) as usize;
            let fwd = drift[k] + (u[ip] - u[i]) / h;
            let bwd = drift[k] + (u[i] - u[im]) / h;
            s2 += 0.5 * (fwd * fwd + bwd * bwd);
        }
        s2.sqrt()
    }

    /// [`Stencil::slope_norm_raw`] and its derivative with respect to `u[i]`
    /// (zero where the slope norm vanishes).
    pub fn slope_norm_with_derivative_raw(&self, u: &[f64], i: usize, drift: &Point) -> (f64, f64) {
        let h = self.grid.h();
        let mut s2 = 0.0;
        let mut ds2 = 0.0;
        for (k, &o) in self.axis_offsets.iter().enumerate() {
            let ip = (i as isize + o) as usize;
            let im = (i as isize - o) as usize;
            let fwd = drift[k] + (u[ip] - u[i]) / h;
            let bwd = drift[k] + (u[i] - u[im]) / h;
            s2 += 0.5 * (fwd * fwd + bwd * bwd);
            ds2 += (bwd - fwd) / h;
        }
        let s = s2.sqrt();
        (s, if s > 0.0 { 0.5 * ds2 / s } else { 0.0 })
    }

    fn check_interior(&self, i: usize) -> Result<()> {
        if i >= self.grid.len() || self.grid.kind(i) != NodeKind::Interior {
            return domain(format!("node {i} is not an interior node"));
        }
        Ok(())
    }

    fn check_field(&self, u: &ScalarField) -> Result<()> {
        if !Arc::ptr_eq(u.grid(), &self.grid) && u.grid().len() != self.grid.len() {
            return domain("field and stencil live on different grids");
        }
        Ok(())
    }
}

/// `(u(x+he) - 2u(x) + u(x-he)) / (h|e|)²` at an interior node.
pub fn second_diff(u: &ScalarField, node: usize, step: &[i64; MAX_DIM]) -> Result<f64> {
    let grid = u.grid();
    if node >= grid.len() || grid.kind(node) != NodeKind::Interior {
        return domain(format!("node {node} is not an interior node"));
    }
    let m = grid.multi_index(node);
    let neg = step.map(|v| -v);
    let (Some(ip), Some(im)) = (grid.shifted(&m, step), grid.shifted(&m, &neg)) else {
        return domain(format!("stencil {step:?} leaves the grid at node {node}"));
    };
    if !grid.is_masked(ip) || !grid.is_masked(im) {
        return domain(format!("stencil {step:?} leaves the masked region at node {node}"));
    }
    let dir = Direction::new(*step);
    let hl = grid.h() * dir.length;
    Ok((u.get(ip) - 2.0 * u.get(node) + u.get(im)) / (hl * hl))
}

/// Discrete `F(D²u)` at an interior node, over the menu built on `dirs`.
pub fn discrete_operator(
    op: &EllipticOperator,
    u: &ScalarField,
    node: usize,
    dirs: &DirectionSet,
) -> Result<f64> {
    let st = Stencil::new(u.grid(), dirs)?;
    st.check_interior(node)?;
    Ok(st.operator_raw(op, u.values(), node))
}

/// Centered-difference gradient at an interior node.
pub fn gradient(u: &ScalarField, node: usize) -> Result<Point> {
    let st = Stencil::new(u.grid(), &DirectionSet::axes(u.grid().dim()))?;
    st.check_interior(node)?;
    Ok(st.gradient_raw(u.values(), node))
}

/// The discrete equation of a [`ProblemSpec`]: stencil, operator, slope and
/// sampled right-hand side.
#[derive(Debug, Clone)]
pub struct Scheme {
    stencil: Stencil,
    op: EllipticOperator,
    gamma: f64,
    drift: Point,
    rhs: ScalarField,
}

impl Scheme {
    pub fn new(spec: &ProblemSpec) -> Result<Scheme> {
        let grid = spec.grid()?;
        let dirs = default_directions(&grid);
        Scheme::with_directions(spec, &grid, &dirs)
    }

    pub fn with_directions(
        spec: &ProblemSpec,
        grid: &Arc<Grid>,
        dirs: &DirectionSet,
    ) -> Result<Scheme> {
        spec.validate()?;
        if grid.dim() != spec.dim || grid.n() != spec.n {
            return config("grid does not match the problem's dimension and resolution");
        }
        let stencil = Stencil::new(grid, dirs)?;
        let rhs = spec.rhs.sample(grid);
        if !rhs.all_finite() {
            return config("right-hand side is not finite on the grid");
        }
        Ok(Scheme {
            stencil,
            op: spec.operator,
            gamma: spec.gamma,
            drift: spec.drift,
            rhs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.stencil.grid()
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn operator(&self) -> &EllipticOperator {
        &self.op
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn drift(&self) -> &Point {
        &self.drift
    }

    pub fn rhs(&self) -> &ScalarField {
        &self.rhs
    }

    /// `|p + ∇u|^γ` at node `i`, with `0^0 = 1`.
    #[inline]
    pub fn multiplier_at(&self, u: &[f64], i: usize) -> f64 {
        if self.gamma == 0.0 {
            return 1.0;
        }
        self.stencil.slope_norm_raw(u, i, &self.drift).powf(self.gamma)
    }

    /// `|p + ∇u|^γ` at node `i` and its derivative with respect to `u[i]`.
    #[inline]
    pub fn multiplier_with_derivative(&self, u: &[f64], i: usize) -> (f64, f64) {
        if self.gamma == 0.0 {
            return (1.0, 0.0);
        }
        let (s, ds) = self.stencil.slope_norm_with_derivative_raw(u, i, &self.drift);
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let g = s.powf(self.gamma);
        (g, self.gamma * g / s * ds)
    }

    /// `|p + ∇u|^γ F_h(u) - f` at node `i`.
    #[inline]
    pub fn residual_at(&self, u: &[f64], i: usize) -> f64 {
        self.multiplier_at(u, i) * self.stencil.operator_raw(&self.op, u, i) - self.rhs.get(i)
    }

    /// Residual at every interior node; zero elsewhere.
    pub fn residual(&self, u: &ScalarField) -> Result<ScalarField> {
        self.stencil.check_field(u)?;
        let mut out = ScalarField::zeros(self.grid());
        for &i in self.grid().interior() {
            out.set(i, self.residual_at(u.values(), i));
        }
        Ok(out)
    }
}

/// Discrete residual of `|p + ∇u|^γ F(D²u) = f` at every interior node.
pub fn residual(spec: &ProblemSpec, u: &ScalarField) -> Result<ScalarField> {
    let scheme = Scheme::new(spec)?;
    if u.grid().len() != scheme.grid().len() || u.grid().dim() != spec.dim {
        return domain("field does not live on the problem's grid");
    }
    scheme.residual(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SymMatrix;
    use crate::operators::EllipticityConstants;
    use crate::problem::{manufactured_rhs, ClosedForm, Preset};
    use approx::assert_abs_diff_eq;

    fn grid(n: usize, w: usize) -> Arc<Grid> {
        Arc::new(Grid::new(2, n, w).unwrap())
    }

    fn quadratic(g: &Arc<Grid>, a: &SymMatrix) -> ScalarField {
        let a = *a;
        ScalarField::from_fn(g, move |x| 0.5 * a.quad_form(&crate::grid::point(x)))
    }

    fn c12() -> EllipticityConstants {
        EllipticityConstants::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn default_wide_set() {
        let d = DirectionSet::wide(2, 2);
        let steps: Vec<[i64; 2]> = d.directions().iter().map(|e| [e.step[0], e.step[1]]).collect();
        assert_eq!(
            steps,
            vec![[1, 0], [0, 1], [1, 1], [1, -1], [2, 1], [2, -1], [1, 2], [1, -2]]
        );
        assert_eq!(d.frames().len(), 4);
        assert_eq!(d.radius(), 2);
        assert_eq!(DirectionSet::wide(2, 1).len(), 4);
        assert_eq!(DirectionSet::wide(1, 2).len(), 1);
        assert!(DirectionSet::wide(3, 1).frames().len() > 1);
    }

    #[test]
    fn invalid_direction_sets() {
        assert!(DirectionSet::from_steps(2, &[[1, 0, 0], [2, 0, 0], [0, 1, 0]]).is_err());
        assert!(DirectionSet::from_steps(2, &[[1, 1, 0], [0, 1, 0]]).is_err());
        assert!(DirectionSet::from_steps(2, &[[1, 0, 0], [0, 0, 0]]).is_err());
    }

    #[test]
    fn second_differences_exact_on_quadratics() {
        let g = grid(33, 2);
        let x1sq = ScalarField::from_fn(&g, |x| x[0] * x[0]);
        let x1x2 = ScalarField::from_fn(&g, |x| x[0] * x[1]);
        let node = g.nearest_node(&[0.25, -0.125]).unwrap();
        assert_abs_diff_eq!(second_diff(&x1sq, node, &[1, 0, 0]).unwrap(), 2.0, epsilon = 1e-11);
        assert_abs_diff_eq!(second_diff(&x1x2, node, &[1, 1, 0]).unwrap(), 1.0, epsilon = 1e-11);

        let a = SymMatrix::from_rows(&[vec![0.7, -1.1], vec![-1.1, 0.4]]).unwrap();
        let q = quadratic(&g, &a);
        for e in DirectionSet::wide(2, 2).directions() {
            let expect = a.quad_form(&e.unit());
            assert_abs_diff_eq!(second_diff(&q, node, &e.step).unwrap(), expect, epsilon = 1e-10);
        }
        let band = g.boundary()[0];
        assert!(second_diff(&q, band, &[1, 0, 0]).is_err());
    }

    #[test]
    fn discrete_operator_examples() {
        let g = grid(33, 2);
        let node = g.nearest_node(&[0.0625, 0.125]).unwrap();
        let wide = DirectionSet::wide(2, 2);
        let axes = DirectionSet::axes(2);

        let x = SymMatrix::from_rows(&[vec![1.3, 0.4], vec![0.4, -0.2]]).unwrap();
        let lap = EllipticOperator::neg_laplacian();
        let v = discrete_operator(&lap, &quadratic(&g, &x), node, &wide).unwrap();
        assert_abs_diff_eq!(v, -x.trace(), epsilon = 1e-10);

        let pm = EllipticOperator::pucci_minus(c12());
        let d = SymMatrix::diag(&[1.0, -1.0]);
        let v = discrete_operator(&pm, &quadratic(&g, &d), node, &axes).unwrap();
        assert_abs_diff_eq!(v, -1.0, epsilon = 1e-10);

        // Eigenvectors at 45 degrees are captured by the (1,1), (1,-1) frame.
        let rot = d.rotated(std::f64::consts::FRAC_PI_4);
        let u = quadratic(&g, &rot);
        let exact = discrete_operator(&pm, &u, node, &wide).unwrap();
        assert_abs_diff_eq!(exact, -1.0, epsilon = 1e-10);
        // The axis-only menu misses them: it over-estimates P-.
        let coarse = discrete_operator(&pm, &u, node, &axes).unwrap();
        assert!(coarse > -1.0 + 0.5);

        // At an angle no frame matches, the error is bounded by the
        // angular resolution of the menu.
        let off = d.rotated(0.3);
        let approx = discrete_operator(&pm, &quadratic(&g, &off), node, &wide).unwrap();
        assert!((-1.0 - 1e-10..-1.0 + 0.3).contains(&approx), "{approx}");
    }

    #[test]
    fn gradient_examples() {
        let g = grid(33, 2);
        let node = g.nearest_node(&[0.5, 0.0]).unwrap();
        let lin = ScalarField::from_fn(&g, |x| 0.3 * x[0] - 2.0 * x[1]);
        let gr = gradient(&lin, node).unwrap();
        assert_abs_diff_eq!(gr[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(gr[1], -2.0, epsilon = 1e-12);
        let half = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let gr = gradient(&half, node).unwrap();
        assert_abs_diff_eq!(gr[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(gr[1], 0.0, epsilon = 1e-12);

        // Taylor: the centered difference of r^{3/2} on the axis has error
        // h²/6 |u'''| with u''' = -(3/8) r^{-3/2}.
        let fine = grid(129, 2);
        let node = fine.nearest_node(&[0.5, 0.0]).unwrap();
        let u = ScalarField::from_fn(&fine, |x| (x[0] * x[0] + x[1] * x[1]).powf(0.75));
        let gr = gradient(&u, node).unwrap();
        let h = fine.h();
        let bound = h * h / 6.0 * 0.375 * 0.5f64.powf(-1.5) * 1.1;
        assert!((gr[0] - 1.5 * 0.5f64.sqrt()).abs() <= bound);
        assert_abs_diff_eq!(gr[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_examples() {
        let harmonic = ProblemSpec::new(
            EllipticOperator::neg_laplacian(),
            0.0,
            ClosedForm::new(Preset::Saddle),
            33,
        );
        let g = harmonic.grid().unwrap();
        let u = ClosedForm::new(Preset::Saddle).sample(&g);
        let r = residual(&harmonic, &u).unwrap();
        assert!(r.max_abs() < 1e-10);

        let drifted = ProblemSpec::new(
            EllipticOperator::pucci_minus(c12()),
            2.0,
            ClosedForm::new(Preset::Zero),
            33,
        )
        .with_drift(&[5.0, 0.0]);
        let zero = ScalarField::zeros(&drifted.grid().unwrap());
        assert_eq!(residual(&drifted, &zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn manufactured_residual_shrinks() {
        let lap = EllipticOperator::neg_laplacian();
        let f = manufactured_rhs(2, 1.0, &lap);
        let mut errs = Vec::new();
        for n in [33, 65, 129] {
            let spec = ProblemSpec::new(lap, 1.0, ClosedForm::new(Preset::Radial32), n)
                .with_rhs(ClosedForm::constant(f));
            let g = spec.grid().unwrap();
            let u = ClosedForm::new(Preset::Radial32).sample(&g);
            let r = residual(&spec, &u).unwrap();
            let worst = g
                .interior()
                .iter()
                .filter(|&&i| crate::grid::norm(&g.coords(i)) >= 0.1)
                .map(|&i| r.get(i).abs())
                .fold(0.0, f64::max);
            errs.push(worst);
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        assert!(errs[2] < 0.05 * f.abs(), "{errs:?}");
    }

    #[test]
    fn monotone_in_neighbours() {
        let g = grid(17, 2);
        let node = g.nearest_node(&[0.125, -0.25]).unwrap();
        let st = Stencil::new(&g, &DirectionSet::wide(2, 2)).unwrap();
        let base = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() * x[1] + x[0] * x[0]);
        for op in [
            EllipticOperator::neg_laplacian(),
            EllipticOperator::pucci_minus(c12()),
            EllipticOperator::pucci_plus(c12()),
        ] {
            let f0 = st.operator_raw(&op, base.values(), node);
            let m = g.multi_index(node);
            for e in crate::grid::box_offsets(2, 2) {
                let j = g.shifted(&m, &e).unwrap();
                let mut bumped = base.clone();
                bumped.set(j, bumped.get(j) + 0.01);
                assert!(st.operator_raw(&op, bumped.values(), node) <= f0 + 1e-12);
            }
            let mut raised = base.clone();
            raised.set(node, raised.get(node) + 0.01);
            assert!(st.operator_raw(&op, raised.values(), node) >= f0 - 1e-12);
        }
    }

    #[test]
    fn slope_norm_is_exact_on_linears_and_nonzero_at_kinks() {
        let g = grid(33, 2);
        let st = Stencil::new(&g, &DirectionSet::axes(2)).unwrap();
        let lin = ScalarField::from_fn(&g, |x| 3.0 * x[0] + 4.0 * x[1]);
        let node = g.nearest_node(&[0.25, 0.25]).unwrap();
        assert_abs_diff_eq!(st.slope_norm_raw(lin.values(), node, &[0.0; 3]), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            st.slope_norm_raw(lin.values(), node, &[-3.0, -4.0, 0.0]),
            0.0,
            epsilon = 1e-12
        );
        let cone = ScalarField::from_fn(&g, |x| (x[0] * x[0] + x[1] * x[1]).powf(0.75));
        let origin = g.nearest_node(&[0.0, 0.0]).unwrap();
        assert_eq!(gradient(&cone, origin).unwrap()[0], 0.0);
        assert!(st.slope_norm_raw(cone.values(), origin, &[0.0; 3]) > 0.0);
    }
}
