//! Uniform Cartesian grids on `[-1, 1]^d` masked to the unit ball, and the
//! scalar fields that live on them.
//!
//! Every node is classified exactly once:
//!
//! * **interior**: `|x| < 1 - W h`, where the discrete equation is solved;
//! * **boundary band**: nodes with `1 - W h <= |x| <= 1`, together with any
//!   node reached by the stencil of an interior node. Dirichlet data lives
//!   here;
//! * **exterior**: everything else. Exterior values are never read.
//!
//! The ball `B_r(c)` on a grid is the set of masked-in (interior or band)
//! nodes with `|x - c| <= r`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{config, domain, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A point of `R^d` padded with zeros up to [`MAX_DIM`].
pub type Point = [f64; MAX_DIM];

/// Relative slack used for ball membership and the interior test so that
/// nodes sitting exactly on a sphere are classified deterministically.
const GEOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    h: f64,
    stencil_radius: usize,
    strides: [usize; MAX_DIM],
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl Grid {
    /// Builds the grid with `n` points per axis and the masks for a stencil
    /// reaching `stencil_radius` grid steps along each axis.
    pub fn new(dim: usize, n: usize, stencil_radius: usize) -> Result<Grid> {
        if !(1..=MAX_DIM).contains(&dim) {
            return config(format!("dimension must be 1, 2 or 3 (got {dim})"));
        }
        if stencil_radius == 0 {
            return config("stencil radius must be at least 1");
        }
        if n < 2 * stencil_radius + 3 {
            return config(format!(
                "n = {n} points per axis is too small for stencil radius {stencil_radius} \
                 (need n >= {})",
                2 * stencil_radius + 3
            ));
        }
        let h = 2.0 / (n - 1) as f64;
        let mut strides = [0usize; MAX_DIM];
        let mut s = 1;
        for k in (0..dim).rev() {
            strides[k] = s;
            s *= n;
        }
        let len = s;

        let mut grid = Grid {
            dim,
            n,
            h,
            stencil_radius,
            strides,
            kinds: vec![NodeKind::Exterior; len],
            interior: Vec::new(),
            boundary: Vec::new(),
        };

        let inner_radius = 1.0 - stencil_radius as f64 * h;
        for idx in 0..len {
            let r = norm(&grid.coords(idx));
            if r < inner_radius - GEOM_EPS {
                grid.kinds[idx] = NodeKind::Interior;
            } else if r <= 1.0 + GEOM_EPS {
                grid.kinds[idx] = NodeKind::Boundary;
            }
        }

        // Close the band under the full box stencil of every interior node.
        let offsets = box_offsets(dim, stencil_radius);
        let interior: Vec<usize> = (0..len)
            .filter(|&i| grid.kinds[i] == NodeKind::Interior)
            .collect();
        for &idx in &interior {
            let m = grid.multi_index(idx);
            for e in &offsets {
                let j = grid
                    .shifted(&m, e)
                    .expect("interior stencil stays inside the bounding box");
                if grid.kinds[j] == NodeKind::Exterior {
                    grid.kinds[j] = NodeKind::Boundary;
                }
            }
        }
        grid.boundary = (0..len)
            .filter(|&i| grid.kinds[i] == NodeKind::Boundary)
            .collect();
        grid.interior = interior;
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `2 / (n - 1)`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn stencil_radius(&self) -> usize {
        self.stencil_radius
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn is_masked(&self, idx: usize) -> bool {
        self.kinds[idx] != NodeKind::Exterior
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// All masked-in nodes in increasing index order.
    pub fn masked(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_masked(i))
    }

    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut m = [0usize; MAX_DIM];
        let mut rest = idx;
        for k in 0..self.dim {
            m[k] = rest / self.strides[k];
            rest %= self.strides[k];
        }
        m
    }

    pub fn index(&self, m: &[usize; MAX_DIM]) -> usize {
        (0..self.dim).map(|k| m[k] * self.strides[k]).sum()
    }

    /// Physical coordinates of a node.
    pub fn coords(&self, idx: usize) -> Point {
        let m = self.multi_index(idx);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = -1.0 + m[k] as f64 * self.h;
        }
        x
    }

    /// Node reached from multi-index `m` by the integer step `e`, if it is
    /// inside the bounding box.
    pub fn shifted(&self, m: &[usize; MAX_DIM], e: &[i64; MAX_DIM]) -> Option<usize> {
        let mut out = [0usize; MAX_DIM];
        for k in 0..self.dim {
            let v = m[k] as i64 + e[k];
            if v < 0 || v >= self.n as i64 {
                return None;
            }
            out[k] = v as usize;
        }
        Some(self.index(&out))
    }

    /// Flat-index offset of the integer step `e`.
    pub fn flat_offset(&self, e: &[i64; MAX_DIM]) -> isize {
        (0..self.dim)
            .map(|k| e[k] as isize * self.strides[k] as isize)
            .sum()
    }

    /// Masked-in nodes of the closed ball `|x - center| <= r`.
    pub fn ball(&self, center: &Point, r: f64) -> Vec<usize> {
        let tol = GEOM_EPS * (1.0 + r);
        self.masked()
            .filter(|&i| dist(&self.coords(i), center) <= r + tol)
            .collect()
    }

    /// Nearest node to `x` (rounding each coordinate), if it lies in the box.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let mut m = [0usize; MAX_DIM];
        for k in 0..self.dim {
            let v = ((x.get(k).copied().unwrap_or(0.0) + 1.0) / self.h).round();
            if !(0.0..self.n as f64).contains(&v) {
                return None;
            }
            m[k] = v as usize;
        }
        Some(self.index(&m))
    }
}

/// Every nonzero integer step with max-norm at most `radius`.
pub(crate) fn box_offsets(dim: usize, radius: usize) -> Vec<[i64; MAX_DIM]> {
    let w = radius as i64;
    let mut out = Vec::new();
    let range = |k: usize| if k < dim { -w..=w } else { 0..=0 };
    for a in range(0) {
        for b in range(1) {
            for c in range(2) {
                if a != 0 || b != 0 || c != 0 {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

pub fn norm(x: &Point) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(x: &Point, y: &Point) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn dot(x: &Point, y: &Point) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Pads a slice of length at most [`MAX_DIM`] into a [`Point`].
pub fn point(x: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    for (k, v) in x.iter().take(MAX_DIM).enumerate() {
        p[k] = *v;
    }
    p
}

/// Real values on the nodes of a shared grid.
///
/// Values at exterior nodes are kept at zero and never read.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> ScalarField {
        ScalarField {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every masked-in node. `f` receives the first `d`
    /// coordinates.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let mut field = ScalarField::zeros(grid);
        let d = grid.dim();
        for i in grid.masked() {
            let x = grid.coords(i);
            field.values[i] = f(&x[..d]);
        }
        field
    }

    /// Wraps raw node values; `values.len()` must equal `grid.len()`.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return domain(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            ));
        }
        Ok(ScalarField {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    /// Max norm over masked-in nodes.
    pub fn max_abs(&self) -> f64 {
        self.grid
            .masked()
            .map(|i| self.values[i].abs())
            .fold(0.0, f64::max)
    }

    /// Max norm over an explicit node set.
    pub fn max_abs_on(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&i| self.values[i].abs()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.grid.masked().all(|i| self.values[i].is_finite())
    }

    pub fn scaled(&self, k: f64) -> ScalarField {
        ScalarField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| k * v).collect(),
        }
    }

    /// Adds the linear function `q . x` at every masked-in node.
    pub fn plus_linear(&self, q: &Point) -> ScalarField {
        let mut out = self.clone();
        for i in self.grid.masked() {
            out.values[i] += dot(q, &self.grid.coords(i));
        }
        out
    }
}

/// `max - min` of the field over `nodes`.
pub fn osc(field: &ScalarField, nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return domain("oscillation over an empty node set");
    }
    let (lo, hi) = nodes
        .iter()
        .map(|&i| field.get(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    Ok(hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_grid_has_single_interior_node() {
        let g = Grid::new(2, 5, 1).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.interior().len(), 1);
        assert_eq!(g.coords(g.interior()[0]), [0.0, 0.0, 0.0]);
        // Every node with |x| <= 1 that is not the origin sits in the band:
        // 4 axis neighbours at 0.5, 4 diagonals at 0.707, 4 axis points at 1.
        assert_eq!(g.boundary().len(), 12);
        for &b in g.boundary() {
            assert!(norm(&g.coords(b)) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn smallest_one_dimensional_grid() {
        let g = Grid::new(1, 5, 1).unwrap();
        let xs: Vec<f64> = g.interior().iter().map(|&i| g.coords(i)[0]).collect();
        assert_eq!(xs, vec![0.0]);
        let band: Vec<f64> = g.boundary().iter().map(|&i| g.coords(i)[0]).collect();
        assert_eq!(band, vec![-1.0, -0.5, 0.5, 1.0]);
        assert!(matches!(Grid::new(1, 3, 1), Err(crate::Error::Config(_))));
    }

    #[test]
    fn too_coarse_for_stencil() {
        assert!(matches!(Grid::new(2, 4, 1), Err(crate::Error::Config(_))));
        assert!(matches!(Grid::new(2, 6, 2), Err(crate::Error::Config(_))));
        assert!(matches!(Grid::new(4, 9, 1), Err(crate::Error::Config(_))));
    }

    #[test]
    fn masks_partition_and_stencils_complete() {
        for (d, n, w) in [(2, 33, 2), (2, 20, 1), (3, 11, 1), (1, 17, 2)] {
            let g = Grid::new(d, n, w).unwrap();
            let counted = g.interior().len()
                + g.boundary().len()
                + (0..g.len()).filter(|&i| g.kind(i) == NodeKind::Exterior).count();
            assert_eq!(counted, g.len());
            for &i in g.interior() {
                let m = g.multi_index(i);
                for e in box_offsets(d, w) {
                    let j = g.shifted(&m, &e).unwrap();
                    assert!(g.is_masked(j));
                }
            }
        }
    }

    #[test]
    fn osc_of_constant_and_linear() {
        let g = Arc::new(Grid::new(2, 41, 1).unwrap());
        let c = ScalarField::from_fn(&g, |_| 3.5);
        let all: Vec<usize> = g.masked().collect();
        assert_eq!(osc(&c, &all).unwrap(), 0.0);

        let lin = ScalarField::from_fn(&g, |x| x[0]);
        let half = g.ball(&[0.0; 3], 0.5);
        assert!((osc(&lin, &half).unwrap() - 1.0).abs() < 1e-12);

        let sq = ScalarField::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1]);
        let unit = g.ball(&[0.0; 3], 1.0);
        assert!((osc(&sq, &unit).unwrap() - 1.0).abs() < 1e-12);

        assert!(matches!(osc(&c, &[]), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn nearest_node_roundtrip() {
        let g = Grid::new(2, 17, 2).unwrap();
        for i in [0, 5, 100, g.len() - 1] {
            let x = g.coords(i);
            assert_eq!(g.nearest_node(&x[..2]), Some(i));
        }
        assert_eq!(g.nearest_node(&[2.0, 0.0]), None);
    }
}
