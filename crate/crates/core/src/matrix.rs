//! Small symmetric matrices (`d <= 3`) with closed-form eigenvalues.

use std::f64::consts::PI;

use serde::{Serialize, Serializer};

use crate::error::{domain, Result};
use crate::grid::{Point, MAX_DIM};

/// A `d x d` symmetric matrix, `d <= 3`.
///
/// Only the upper triangle is stored, so symmetry holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    // xx, yy, zz, xy, xz, yz
    a: [f64; 6],
}

fn slot(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        (1, 2) => 5,
        _ => unreachable!("index out of range for a 3x3 matrix"),
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> SymMatrix {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1..=3");
        SymMatrix { dim, a: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> SymMatrix {
        SymMatrix::diag(&vec![1.0; dim])
    }

    pub fn diag(d: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.a[i] = *v;
        }
        m
    }

    /// Builds from a full row-major matrix, symmetrizing `(A + A^T) / 2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) || rows.iter().any(|r| r.len() != dim) {
            return domain("expected a square matrix of size 1, 2 or 3");
        }
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.a[slot(i, j)] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        Ok(m)
    }

    /// `sum_k w_k e_k e_k^T` over unit vectors `e_k`.
    pub fn from_outer(dim: usize, terms: &[(f64, Point)]) -> SymMatrix {
        let mut m = SymMatrix::zeros(dim);
        for (w, e) in terms {
            for i in 0..dim {
                for j in i..dim {
                    m.a[slot(i, j)] += w * e[i] * e[j];
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[slot(i, j)] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i]).sum()
    }

    pub fn scale(&self, t: f64) -> SymMatrix {
        let mut m = *self;
        m.a.iter_mut().for_each(|v| *v *= t);
        m
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut m = *self;
        for (x, y) in m.a.iter_mut().zip(other.a.iter()) {
            *x += y;
        }
        m
    }

    pub fn neg(&self) -> SymMatrix {
        self.scale(-1.0)
    }

    /// `A v`.
    pub fn apply(&self, v: &Point) -> Point {
        let mut out = [0.0; MAX_DIM];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.get(i, j) * v[j]).sum();
        }
        out
    }

    /// `<A v, v>`.
    pub fn quad_form(&self, v: &Point) -> f64 {
        let av = self.apply(v);
        (0..self.dim).map(|i| av[i] * v[i]).sum()
    }

    /// `R A R^T` for the planar rotation by `theta` (2-D only).
    pub fn rotated(&self, theta: f64) -> SymMatrix {
        assert_eq!(self.dim, 2, "rotation is defined for 2x2 matrices");
        let (s, c) = theta.sin_cos();
        let (a, b, d) = (self.a[0], self.a[3], self.a[1]);
        let mut m = SymMatrix::zeros(2);
        m.a[0] = c * c * a - 2.0 * c * s * b + s * s * d;
        m.a[1] = s * s * a + 2.0 * c * s * b + c * c * d;
        m.a[3] = c * s * (a - d) + (c * c - s * s) * b;
        m
    }

    /// Eigenvalues in ascending order, by closed form (quadratic formula in
    /// 2-D, trigonometric Cardano in 3-D).
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.dim {
            1 => vec![self.a[0]],
            2 => {
                let (a, d, b) = (self.a[0], self.a[1], self.a[3]);
                let mean = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                vec![mean - rad, mean + rad]
            }
            _ => eig3(&self.a),
        }
    }

    /// Sum of positive eigenvalues, `tr X^+`.
    pub fn trace_pos(&self) -> f64 {
        self.eigenvalues().into_iter().filter(|&l| l > 0.0).sum()
    }

    /// Sum of negative eigenvalues, `tr X^-` (a nonpositive number).
    pub fn trace_neg(&self) -> f64 {
        self.eigenvalues().into_iter().filter(|&l| l < 0.0).sum()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues().first().is_none_or(|&l| l >= -tol)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// Serialized as the full list of rows.
impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

fn eig3(a: &[f64; 6]) -> Vec<f64> {
    let (a11, a22, a33, a12, a13, a23) = (a[0], a[1], a[2], a[3], a[4], a[5]);
    let p1 = a12 * a12 + a13 * a13 + a23 * a23;
    let q = (a11 + a22 + a33) / 3.0;
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
    if p2 == 0.0 {
        return vec![q, q, q];
    }
    let p = (p2 / 6.0).sqrt();
    // B = (A - qI) / p
    let b11 = (a11 - q) / p;
    let b22 = (a22 - q) / p;
    let b33 = (a33 - q) / p;
    let b12 = a12 / p;
    let b13 = a13 / p;
    let b23 = a23 / p;
    let det_b = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13)
        + b13 * (b12 * b23 - b22 * b13);
    let r = (0.5 * det_b).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l_max = q + 2.0 * p * phi.cos();
    let l_min = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l_mid = 3.0 * q - l_max - l_min;
    let mut out = vec![l_min, l_mid, l_max];
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_by_two_eigenvalues() {
        let m = SymMatrix::diag(&[1.0, -1.0]);
        assert_eq!(m.eigenvalues(), vec![-1.0, 1.0]);
        let r = m.rotated(PI / 4.0);
        let ev = r.eigenvalues();
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.get(0, 0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn three_by_three_matches_nalgebra() {
        let rows = vec![
            vec![2.0, 0.3, -0.7],
            vec![0.3, -1.0, 0.4],
            vec![-0.7, 0.4, 0.5],
        ];
        let m = SymMatrix::from_rows(&rows).unwrap();
        let na = nalgebra::Matrix3::from_row_slice(&rows.concat());
        let mut oracle: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (a, b) in m.eigenvalues().iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_eq!(SymMatrix::identity(3).eigenvalues(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn psd_check() {
        assert!(SymMatrix::diag(&[1.0, 0.0]).is_psd(1e-10));
        assert!(!SymMatrix::diag(&[1.0, -1e-6]).is_psd(1e-10));
    }
}
