//! Best-plane (Chebyshev) fits.
//!
//! `Φ = min_p osc_z (u(z) - p·z)` is the linear program
//!
//! ```text
//! minimize e   subject to   |u(z) - c - p·z| <= e   for every sample z
//! ```
//!
//! in the `d + 2` unknowns `(c, p, e)`, with `Φ = 2e`. We solve its dual,
//! which has only `d + 2` equality rows and two columns per sample, by a
//! two-phase revised simplex method. The optimal basis multipliers are the
//! primal `(c, p, e)`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::grid::{Point, ScalarField, MAX_DIM};

const M_MAX: usize = MAX_DIM + 2;
const PRICE_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-11;
// Degenerate pivots tolerated under Dantzig's rule before switching to
// Bland's rule, which cannot cycle.
const DEGENERATE_SWITCH: usize = 50;

/// Result of [`best_plane_osc`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneFit {
    /// `min_p osc (u - p·z)` over the sample.
    pub phi: f64,
    /// A minimizing slope (unused entries are zero).
    pub p: Point,
    /// Number of samples.
    pub nodes: usize,
}

/// Best-plane oscillation of `u` over the grid nodes in `B_r(center)`.
///
/// Only nodes inside the computational ball are used, so balls reaching
/// past `|x| = 1` are clipped.
pub fn best_plane_osc(u: &ScalarField, center: &Point, r: f64) -> Result<PlaneFit> {
    let grid = u.grid();
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("ball radius must be positive (got {r})"));
    }
    let nodes = grid.ball(center, r);
    let points: Vec<Point> = nodes.iter().map(|&i| grid.coords(i)).collect();
    let values: Vec<f64> = nodes.iter().map(|&i| u.get(i)).collect();
    chebyshev_plane(grid.dim(), &points, &values)
}

/// Chebyshev plane fit over an arbitrary point cloud in `R^dim`.
pub fn chebyshev_plane(dim: usize, points: &[Point], values: &[f64]) -> Result<PlaneFit> {
    if !(1..=MAX_DIM).contains(&dim) {
        return domain(format!("dimension must be 1, 2 or 3 (got {dim})"));
    }
    if points.len() != values.len() {
        return domain("points and values differ in length");
    }
    let n = points.len();
    if n < dim + 2 {
        return domain(format!("best-plane fit needs at least {} nodes, got {n}", dim + 2));
    }
    if values.iter().any(|v| !v.is_finite()) || points.iter().any(|z| z.iter().any(|c| !c.is_finite())) {
        return domain("non-finite sample in best-plane fit");
    }

    // Normalize coordinates and values to unit scale for conditioning.
    let mut centroid = [0.0; MAX_DIM];
    for z in points {
        for k in 0..dim {
            centroid[k] += z[k] / n as f64;
        }
    }
    let zs: Vec<Point> = points
        .iter()
        .map(|z| {
            let mut w = [0.0; MAX_DIM];
            for k in 0..dim {
                w[k] = z[k] - centroid[k];
            }
            w
        })
        .collect();
    let zscale = zs
        .iter()
        .map(|w| w.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let (vmin, vmax) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let vhalf = 0.5 * (vmax - vmin);
    if vhalf == 0.0 || zscale == 0.0 {
        return Ok(PlaneFit { phi: vmax - vmin, p: [0.0; MAX_DIM], nodes: n });
    }
    let vmid = 0.5 * (vmax + vmin);
    let zn: Vec<Point> = zs.iter().map(|w| w.map(|c| c / zscale)).collect();
    let vn: Vec<f64> = values.iter().map(|v| (v - vmid) / vhalf).collect();

    let y = Dual { dim, z: &zn, v: &vn }.solve()?;
    let mut p = [0.0; MAX_DIM];
    for k in 0..dim {
        p[k] = y[1 + k] * vhalf / zscale;
    }
    let phi = tilted_osc(points, values, &p);
    Ok(PlaneFit { phi, p, nodes: n })
}

/// `osc (v - p·z)` over the samples.
pub fn tilted_osc(points: &[Point], values: &[f64], p: &Point) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (z, v) in points.iter().zip(values) {
        let w = v - z.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        lo = lo.min(w);
        hi = hi.max(w);
    }
    hi - lo
}

/// The dual program
///
/// ```text
/// maximize  Σ v_z (a_z - b_z)
/// s.t.      Σ (a_z - b_z) = 0,  Σ (a_z - b_z) z = 0,  Σ (a_z + b_z) = 1,  a, b >= 0
/// ```
///
/// posed as a minimization of the negated objective. Column `2k` is `a_k`,
/// column `2k + 1` is `b_k`, and columns `2n..2n + m` are artificials.
struct Dual<'a> {
    dim: usize,
    z: &'a [Point],
    v: &'a [f64],
}

struct Tableau {
    m: usize,
    basis: [usize; M_MAX],
    binv: [[f64; M_MAX]; M_MAX],
    xb: [f64; M_MAX],
    is_basic: Vec<bool>,
}

impl Dual<'_> {
    fn rows(&self) -> usize {
        self.dim + 2
    }

    fn real_cols(&self) -> usize {
        2 * self.z.len()
    }

    fn column(&self, j: usize, out: &mut [f64; M_MAX]) {
        let m = self.rows();
        out.fill(0.0);
        let nr = self.real_cols();
        if j >= nr {
            out[j - nr] = 1.0;
            return;
        }
        let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let z = &self.z[j / 2];
        out[0] = s;
        for k in 0..self.dim {
            out[1 + k] = s * z[k];
        }
        out[m - 1] = 1.0;
    }

    fn cost(&self, j: usize, phase_one: bool) -> f64 {
        let nr = self.real_cols();
        match (phase_one, j >= nr) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.0,
            (false, false) => {
                let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
                -s * self.v[j / 2]
            }
        }
    }

    /// Returns the optimal multipliers of the maximization problem.
    fn solve(&self) -> Result<[f64; M_MAX]> {
        let m = self.rows();
        let nr = self.real_cols();
        let mut t = Tableau {
            m,
            basis: [0; M_MAX],
            binv: [[0.0; M_MAX]; M_MAX],
            xb: [0.0; M_MAX],
            is_basic: vec![false; nr + m],
        };
        for i in 0..m {
            t.basis[i] = nr + i;
            t.binv[i][i] = 1.0;
            t.is_basic[nr + i] = true;
        }
        t.xb[m - 1] = 1.0;

        self.run(&mut t, true)?;
        let infeasibility: f64 = (0..m).filter(|&i| t.basis[i] >= nr).map(|i| t.xb[i]).sum();
        if infeasibility > 1e-9 {
            return Err(Error::Numerical(format!(
                "best-plane LP phase one ended infeasible ({infeasibility:e})"
            )));
        }
        self.drive_out_artificials(&mut t);
        self.run(&mut t, false)?;

        let y = self.multipliers(&t, false);
        let mut out = [0.0; M_MAX];
        for i in 0..m {
            out[i] = -y[i];
        }
        Ok(out)
    }

    fn multipliers(&self, t: &Tableau, phase_one: bool) -> [f64; M_MAX] {
        let mut y = [0.0; M_MAX];
        for i in 0..t.m {
            let c = self.cost(t.basis[i], phase_one);
            if c != 0.0 {
                for (yj, b) in y.iter_mut().zip(&t.binv[i]).take(t.m) {
                    *yj += c * b;
                }
            }
        }
        y
    }

    fn run(&self, t: &mut Tableau, phase_one: bool) -> Result<()> {
        let m = t.m;
        let nr = self.real_cols();
        let max_pivots = 50 * (nr + m) + 1000;
        let mut degenerate = 0;
        let mut col = [0.0; M_MAX];
        for _ in 0..max_pivots {
            let y = self.multipliers(t, phase_one);
            let bland = degenerate >= DEGENERATE_SWITCH;
            let mut entering = None;
            let mut best = -PRICE_TOL;
            for j in 0..nr {
                if t.is_basic[j] {
                    continue;
                }
                self.column(j, &mut col);
                let dj = self.cost(j, phase_one) - (0..m).map(|i| y[i] * col[i]).sum::<f64>();
                if dj < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = dj;
                }
            }
            let Some(j) = entering else {
                return Ok(());
            };

            self.column(j, &mut col);
            let mut w = [0.0; M_MAX];
            for i in 0..m {
                w[i] = (0..m).map(|k| t.binv[i][k] * col[k]).sum();
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if w[i] > PIVOT_TOL {
                    let ratio = t.xb[i].max(0.0) / w[i];
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - 1e-14 || (ratio <= best + 1e-14 && t.basis[i] < t.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, step)) = leave else {
                return Err(Error::Numerical("best-plane LP is unbounded".into()));
            };
            degenerate = if step <= 1e-14 { degenerate + 1 } else { 0 };
            pivot(t, r, j, &w, step);
        }
        Err(Error::Numerical("best-plane LP exceeded its pivot limit".into()))
    }

    /// Pivots zero-level artificials out of the basis where a real column
    /// can replace them. Artificials left behind sit on redundant rows.
    fn drive_out_artificials(&self, t: &mut Tableau) {
        let m = t.m;
        let nr = self.real_cols();
        let mut col = [0.0; M_MAX];
        for r in 0..m {
            if t.basis[r] < nr {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..nr {
                if t.is_basic[j] {
                    continue;
                }
                self.column(j, &mut col);
                let wr: f64 = (0..m).map(|k| t.binv[r][k] * col[k]).sum();
                if wr.abs() > best.map_or(1e-9, |b| b.1) {
                    best = Some((j, wr.abs()));
                }
            }
            if let Some((j, _)) = best {
                self.column(j, &mut col);
                let mut w = [0.0; M_MAX];
                for i in 0..m {
                    w[i] = (0..m).map(|k| t.binv[i][k] * col[k]).sum();
                }
                let step = t.xb[r] / w[r];
                pivot(t, r, j, &w, step);
            }
        }
    }
}

fn pivot(t: &mut Tableau, r: usize, j: usize, w: &[f64; M_MAX], step: f64) {
    let m = t.m;
    for i in 0..m {
        t.xb[i] -= step * w[i];
    }
    t.xb[r] = step;
    let wr = w[r];
    for k in 0..m {
        t.binv[r][k] /= wr;
    }
    for i in 0..m {
        if i != r && w[i] != 0.0 {
            let f = w[i];
            for k in 0..m {
                t.binv[i][k] -= f * t.binv[r][k];
            }
        }
    }
    t.is_basic[t.basis[r]] = false;
    t.basis[r] = j;
    t.is_basic[j] = true;
}
