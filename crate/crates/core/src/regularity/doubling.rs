//! Doubling-of-variables Lipschitz certificate.
//!
//! ```text
//! M = max_{x, y ∈ B_r} u(x) - u(y) - L₁ ω(|x - y|) - L₂ |x - x₀|² - L₂ |y - x₀|²
//! ω(s) = s - ω₀ s^{3/2}  for s <= s₀ = (2 / (3ω₀))²,   ω(s) = ω(s₀) beyond
//! ```
//!
//! The diagonal pair `x = y` is included, so `M >= 0` whenever `x₀` is a
//! node. `M <= 0` certifies `u(x) - u(y) <= L₁ ω(|x - y|)` plus the
//! localization term.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::grid::{dist, norm, Point, ScalarField, MAX_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingConfig {
    pub r: f64,
    pub x0: Point,
    #[serde(rename = "L1")]
    pub l1: f64,
    /// Defaults to `(4/r)²`.
    #[serde(rename = "L2")]
    pub l2: Option<f64>,
    pub omega0: f64,
    /// Carried for the record; it does not enter `M`.
    pub a0: f64,
}

impl Default for DoublingConfig {
    fn default() -> Self {
        DoublingConfig { r: 0.5, x0: [0.0; MAX_DIM], l1: 1.0, l2: None, omega0: 0.5, a0: 1.0 }
    }
}

impl DoublingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return config(format!("doubling radius r must lie in (0, 1) (got {})", self.r));
        }
        if self.x0.iter().any(|v| !v.is_finite()) || norm(&self.x0) > 0.5 * self.r {
            return config("doubling center x0 must lie in the closed ball B_{r/2}");
        }
        if !(self.l1 > 0.0 && self.l1.is_finite()) {
            return config(format!("L1 must be positive (got {})", self.l1));
        }
        if let Some(l2) = self.l2 {
            if !(l2 > 0.0 && l2.is_finite()) {
                return config(format!("L2 must be positive (got {l2})"));
            }
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return config(format!("omega0 must be positive (got {})", self.omega0));
        }
        if self.s0() < 1.0 {
            return config(format!(
                "s0 = (2/(3 omega0))^2 = {} must be at least 1, i.e. omega0 <= 2/3",
                self.s0()
            ));
        }
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return config(format!("a0 must be positive (got {})", self.a0));
        }
        Ok(())
    }

    pub fn l2(&self) -> f64 {
        self.l2.unwrap_or((4.0 / self.r).powi(2))
    }

    pub fn s0(&self) -> f64 {
        (2.0 / (3.0 * self.omega0)).powi(2)
    }

    /// The capped modulus `ω`.
    pub fn omega(&self, s: f64) -> f64 {
        let s = s.min(self.s0());
        s - self.omega0 * s.powf(1.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: Point,
    pub y: Point,
    pub ix: usize,
    pub iy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingCertificate {
    #[serde(rename = "M")]
    pub m: f64,
    /// A maximizing pair, reported when `M > 0`.
    pub witness: Option<Witness>,
    /// `M <= 0`.
    pub certified: bool,
    pub nodes: usize,
    pub pairs: u64,
}

/// Exact maximum of the doubling functional over all ordered node pairs in
/// `B_r(0)`.
pub fn doubling_certify(u: &ScalarField, cfg: &DoublingConfig) -> Result<DoublingCertificate> {
    cfg.validate()?;
    let grid = u.grid();
    let nodes = grid.ball(&[0.0; MAX_DIM], cfg.r);
    let l2 = cfg.l2();
    let pts: Vec<(Point, f64, f64)> = nodes
        .iter()
        .map(|&i| {
            let x = grid.coords(i);
            let d = dist(&x, &cfg.x0);
            (x, u.get(i), l2 * d * d)
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0, 0);
    for (a, (x, ux, lx)) in pts.iter().enumerate() {
        let head = ux - lx;
        for (b, (y, uy, ly)) in pts.iter().enumerate() {
            let val = head - uy - ly;
            // ω >= 0 on [0, s₀] and beyond, so the pair cannot win.
            if val <= best {
                continue;
            }
            let val = val - cfg.l1 * cfg.omega(dist(x, y));
            if val > best {
                best = val;
                arg = (a, b);
            }
        }
    }
    let witness = (best > 0.0).then(|| Witness {
        x: pts[arg.0].0,
        y: pts[arg.1].0,
        ix: nodes[arg.0],
        iy: nodes[arg.1],
    });
    Ok(DoublingCertificate {
        m: best,
        witness,
        certified: best <= 0.0,
        nodes: nodes.len(),
        pairs: (nodes.len() as u64).pow(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::Error;
    use std::sync::Arc;

    #[test]
    fn config_checks() {
        let c = DoublingConfig::default();
        assert!(c.validate().is_ok());
        assert!((c.l2() - 64.0).abs() < 1e-15);
        assert!((c.s0() - 16.0 / 9.0).abs() < 1e-15);
        let bad = DoublingConfig { omega0: 0.7, ..c.clone() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = DoublingConfig { x0: [0.3, 0.0, 0.0], ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn modulus_is_capped_and_nondecreasing() {
        let c = DoublingConfig::default();
        let s0 = c.s0();
        let mut prev = 0.0;
        for k in 0..=400 {
            let s = 3.0 * k as f64 / 400.0;
            let w = c.omega(s);
            assert!(w >= prev - 1e-15);
            prev = w;
        }
        assert_eq!(c.omega(2.5), c.omega(s0));
    }

    #[test]
    fn zero_field_is_certified() {
        let grid = Arc::new(Grid::new(2, 33, 2).unwrap());
        let cert = doubling_certify(&ScalarField::zeros(&grid), &DoublingConfig::default()).unwrap();
        assert_eq!(cert.m, 0.0);
        assert!(cert.certified && cert.witness.is_none());
    }
}
