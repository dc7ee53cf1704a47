//! Oscillation profiles `Φ(r_k)` at geometric radii and the fitted exponent.

use serde::Serialize;

use super::plane::best_plane_osc;
use crate::error::{config, Error, Result};
use crate::grid::{Point, ScalarField};

/// Balls smaller than this many grid spacings are considered unresolved.
pub const MIN_RADIUS_IN_H: f64 = 4.0;
/// Balls with fewer nodes are considered unresolved.
pub const MIN_BALL_NODES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub k: usize,
    pub r: f64,
    pub phi: f64,
    pub p: Point,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationProfile {
    pub center: Point,
    pub rho: f64,
    /// Largest `k` requested.
    pub k_max: usize,
    pub entries: Vec<ProfileEntry>,
    /// Set when scales below `4h` (or with fewer than 10 nodes) were dropped.
    pub truncated: bool,
}

impl OscillationProfile {
    /// `10 · ε · max(1, max Φ)`.
    pub fn noise_floor(&self) -> f64 {
        let top = self.entries.iter().map(|e| e.phi).fold(1.0, f64::max);
        10.0 * f64::EPSILON * top
    }

    /// Whether every recorded `Φ` is below the noise floor (the field is
    /// affine on every ball, up to roundoff).
    pub fn is_flat(&self) -> bool {
        let floor = self.noise_floor();
        self.entries.iter().all(|e| e.phi <= floor)
    }
}

/// `Φ(ρ^k)` and a best slope for `k = 0..=k_max`, on balls around `center`
/// intersected with the domain.
pub fn oscillation_profile(
    u: &ScalarField,
    center: &Point,
    rho: f64,
    k_max: usize,
) -> Result<OscillationProfile> {
    if !(rho > 0.0 && rho < 1.0) {
        return config(format!("rho must lie in (0, 1) (got {rho})"));
    }
    let grid = u.grid();
    if !(crate::grid::norm(center) <= 1.0) {
        return config("profile center must lie in the unit ball");
    }
    let min_r = MIN_RADIUS_IN_H * grid.h();
    let mut entries = Vec::new();
    let mut truncated = false;
    for k in 0..=k_max {
        let r = rho.powi(k as i32);
        let nodes = grid.ball(center, r).len();
        if r < min_r || nodes < MIN_BALL_NODES.max(grid.dim() + 2) {
            truncated = true;
            break;
        }
        let fit = best_plane_osc(u, center, r)?;
        entries.push(ProfileEntry { k, r, phi: fit.phi, p: fit.p, nodes });
    }
    Ok(OscillationProfile { center: *center, rho, k_max, entries, truncated })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Fitted slope of `log Φ` against `log r`, minus one.
    pub alpha: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// Scales `k` used in the fit.
    pub used: Vec<usize>,
    /// Scales `k` dropped because `Φ` was below the noise floor.
    pub excluded: Vec<usize>,
}

/// Least-squares fit of `log Φ(r_k) = (1 + α) log r_k + c`.
pub fn fit_exponent(profile: &OscillationProfile) -> Result<ExponentFit> {
    let floor = profile.noise_floor();
    let (usable, dropped): (Vec<&ProfileEntry>, Vec<&ProfileEntry>) =
        profile.entries.iter().partition(|e| e.phi > floor && e.phi.is_finite());
    let excluded: Vec<usize> = dropped.iter().map(|e: &&ProfileEntry| e.k).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs 3 scales with Φ above the noise floor {floor:e}; {} available",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|e| e.r.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|e| e.phi.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        alpha: slope - 1.0,
        stderr,
        residual: (ssr / n).sqrt(),
        used: usable.iter().map(|e| e.k).collect(),
        excluded,
    })
}
