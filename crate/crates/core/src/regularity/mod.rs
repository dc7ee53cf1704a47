//! Regularity measurements on grid fields.
//!
//! * [`holder_seminorm`]: exact pairwise `β`-Hölder quotient.
//! * [`best_plane_osc`]: `min_p osc_{B_r(x₀)}(u - p·x)`, solved as a linear
//!   program.
//! * [`oscillation_profile`] and [`fit_exponent`]: `Φ(ρ^k)` and the slope of
//!   `log Φ` against `log r`.
//! * [`flatness_step`] and [`flatness_iterate`]: improvement of flatness.
//! * [`doubling_certify`]: the doubling-of-variables Lipschitz functional.

mod doubling;
mod flatness;
mod plane;
mod profile;

use serde::Serialize;

pub use doubling::{doubling_certify, DoublingCertificate, DoublingConfig, Witness};
pub use flatness::{
    flatness_iterate, flatness_step, p_rho, rho_from_constants, FlatnessRow, FlatnessStep,
    FlatnessTrace, PRho, BOUND_SLACK,
};
pub use plane::{best_plane_osc, chebyshev_plane, tilted_osc, PlaneFit};
pub use profile::{
    fit_exponent, oscillation_profile, ExponentFit, OscillationProfile, ProfileEntry,
    MIN_BALL_NODES, MIN_RADIUS_IN_H,
};

use crate::error::{config, domain, Result};
use crate::grid::{dist, Point, ScalarField};

/// `max |u(x) - u(y)| / |x - y|^β` over distinct node pairs of `nodes`.
pub fn holder_seminorm(u: &ScalarField, nodes: &[usize], beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return config(format!("Hölder exponent must lie in (0, 1] (got {beta})"));
    }
    if nodes.len() < 2 {
        return domain("Hölder seminorm needs at least two nodes");
    }
    let grid = u.grid();
    let pts: Vec<(Point, f64)> = nodes.iter().map(|&i| (grid.coords(i), u.get(i))).collect();
    let mut best = 0.0f64;
    for (a, (x, ux)) in pts.iter().enumerate() {
        for (y, uy) in &pts[a + 1..] {
            let du = (ux - uy).abs();
            let d = dist(x, y);
            // d^β >= min(d, 1) for β in (0, 1], a cheap lower bound.
            if d == 0.0 || du <= best * d.min(1.0) {
                continue;
            }
            let q = if beta == 1.0 { du / d } else { du / d.powf(beta) };
            best = best.max(q);
        }
    }
    Ok(best)
}

/// `max_{x₀, k} Φ(ρ^k; x₀) / ρ^{k(1+α)}` over the given centers, the pointwise
/// `C^{1,α}` quantity restricted to resolved geometric radii.
pub fn c1alpha_seminorm(
    u: &ScalarField,
    centers: &[Point],
    alpha: f64,
    rho: f64,
    k_max: usize,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return config(format!("alpha must lie in (0, 1] (got {alpha})"));
    }
    let mut best = 0.0f64;
    for c in centers {
        let prof = oscillation_profile(u, c, rho, k_max)?;
        for e in &prof.entries {
            best = best.max(e.phi / e.r.powf(1.0 + alpha));
        }
    }
    Ok(best)
}

/// Parameters of [`measure`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureOptions {
    pub center: Point,
    pub rho: f64,
    pub k_max: usize,
    /// Hölder exponents to evaluate on `B_{holder_radius}(0)`.
    pub betas: Vec<f64>,
    pub holder_radius: f64,
    /// Exponent for the `C^{1,α}` estimate when no fit is available.
    pub alpha: f64,
    /// Centers for the `C^{1,α}` estimate.
    pub centers: Vec<Point>,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            center: [0.0; 3],
            rho: 0.5,
            k_max: 6,
            betas: vec![0.25, 0.5, 0.75],
            holder_radius: 0.5,
            alpha: 0.5,
            centers: vec![[0.0; 3]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderValue {
    pub beta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// `NaN` when the profile is flat or too short.
    pub alpha: f64,
    pub stderr: f64,
    pub fit_residual: f64,
    /// Every `Φ` is at roundoff level.
    pub flat: bool,
    pub used_scales: Vec<usize>,
    pub excluded_scales: Vec<usize>,
    pub holder: Vec<HolderValue>,
    pub lipschitz: f64,
    /// Exponent used for `c1alpha`: the fitted one, else the configured one.
    pub c1alpha_exponent: f64,
    pub c1alpha: f64,
    pub truncated: bool,
}

/// Profile, exponent fit and seminorms of `u`. A flat profile is not an
/// error; a non-flat profile with fewer than three usable scales is.
pub fn measure(u: &ScalarField, opts: &MeasureOptions) -> Result<(OscillationProfile, RegularityReport)> {
    let profile = oscillation_profile(u, &opts.center, opts.rho, opts.k_max)?;
    let flat = !profile.entries.is_empty() && profile.is_flat();
    let fit = if flat { None } else { Some(fit_exponent(&profile)?) };
    let nodes = u.grid().ball(&[0.0; 3], opts.holder_radius);
    let mut holder = Vec::with_capacity(opts.betas.len());
    for &beta in &opts.betas {
        holder.push(HolderValue { beta, value: holder_seminorm(u, &nodes, beta)? });
    }
    let lipschitz = holder_seminorm(u, &nodes, 1.0)?;
    let c1alpha_exponent = match &fit {
        Some(f) if f.alpha > 0.0 && f.alpha <= 1.0 => f.alpha,
        _ => opts.alpha,
    };
    let c1alpha = c1alpha_seminorm(u, &opts.centers, c1alpha_exponent, opts.rho, opts.k_max)?;
    let report = RegularityReport {
        alpha: fit.as_ref().map_or(f64::NAN, |f| f.alpha),
        stderr: fit.as_ref().map_or(f64::NAN, |f| f.stderr),
        fit_residual: fit.as_ref().map_or(f64::NAN, |f| f.residual),
        flat,
        used_scales: fit.as_ref().map_or_else(Vec::new, |f| f.used.clone()),
        excluded_scales: fit.as_ref().map_or_else(Vec::new, |f| f.excluded.clone()),
        holder,
        lipschitz,
        c1alpha_exponent,
        c1alpha,
        truncated: profile.truncated,
    };
    Ok((profile, report))
}
