//! Improvement of flatness: one step at a fixed ratio `ρ`, and the traced
//! iteration over the radii `r_k = ρ^k`.

use serde::Serialize;

use super::plane::best_plane_osc;
use super::profile::MIN_BALL_NODES;
use crate::error::{config, domain, Result};
use crate::grid::{osc, Point, ScalarField};

/// Slack allowed when comparing measured oscillations with their bounds.
pub const BOUND_SLACK: f64 = 1e-12;

const ORIGIN: Point = [0.0; 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessStep {
    /// Slope of the equation the field solves, echoed for the record.
    pub p: Point,
    /// Best slope on `B_ρ`.
    pub p_new: Point,
    pub rho: f64,
    /// `osc_{B₁} u`.
    pub osc_before: f64,
    /// `osc_{B_ρ}(u - p_new·x)`.
    pub osc_after: f64,
    /// `osc_after <= ρ/2`.
    pub success: bool,
}

/// Measures `min_{p'} osc_{B_ρ}(u - p'·x)` for a field with `osc_{B₁} u <= 1`.
pub fn flatness_step(u: &ScalarField, p: &Point, rho: f64) -> Result<FlatnessStep> {
    if !(rho > 0.0 && rho < 1.0) {
        return config(format!("rho must lie in (0, 1) (got {rho})"));
    }
    let grid = u.grid();
    let all = grid.ball(&ORIGIN, 1.0);
    let osc_before = osc(u, &all)?;
    if osc_before > 1.0 + BOUND_SLACK {
        return domain(format!("flatness step needs osc over B_1 at most 1 (got {osc_before})"));
    }
    let fit = best_plane_osc(u, &ORIGIN, rho)?;
    Ok(FlatnessStep {
        p: *p,
        p_new: fit.p,
        rho,
        osc_before,
        osc_after: fit.phi,
        success: fit.phi <= 0.5 * rho + BOUND_SLACK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatnessRow {
    pub k: usize,
    pub r: f64,
    pub p: Point,
    /// `osc_{B_{r_k}}(u - p_k·x)`.
    pub osc: f64,
    /// `r_k^{1+α}`.
    pub bound: f64,
    pub bound_ok: bool,
    /// Oscillation of the rescaled `u_k(x) = r_k^{-1-α}[u(r_k x) - p_k·r_k x]`
    /// over `B₁`, i.e. `osc / bound`.
    pub rescaled_osc: f64,
    /// `‖f_k‖∞` for `f_k(x) = r_k^{1-α(1+γ)} f(r_k x)`.
    pub rescaled_f: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessTrace {
    pub gamma: f64,
    pub rho: f64,
    pub alpha: f64,
    pub k_max: usize,
    pub rows: Vec<FlatnessRow>,
    /// Set when the iteration stopped before `k_max` for lack of nodes.
    pub truncated: bool,
    pub all_pass: bool,
}

/// Traces `osc_{B_{r_k}}(u - p_k·x) <= r_k^{1+α}` over `r_k = ρ^k`, with `p_k`
/// the best slope on each ball, for `α < 1/(1+γ)`.
///
/// The rescaled field `u_k` is the restriction of `u` to the nodes of
/// `B_{r_k}`; no interpolation is done. The iteration stops once a ball holds
/// fewer than 10 nodes.
pub fn flatness_iterate(
    u: &ScalarField,
    f: Option<&ScalarField>,
    gamma: f64,
    rho: f64,
    alpha: f64,
    k_max: usize,
) -> Result<FlatnessTrace> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return config(format!("gamma must be finite and >= 0 (got {gamma})"));
    }
    let alpha_cap = 1.0 / (1.0 + gamma);
    if !(alpha > 0.0 && alpha < alpha_cap) {
        return config(format!(
            "alpha must satisfy 0 < alpha < 1/(1+gamma) = {alpha_cap} (got {alpha}); \
             the rescaled right-hand side r^(1-alpha(1+gamma)) f(r x) only stays small in that range"
        ));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return config(format!("rho must lie in (0, 1) (got {rho})"));
    }
    let grid = u.grid();
    let mut rows = Vec::new();
    let mut truncated = false;
    for k in 0..=k_max {
        let r = rho.powi(k as i32);
        let ball = grid.ball(&ORIGIN, r);
        if ball.len() < MIN_BALL_NODES.max(grid.dim() + 2) {
            truncated = true;
            break;
        }
        let fit = best_plane_osc(u, &ORIGIN, r)?;
        let bound = r.powf(1.0 + alpha);
        let f_max = f.map_or(0.0, |f| f.max_abs_on(&ball));
        rows.push(FlatnessRow {
            k,
            r,
            p: fit.p,
            osc: fit.phi,
            bound,
            bound_ok: fit.phi <= bound + BOUND_SLACK,
            rescaled_osc: fit.phi / bound,
            rescaled_f: r.powf(1.0 - alpha * (1.0 + gamma)) * f_max,
            nodes: ball.len(),
        });
    }
    let all_pass = rows.iter().all(|r| r.bound_ok);
    Ok(FlatnessTrace { gamma, rho, alpha, k_max, rows, truncated, all_pass })
}

/// The largest `ρ` in `(0, 2^{-γ-1})` with `C₀ ρ^{α₀} <= 1/4`.
///
/// When the smallness condition already holds up to the open endpoint
/// `2^{-γ-1}`, half of that endpoint is returned.
pub fn rho_from_constants(gamma: f64, c0: f64, alpha0: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return config(format!("gamma must be finite and >= 0 (got {gamma})"));
    }
    if !(c0 > 0.0 && c0.is_finite()) || !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return config(format!("need C0 > 0 and alpha0 in (0, 1] (got {c0}, {alpha0})"));
    }
    let cap = 0.5f64.powf(gamma + 1.0);
    let small = (4.0 * c0).powf(-1.0 / alpha0);
    Ok(if small < cap { small } else { 0.5 * cap })
}

/// A slope `p_ρ` with `osc_{B_ρ}(u - p_ρ·x) <= ρ/4`, if the best plane on
/// `B_ρ` achieves it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PRho {
    pub p: Point,
    pub osc: f64,
    pub holds: bool,
}

pub fn p_rho(u: &ScalarField, rho: f64) -> Result<PRho> {
    if !(rho > 0.0 && rho < 1.0) {
        return config(format!("rho must lie in (0, 1) (got {rho})"));
    }
    let fit = best_plane_osc(u, &ORIGIN, rho)?;
    Ok(PRho { p: fit.p, osc: fit.phi, holds: fit.phi <= 0.25 * rho + BOUND_SLACK })
}
