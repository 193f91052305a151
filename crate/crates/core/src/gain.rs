//! The delay gain `g(γ, x) = Re W_0(x e^{γx}) / x` (with `g(γ, 0) = 1`).
//!
//! For the scalar system `ẋ = a x(t−τ) + b x(t)` write `γ = −b/a` and
//! `x = aτ`; the exact decay rate is `ρ_τ = −(g(γ, x) − γ)·a`, so `g` measures
//! how the delay rescales the rate. On `x < 0` with `γ < 1` the function rises
//! from `γ` at the stability boundary `x̄` to a single peak at `x*` and falls
//! back to 1 at `x = 0`, crossing 1 once more at `x̃ ∈ (x̄, x*)`.

use std::f64::consts::E;

use crate::lambertw::lambert_w0;
use crate::roots::bisect;
use crate::{Error, Result};

const BISECT_TOL: f64 = 1e-12;
const BISECT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPoint {
    pub gamma: f64,
    pub x: f64,
    pub value: f64,
}

impl GainPoint {
    pub fn at(gamma: f64, x: f64) -> Result<Self> {
        Ok(GainPoint { gamma, x, value: gain(gamma, x)? })
    }
}

/// Landmarks of `g(γ, ·)` on the negative half-line, for `γ < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLandmarks {
    /// Stability boundary; `None` when no finite boundary exists (`γ ≤ −1`).
    pub x_bar: Option<f64>,
    pub x_star: f64,
    pub x_tilde: f64,
    pub g_max: f64,
}

impl GainLandmarks {
    pub fn of(gamma: f64) -> Result<Self> {
        let (x_star, g_max) = peak_x(gamma)?;
        Ok(GainLandmarks { x_bar: critical_x(gamma), x_star, x_tilde: unity_crossing_x(gamma)?, g_max })
    }
}

/// `g(γ, x)`; exactly 1 at `x = 0`.
pub fn gain(gamma: f64, x: f64) -> Result<f64> {
    if !gamma.is_finite() || !x.is_finite() {
        return Err(Error::Domain(format!("gain of non-finite input (γ={gamma}, x={x})")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let w = lambert_w0(x * (gamma * x).exp())?;
    Ok(w.re / x)
}

/// Stability boundary `x̄ = −arccos(γ)/√(1−γ²)` for `|γ| < 1`.
///
/// Returns `None` for `|γ| ≥ 1`, where no finite boundary exists on `x < 0`.
pub fn critical_x(gamma: f64) -> Option<f64> {
    if gamma.abs() < 1.0 {
        Some(-gamma.acos() / (1.0 - gamma * gamma).sqrt())
    } else {
        None
    }
}

/// Peak location and value: `x* = W_0(−γ/e)/γ`, `g(γ, x*) = −γ/W_0(−γ/e)`.
///
/// `γ = 0` takes the limit `(−1/e, e)`.
pub fn peak_x(gamma: f64) -> Result<(f64, f64)> {
    if gamma.is_nan() || gamma >= 1.0 {
        return Err(Error::Domain(format!("peak of g requires γ < 1, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok((-1.0 / E, E));
    }
    let w = lambert_w0(-gamma / E)?.re;
    Ok((w / gamma, -gamma / w))
}

/// Unique solution `x̃ ∈ (x̄, x*)` of `g(γ, x) = 1`, by bisection.
pub fn unity_crossing_x(gamma: f64) -> Result<f64> {
    let (x_star, _) = peak_x(gamma)?;
    let f = |x: f64| gain(gamma, x).map(|g| g - 1.0).unwrap_or(f64::NAN);

    let lower = match critical_x(gamma) {
        // At the boundary itself g = γ < 1.
        Some(x_bar) => x_bar,
        None => {
            // No boundary: walk left until g drops below 1.
            let mut x = 2.0 * x_star;
            let mut found = None;
            for _ in 0..80 {
                if f(x) < 0.0 {
                    found = Some(x);
                    break;
                }
                x *= 2.0;
            }
            found
                .ok_or_else(|| Error::NoConvergence(format!("could not bracket the unity crossing for γ = {gamma}")))?
        }
    };
    bisect(f, lower, x_star, BISECT_TOL, BISECT_MAX_ITER)
}
