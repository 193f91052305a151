//! Exact rate analysis of the scalar delayed system `ẋ = a x(t−τ) + b x(t)`.
//!
//! The rightmost characteristic root is `(1/τ) W_0(aτ e^{−bτ}) + b`, so the
//! decay rate is `ρ_τ = −(1/τ) Re W_0(aτ e^{−bτ}) − b`. Acceleration by delay
//! is only possible for `a < 0`.

use std::f64::consts::E;

use crate::gain::{gain, unity_crossing_x};
use crate::lambertw::lambert_w0;
use crate::{Error, Landmark, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSystem {
    /// Coefficient of the delayed term.
    pub a: f64,
    /// Coefficient of the instantaneous term.
    pub b: f64,
}

impl ScalarSystem {
    /// Requires `a ≠ 0` and `a + b < 0` (stable without delay).
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("non-finite coefficients a={a}, b={b}")));
        }
        if a == 0.0 {
            return Err(Error::Domain("the delayed coefficient a must be nonzero".into()));
        }
        if a + b >= 0.0 {
            return Err(Error::Domain(format!("a + b must be negative, got {}", a + b)));
        }
        Ok(ScalarSystem { a, b })
    }

    /// `γ = −b/a`.
    pub fn gamma(&self) -> f64 {
        -self.b / self.a
    }

    /// Delay-free rate `ρ_0 = −(a + b)`.
    pub fn rho0(&self) -> f64 {
        -(self.a + self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRateReport {
    pub tau_bar: Landmark,
    /// `None` when `a > 0` (no acceleration window).
    pub tau_tilde: Option<f64>,
    pub tau_star: Option<f64>,
    pub rho_star: Option<f64>,
    /// `(τ, ρ_τ)` pairs; unstable delays carry their nonpositive rate.
    pub rho_at: Vec<(f64, f64)>,
}

/// Upper end of the stability interval `[0, τ̄)`.
pub fn admissible_delay(sys: &ScalarSystem) -> Landmark {
    let ScalarSystem { a, b } = *sys;
    if b <= -a.abs() {
        Landmark::Unbounded
    } else {
        Landmark::Finite((-b / a).acos() / (a * a - b * b).sqrt())
    }
}

fn raw_rate(sys: &ScalarSystem, tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return Ok(sys.rho0());
    }
    let w = lambert_w0(sys.a * tau * (-tau * sys.b).exp())?;
    Ok(-w.re / tau - sys.b)
}

/// Exact decay rate at delay `tau`.
///
/// Delays at or beyond `τ̄` give [`Error::Unstable`] carrying the rate.
pub fn decay_rate(sys: &ScalarSystem, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain(format!("delay must be finite and nonnegative, got {tau}")));
    }
    let rate = raw_rate(sys, tau)?;
    if admissible_delay(sys).admits(tau) {
        Ok(rate)
    } else {
        Err(Error::Unstable { tau, rate })
    }
}

/// The same rate written through the delay gain: `−(g(γ, aτ) − γ)·a`.
pub fn decay_rate_via_gain(sys: &ScalarSystem, tau: f64) -> Result<f64> {
    let gamma = sys.gamma();
    Ok(-(gain(gamma, sys.a * tau)? - gamma) * sys.a)
}

/// Rate-maximising delay and the maximal rate, for `a < 0`.
pub fn optimal_delay(sys: &ScalarSystem) -> Result<(f64, f64)> {
    let ScalarSystem { a, b } = *sys;
    if a > 0.0 {
        return Err(Error::Domain("delay cannot accelerate a system with a > 0".into()));
    }
    if b == 0.0 {
        return Ok((-1.0 / (a * E), -a * E));
    }
    let w = lambert_w0(b / (a * E))?.re;
    Ok((-w / b, -(1.0 + 1.0 / w) * b))
}

/// End of the acceleration window: `ρ_τ > ρ_0` exactly for `τ ∈ (0, τ̃)`.
pub fn rate_gain_window(sys: &ScalarSystem) -> Result<f64> {
    if sys.a > 0.0 {
        return Err(Error::Domain("delay cannot accelerate a system with a > 0".into()));
    }
    Ok(unity_crossing_x(sys.gamma())? / sys.a)
}

pub fn report(sys: &ScalarSystem, taus: &[f64]) -> Result<ScalarRateReport> {
    let (tau_tilde, tau_star, rho_star) = if sys.a < 0.0 {
        let (ts, rs) = optimal_delay(sys)?;
        (Some(rate_gain_window(sys)?), Some(ts), Some(rs))
    } else {
        (None, None, None)
    };
    let rho_at = taus
        .iter()
        .map(|&t| match decay_rate(sys, t) {
            Ok(r) | Err(Error::Unstable { rate: r, .. }) => Ok((t, r)),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarRateReport { tau_bar: admissible_delay(sys), tau_tilde, tau_star, rho_star, rho_at })
}
