//! Closed-form rate analysis of the split-feedback consensus law.
//!
//! Each Laplacian mode `λ_i` evolves as the scalar system
//! `ż = −αkλ_i z(t−τ) − α(1−k)λ_i z(t)`, so its decay rate is
//! `ρ_{τ,i} = (k·g(1−1/k, −kλ_iατ) + (1−k))·αλ_i` and the network rate is the
//! minimum over the nonzero modes. All functions depend on the spectrum only
//! through its distinct nonzero eigenvalues.

use std::f64::consts::E;

use crate::gain::{gain, unity_crossing_x};
use crate::graph::Spectrum;
use crate::lambertw::lambert_w0;
use crate::roots::{bisect, golden_section_max};
use crate::{Error, Landmark, Result};

const PRESCAN_POINTS: usize = 2000;
const SEARCH_TOL: f64 = 1e-13;
const MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusParams {
    pub alpha: f64,
    pub k: f64,
    pub tau: f64,
}

impl ConsensusParams {
    pub fn new(alpha: f64, k: f64, tau: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
        }
        if !k.is_finite() {
            return Err(Error::Validation(format!("k must be finite, got {k}")));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Validation(format!("tau must be finite and nonnegative, got {tau}")));
        }
        Ok(ConsensusParams { alpha, k, tau })
    }
}

/// Per-mode characteristic delays for one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeLandmarks {
    pub lambda: f64,
    pub tau_bar: Landmark,
    /// Where the mode's own rate returns to `αλ_i`.
    pub tau_tilde: f64,
    pub tau_star: f64,
    /// Where the mode's rate drops to the network's `ρ_0`; `None` if never.
    pub tau_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalDelay {
    pub tau_star: f64,
    pub rho_star: f64,
    /// `[τ*_N, min(τ*_2, τ̂)]`.
    pub bracket: (f64, f64),
    /// `|ρ_{τ*,2} − min_{i≥3} ρ_{τ*,i}|` when τ* is interior to the bracket.
    pub crossing_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    pub rho0: f64,
    /// `(λ_i, ρ_{τ,i})` over distinct nonzero eigenvalues.
    pub per_mode: Vec<(f64, f64)>,
    pub rho_tau: f64,
    pub tau_bar: Landmark,
    pub tau_hat: Landmark,
    pub tau_star: Landmark,
    pub rho_star: Option<f64>,
    pub ultimate_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRow {
    pub k: f64,
    pub tau_bar: Landmark,
    pub tau_hat: Landmark,
    pub tau_star: Landmark,
    pub rho_star: Option<f64>,
    pub ultimate_bound: Option<f64>,
    /// Control effort never exceeds the delay-free effort (`k ∈ (0, 1]`).
    pub effort_safe: bool,
}

fn connected_modes(spec: &Spectrum) -> Result<Vec<f64>> {
    if !spec.is_connected() {
        return Err(Error::Domain("graph is not connected (λ2 = 0)".into()));
    }
    Ok(spec.distinct_modes())
}

fn require_positive_k(k: f64) -> Result<()> {
    if k > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("requires k > 0, got {k}")))
    }
}

/// Stability bound for a single mode.
pub fn mode_admissible_delay(lambda: f64, alpha: f64, k: f64) -> Landmark {
    if k == 0.0 {
        Landmark::NotApplicable
    } else if k <= 0.5 {
        Landmark::Unbounded
    } else {
        Landmark::Finite((1.0 - 1.0 / k).acos() / (alpha * lambda * (2.0 * k - 1.0).sqrt()))
    }
}

/// `τ̄ = arccos(1 − 1/k)/(αλ_N√(2k−1))` for `k > 0.5`; unbounded otherwise.
pub fn admissible_delay_network(spec: &Spectrum, alpha: f64, k: f64) -> Result<Landmark> {
    connected_modes(spec)?;
    Ok(mode_admissible_delay(spec.lambda_max(), alpha, k))
}

/// Rate of one mode through the delay gain.
pub fn mode_rate(lambda: f64, alpha: f64, k: f64, tau: f64) -> Result<f64> {
    if k == 0.0 || tau == 0.0 {
        return Ok(alpha * lambda);
    }
    let g = gain(1.0 - 1.0 / k, -k * lambda * alpha * tau)?;
    Ok((k * g + (1.0 - k)) * alpha * lambda)
}

/// Rate of one mode straight from the rightmost characteristic root.
pub fn mode_rate_lambert(lambda: f64, alpha: f64, k: f64, tau: f64) -> Result<f64> {
    if k == 0.0 || tau == 0.0 {
        return Ok(alpha * lambda);
    }
    let c = alpha * (1.0 - k) * lambda;
    let w = lambert_w0(-alpha * k * lambda * tau * (c * tau).exp())?;
    Ok(-w.re / tau + c)
}

/// Delay maximising one mode's rate (`k > 0`).
pub fn mode_peak_delay(lambda: f64, alpha: f64, k: f64) -> Result<f64> {
    require_positive_k(k)?;
    if k == 1.0 {
        // b = 0 limit of the scalar optimum.
        return Ok(1.0 / (alpha * lambda * E));
    }
    let w = lambert_w0((1.0 - k) / (k * E))?.re;
    Ok(w / (alpha * (1.0 - k) * lambda))
}

/// Delay at which a decreasing post-peak rate first reaches `level`.
fn post_peak_crossing<F>(rate: F, peak: f64, bound: Landmark, level: f64) -> Result<Option<f64>>
where
    F: Fn(f64) -> f64,
{
    let f = |t: f64| rate(t) - level;
    if f(peak).is_nan() || f(peak) <= 0.0 {
        return Ok(Some(peak));
    }
    let hi = match bound {
        Landmark::Finite(tb) => tb,
        _ => {
            let mut hi = 2.0 * peak;
            let mut found = false;
            for _ in 0..60 {
                if f(hi) < 0.0 {
                    found = true;
                    break;
                }
                hi *= 2.0;
            }
            if !found {
                return Ok(None);
            }
            hi
        }
    };
    let root = bisect(f, peak, hi, SEARCH_TOL * hi, MAX_ITER)?;
    Ok(Some(root))
}

pub fn mode_landmarks(lambda: f64, alpha: f64, k: f64, rho0: f64) -> Result<ModeLandmarks> {
    require_positive_k(k)?;
    let tau_bar = mode_admissible_delay(lambda, alpha, k);
    let tau_star = mode_peak_delay(lambda, alpha, k)?;
    let tau_tilde = unity_crossing_x(1.0 - 1.0 / k)? / (-k * alpha * lambda);
    let rate = |t: f64| mode_rate(lambda, alpha, k, t).unwrap_or(f64::NAN);
    let tau_hat = post_peak_crossing(rate, tau_star, tau_bar, rho0)?;
    Ok(ModeLandmarks { lambda, tau_bar, tau_tilde, tau_star, tau_hat })
}

/// Network rate `ρ_τ(k) = min_i ρ_{τ,i}`; nonpositive when `τ ≥ τ̄`.
pub fn convergence_rate(spec: &Spectrum, p: &ConsensusParams) -> Result<f64> {
    let modes = connected_modes(spec)?;
    let mut rho = f64::INFINITY;
    for lambda in modes {
        rho = rho.min(mode_rate(lambda, p.alpha, p.k, p.tau)?);
    }
    Ok(rho)
}

/// `τ̂`: the network rate exceeds `ρ_0` exactly on `(0, τ̂)`.
pub fn rate_increase_window(spec: &Spectrum, alpha: f64, k: f64) -> Result<f64> {
    require_positive_k(k)?;
    let modes = connected_modes(spec)?;
    let rho0 = alpha * spec.lambda2();
    let mut best = f64::INFINITY;
    for lambda in modes {
        if let Some(t) = mode_landmarks(lambda, alpha, k, rho0)?.tau_hat {
            best = best.min(t);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NoConvergence("no mode crosses the delay-free rate".into()))
    }
}

/// Rate-maximising delay, searched inside `[τ*_N, min(τ*_2, τ̂)]`.
pub fn optimal_network_delay(spec: &Spectrum, alpha: f64, k: f64) -> Result<OptimalDelay> {
    require_positive_k(k)?;
    let modes = connected_modes(spec)?;
    let lambda2 = modes[0];
    let lambda_n = *modes.last().unwrap();
    let tau_hat = rate_increase_window(spec, alpha, k)?;
    let lo = mode_peak_delay(lambda_n, alpha, k)?;
    let hi = mode_peak_delay(lambda2, alpha, k)?.min(tau_hat);

    let net =
        |t: f64| modes.iter().map(|&l| mode_rate(l, alpha, k, t).unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);

    let tau_star = if hi - lo <= SEARCH_TOL * hi.max(1e-300) {
        lo.min(hi)
    } else {
        let step = (hi - lo) / PRESCAN_POINTS as f64;
        let (mut best_i, mut best_v) = (0, f64::NEG_INFINITY);
        for i in 0..=PRESCAN_POINTS {
            let v = net(lo + step * i as f64);
            if v > best_v {
                best_v = v;
                best_i = i;
            }
        }
        let a = lo + step * best_i.saturating_sub(1) as f64;
        let b = (lo + step * (best_i + 1) as f64).min(hi);
        let t = golden_section_max(net, a, b, SEARCH_TOL * hi, MAX_ITER);
        // Keep the better of the refined point and the scan point.
        let scan_t = lo + step * best_i as f64;
        if net(t) >= best_v {
            t
        } else {
            scan_t
        }
    };
    let rho_star = net(tau_star);

    let interior = tau_star > lo * (1.0 + 1e-9) && tau_star < hi * (1.0 - 1e-9);
    let crossing_gap = if interior && modes.len() > 1 {
        let r2 = mode_rate(lambda2, alpha, k, tau_star)?;
        let rest = modes[1..]
            .iter()
            .map(|&l| mode_rate(l, alpha, k, tau_star).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, f64::min);
        Some((r2 - rest).abs())
    } else {
        None
    };
    Ok(OptimalDelay { tau_star, rho_star, bracket: (lo, hi), crossing_gap })
}

/// Largest rate any delay can reach for split factor `k > 0`.
pub fn ultimate_rate_bound(k: f64, rho0: f64) -> Result<f64> {
    require_positive_k(k)?;
    if k == 1.0 {
        return Ok(E * rho0);
    }
    let w = lambert_w0((1.0 - k) / (k * E))?.re;
    Ok((1.0 - k) * (1.0 + 1.0 / w) * rho0)
}

pub fn rate_profile(spec: &Spectrum, p: &ConsensusParams) -> Result<RateProfile> {
    let modes = connected_modes(spec)?;
    let rho0 = p.alpha * spec.lambda2();
    let per_mode = modes.iter().map(|&l| Ok((l, mode_rate(l, p.alpha, p.k, p.tau)?))).collect::<Result<Vec<_>>>()?;
    let rho_tau = per_mode.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let tau_bar = admissible_delay_network(spec, p.alpha, p.k)?;
    let (tau_hat, tau_star, rho_star, ultimate_bound) = if p.k > 0.0 {
        let opt = optimal_network_delay(spec, p.alpha, p.k)?;
        (
            Landmark::Finite(rate_increase_window(spec, p.alpha, p.k)?),
            Landmark::Finite(opt.tau_star),
            Some(opt.rho_star),
            Some(ultimate_rate_bound(p.k, rho0)?),
        )
    } else {
        (Landmark::NotApplicable, Landmark::NotApplicable, None, None)
    };
    Ok(RateProfile { rho0, per_mode, rho_tau, tau_bar, tau_hat, tau_star, rho_star, ultimate_bound })
}

pub fn split_factor_report(spec: &Spectrum, alpha: f64, k_grid: &[f64]) -> Result<Vec<SplitRow>> {
    k_grid
        .iter()
        .map(|&k| {
            let profile = rate_profile(spec, &ConsensusParams::new(alpha, k, 0.0)?)?;
            Ok(SplitRow {
                k,
                tau_bar: profile.tau_bar,
                tau_hat: profile.tau_hat,
                tau_star: profile.tau_star,
                rho_star: profile.rho_star,
                ultimate_bound: profile.ultimate_bound,
                effort_safe: k > 0.0 && k <= 1.0,
            })
        })
        .collect()
}
