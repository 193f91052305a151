//! Multi-branch complex Lambert W function.
//!
//! `W_k(z)` is the `k`-th solution `w` of `w·e^w = z`. Branches follow the
//! principal-logarithm convention: the cut lies on the negative real axis and
//! real arguments are treated as lying on the upper side of it, so that
//! `W_0(x)` has `Im > 0` and `W_{-1}(x) = conj(W_0(x))` for `x < -1/e`.
//!
//! Evaluation is Halley's iteration from a branch-aware initial guess. Each
//! converged root is checked against the branch it claims to belong to; a
//! mismatch triggers a retry from alternative guesses.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// `1/e`, rounded to the nearest double.
pub const INV_E: f64 = 0.367_879_441_171_442_33;

/// The omega constant `W_0(1)`.
pub const OMEGA: f64 = 0.567_143_290_409_783_8;

const MAX_ITER: usize = 100;
const STEP_TOL: f64 = 1e-14;

/// Evaluates `W_branch(z)`.
///
/// `W_0(-1/e) = -1` exactly. `W_k(0)` is `0` for `k = 0` and a domain error
/// otherwise (the other branches diverge to `-∞` there).
pub fn lambert_w(branch: i32, z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("Lambert W of non-finite argument {z}")));
    }
    // Fold a negative zero imaginary part onto the upper side of the cut.
    let z = Complex64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });

    if z.re == 0.0 && z.im == 0.0 {
        return if branch == 0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(Error::Domain(format!("W_{branch}(0) diverges")))
        };
    }
    if z.re == -INV_E && z.im == 0.0 && meets_branch_point(branch, z) {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    if branch == 0 && z.re == 1.0 && z.im == 0.0 {
        return Ok(Complex64::new(OMEGA, 0.0));
    }

    let mut last_err = None;
    for guess in initial_guesses(branch, z) {
        match halley(z, guess) {
            Ok(w) if branch_of(w, z) == i64::from(branch) => return Ok(w),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err
        .unwrap_or_else(|| Error::NoConvergence(format!("no initial guess reached branch {branch} at z = {z}"))))
}

/// Real-argument convenience wrapper for the principal branch.
pub fn lambert_w0(x: f64) -> Result<Complex64> {
    lambert_w(0, Complex64::new(x, 0.0))
}

/// `dW_k/dz = 1/(z + e^{W_k(z)})`.
///
/// The singular point is the branch point `z = -1/e` for the branches that
/// meet there.
pub fn lambert_w_derivative(branch: i32, z: Complex64) -> Result<Complex64> {
    let z = Complex64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });
    if z.re == -INV_E && z.im == 0.0 && meets_branch_point(branch, z) {
        return Err(Error::Singularity);
    }
    let w = lambert_w(branch, z)?;
    let denom = z + w.exp();
    if denom.norm() == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(denom.inv())
}

/// Branch index of a root `w` of `w·e^w = z`.
///
/// Uses `Im(w) + arg(w) = arg(z) + 2πk`, which holds on every branch except
/// on the real interval `[-1/e, 0)`, where both `W_0` and `W_{-1}` are real
/// and are told apart by `w ≥ -1`.
pub fn branch_of(w: Complex64, z: Complex64) -> i64 {
    if z.im == 0.0 && w.im == 0.0 && z.re < 0.0 && z.re >= -INV_E {
        return if w.re >= -1.0 { 0 } else { -1 };
    }
    let z_arg = if z.im == 0.0 {
        // Upper side of the cut.
        if z.re < 0.0 {
            PI
        } else {
            0.0
        }
    } else {
        z.arg()
    };
    let w_arg = if w.im == 0.0 && w.re < 0.0 { PI } else { w.arg() };
    ((w.im + w_arg - z_arg) / (2.0 * PI)).round() as i64
}

/// Branches 0, −1 (approached from above) and 1 (from below) meet at `-1/e`.
fn meets_branch_point(branch: i32, z: Complex64) -> bool {
    match branch {
        0 => true,
        -1 => z.im >= 0.0,
        1 => z.im < 0.0,
        _ => false,
    }
}

fn initial_guesses(branch: i32, z: Complex64) -> Vec<Complex64> {
    let mut guesses = Vec::with_capacity(4);
    let near_branch_point = (z + INV_E).norm() < 0.3;

    if near_branch_point && meets_branch_point(branch, z) {
        let sign = if branch == 0 { 1.0 } else { -1.0 };
        guesses.push(branch_point_series(z, sign));
    }
    if branch == 0 {
        if z.norm() < 0.3 {
            guesses.push(series_at_zero(z));
        }
        if (z + 1.0).norm() > 0.5 {
            guesses.push(log_blend(z));
        }
    }
    if branch == -1 && z.im == 0.0 && z.re < 0.0 && z.re > -INV_E {
        guesses.push(Complex64::new((-z.re).ln(), 0.0));
    }
    guesses.push(asymptotic(branch, z));
    if branch != 0 {
        // One extra log iteration sharpens the guess for small |z|.
        let l1 = z.ln() + Complex64::new(0.0, 2.0 * PI * f64::from(branch));
        let w = asymptotic(branch, z);
        guesses.push(l1 - w.ln());
    }
    guesses
}

/// `W ≈ -1 ± p - p²/3 + 11p³/72` with `p = √(2(ez + 1))`.
fn branch_point_series(z: Complex64, sign: f64) -> Complex64 {
    let p = (2.0 * (std::f64::consts::E * z + 1.0)).sqrt() * sign;
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

/// Taylor series of `W_0` about the origin.
fn series_at_zero(z: Complex64) -> Complex64 {
    let z2 = z * z;
    z - z2 + 1.5 * z2 * z - 8.0 / 3.0 * z2 * z2 + 125.0 / 24.0 * z2 * z2 * z
}

/// Winitzki's blend `L (1 - ln(1 + L)/(2 + L))` with `L = ln(1 + z)`; a
/// uniform first guess for `W_0` away from the branch point.
fn log_blend(z: Complex64) -> Complex64 {
    let l = (z + 1.0).ln();
    l * (1.0 - (l + 1.0).ln() / (l + 2.0))
}

/// `L1 - ln(L1)` with `L1 = ln z + 2πik`.
fn asymptotic(branch: i32, z: Complex64) -> Complex64 {
    let l1 = z.ln() + Complex64::new(0.0, 2.0 * PI * f64::from(branch));
    if l1.norm() == 0.0 {
        return Complex64::new(OMEGA, 0.0);
    }
    l1 - l1.ln()
}

fn residual(w: Complex64, z: Complex64) -> f64 {
    (w * w.exp() - z).norm()
}

fn halley(z: Complex64, guess: Complex64) -> Result<Complex64> {
    let accept = 1e-10 * (1.0 + z.norm());
    let mut w = guess;
    let mut best = (residual(w, z), w);
    // A guess already at rounding level near the branch point must not be
    // perturbed by a near-zero Halley denominator.
    if best.0 <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
        return Ok(w);
    }
    for _ in 0..MAX_ITER {
        let next = halley_step(w, z);
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        let step = (next - w).norm();
        w = next;
        let r = residual(w, z);
        if r.is_finite() && r < best.0 {
            best = (r, w);
        }
        if step < STEP_TOL * (1.0 + w.norm()) {
            break;
        }
    }
    if best.0.is_finite() && best.0 <= accept {
        Ok(best.1)
    } else {
        Err(Error::NoConvergence(format!("Halley iteration for W at z = {z} stalled with residual {:e}", best.0)))
    }
}

fn halley_step(w: Complex64, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let wp1 = w + one;
    if wp1.norm() == 0.0 {
        return w;
    }
    if w.re >= 0.0 {
        // Rearranged with e^{-w} to keep large positive Re(w) from overflowing.
        let f = w - z * (-w).exp();
        w - f / (wp1 - (w + two) * f / (two * wp1))
    } else {
        let ew = w.exp();
        let f = w * ew - z;
        w - f / (ew * wp1 - (w + two) * f / (two * wp1))
    }
}
