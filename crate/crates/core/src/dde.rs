//! Fixed-step simulation of the delayed consensus law and its modal oracles.
//!
//! The integrator is classical RK4 with step `h = τ/M`, `M = ⌈τ/dt_max⌉`, so
//! every delayed argument `t − τ` of a full or zero stage lands on the grid.
//! Half-step delayed values use cubic Hermite interpolation from the stored
//! one-sided values and derivatives of the delayed interval, which keeps the
//! scheme fourth order. History is zero on `[−τ, 0)` and `x(0) = r(0)`.
//! Jumps of the reference are applied at the grid point that ends the step
//! containing them; with sample times on the grid this is exact.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::graph::{laplacian, Graph, Spectrum};
use crate::lambertw::lambert_w;
use crate::network::{mode_admissible_delay, ConsensusParams};
use crate::reference::{Reference, StaticReference};
use crate::{Error, Landmark, Result};

const SETTLING_FLOOR: f64 = 1e-12;
const FIT_FRACTION: f64 = 0.6;
const MIN_FIT_POINTS: usize = 4;
const SERIES_DENOM_MIN: f64 = 1e-14;

/// A simulated run. Index `n` corresponds to `t_n = n·dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub params: ConsensusParams,
    /// Grid steps per delay (`τ = delay_steps·dt`); zero without delay.
    pub delay_steps: usize,
    pub times: Vec<f64>,
    /// Right-continuous states `x(t_n)`.
    pub states: Vec<DVector<f64>>,
    /// Left limits `x(t_n⁻)`; differ from `states` only at reference jumps
    /// and at `t = 0`, where the left limit is the zero history.
    pub left_states: Vec<DVector<f64>>,
    /// `u(t_n) = −α(1−k)Lx(t_n) − αkLx(t_n−τ)`.
    pub controls: Vec<DVector<f64>>,
    pub left_controls: Vec<DVector<f64>>,
    /// Grid of the history segment `[−τ, 0)`; all states there are zero.
    pub history_times: Vec<f64>,
    /// Set when the delay is outside the admissible range.
    pub divergent: bool,
}

impl Trajectory {
    pub fn agents(&self) -> usize {
        self.states.first().map_or(0, |x| x.len())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least one point")
    }

    /// Index of the grid point closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.len() - 1)
    }
}

#[derive(Clone, Copy)]
enum Side {
    Right,
    Mid,
    Left,
}

#[derive(Clone, Copy)]
enum Forcing {
    /// Integrate `x` and add `ṙ` (regular part plus jumps).
    Derivative,
    /// Integrate `y = x − r`; the reference enters only through `x`.
    DerivativeFree,
}

struct Problem<'a> {
    /// `ẋ = −inst·x(t) − delayed·x(t−τ) + ṙ`.
    inst: DMatrix<f64>,
    delayed: DMatrix<f64>,
    reference: &'a dyn Reference,
    forcing: Forcing,
}

struct Raw {
    h: f64,
    m: usize,
    times: Vec<f64>,
    x_right: Vec<DVector<f64>>,
    x_left: Vec<DVector<f64>>,
    u_right: Vec<DVector<f64>>,
    u_left: Vec<DVector<f64>>,
}

fn check_run(tau: f64, horizon: f64, dt_max: f64) -> Result<()> {
    if !(dt_max.is_finite() && dt_max > 0.0) {
        return Err(Error::Validation(format!("dt_max must be positive, got {dt_max}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Validation(format!("horizon must be positive, got {horizon}")));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Validation(format!("tau must be finite and nonnegative, got {tau}")));
    }
    Ok(())
}

fn vec_of(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn ensure_finite(v: &DVector<f64>, t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation(format!("reference is not finite at t = {t}")))
    }
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.inst.nrows()
    }

    fn offset(&self, side: Side, t: f64) -> DVector<f64> {
        match self.forcing {
            Forcing::Derivative => DVector::zeros(self.n()),
            Forcing::DerivativeFree => match side {
                Side::Left => vec_of(self.reference.left_value(t)),
                _ => vec_of(self.reference.value(t)),
            },
        }
    }

    fn rhs(&self, t: f64, x: &DVector<f64>, xd: &DVector<f64>) -> DVector<f64> {
        let mut dx = -(&self.inst * x) - &self.delayed * xd;
        if let Forcing::Derivative = self.forcing {
            dx += vec_of(self.reference.derivative(t));
        }
        dx
    }

    fn integrate(&self, tau: f64, horizon: f64, dt_max: f64) -> Result<Raw> {
        check_run(tau, horizon, dt_max)?;
        let n = self.n();
        if self.reference.agents() != n {
            return Err(Error::Dimension { expected: n, found: self.reference.agents() });
        }
        let (h, m) = if tau > 0.0 {
            let m = ((tau / dt_max) - 1e-9).ceil().max(1.0) as usize;
            (tau / m as f64, m)
        } else {
            (dt_max, 0)
        };
        let (inst, delayed) = if m == 0 {
            (&self.inst + &self.delayed, DMatrix::zeros(n, n))
        } else {
            (self.inst.clone(), self.delayed.clone())
        };
        let p = Problem { inst, delayed, reference: self.reference, forcing: self.forcing };

        let steps = ((horizon / h) - 1e-9).ceil().max(1.0) as usize;
        let zero = DVector::<f64>::zeros(n);
        let mut times = Vec::with_capacity(steps + 1);
        let mut v_right: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
        let mut v_left: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
        let mut dv_right: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
        let mut dv_left: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
        let mut x_right: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
        let mut x_left: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
        let mut u_right: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
        let mut u_left: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);

        let r0 = vec_of(self.reference.value(0.0));
        ensure_finite(&r0, 0.0)?;
        times.push(0.0);
        v_right.push(match p.forcing {
            Forcing::Derivative => r0.clone(),
            Forcing::DerivativeFree => zero.clone(),
        });
        v_left.push(zero.clone());
        x_right.push(r0.clone());
        x_left.push(zero.clone());
        dv_left.push(zero.clone());
        u_left.push(zero.clone());

        // Delayed x at the start (right value) and end (left limit) of the
        // step from t_i; only indices ≤ i+1−m are read.
        let delayed_right = |x_right: &[DVector<f64>], i: usize| -> DVector<f64> {
            if m == 0 || i < m {
                zero.clone()
            } else {
                x_right[i - m].clone()
            }
        };
        let delayed_left = |x_left: &[DVector<f64>], i: usize| -> DVector<f64> {
            if m == 0 || i < m {
                zero.clone()
            } else {
                x_left[i + 1 - m].clone()
            }
        };

        {
            let xd = delayed_right(&x_right, 0);
            dv_right.push(p.rhs(0.0, &x_right[0], &xd));
            u_right.push(-(&p.inst * &x_right[0]) - &p.delayed * &xd);
        }

        for i in 0..steps {
            let t = i as f64 * h;
            let t_mid = t + 0.5 * h;
            let t_next = (i + 1) as f64 * h;

            let xd1 = delayed_left(&x_left, i);
            let xd_mid = if m == 0 || i < m {
                zero.clone()
            } else {
                let d = i - m;
                let v = (&v_right[d] + &v_left[d + 1]) * 0.5 + (&dv_right[d] - &dv_left[d + 1]) * (h / 8.0);
                v + p.offset(Side::Mid, d as f64 * h + 0.5 * h)
            };

            let k1 = dv_right[i].clone();
            let v2 = &v_right[i] + &k1 * (0.5 * h);
            let k2 = p.rhs(t_mid, &(&v2 + p.offset(Side::Mid, t_mid)), &xd_mid);
            let v3 = &v_right[i] + &k2 * (0.5 * h);
            let k3 = p.rhs(t_mid, &(&v3 + p.offset(Side::Mid, t_mid)), &xd_mid);
            let v4 = &v_right[i] + &k3 * h;
            let k4 = p.rhs(t_next, &(&v4 + p.offset(Side::Left, t_next)), &xd1);

            let vl = &v_right[i] + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let xl = &vl + p.offset(Side::Left, t_next);
            let dvl = p.rhs(t_next, &xl, &xd1);
            let ul = -(&p.inst * &xl) - &p.delayed * &xd1;

            let vr = match p.forcing {
                Forcing::Derivative => {
                    let jump = vec_of(self.reference.jump(t, t_next));
                    ensure_finite(&jump, t_next)?;
                    &vl + jump
                }
                Forcing::DerivativeFree => vl.clone(),
            };
            let xr = &vr + p.offset(Side::Right, t_next);
            ensure_finite(&xr, t_next)?;

            times.push(t_next);
            v_left.push(vl);
            x_left.push(xl);
            dv_left.push(dvl);
            u_left.push(ul);
            v_right.push(vr);
            x_right.push(xr);

            let xd_next = delayed_right(&x_right, i + 1);
            dv_right.push(p.rhs(t_next, &x_right[i + 1], &xd_next));
            u_right.push(-(&p.inst * &x_right[i + 1]) - &p.delayed * &xd_next);
        }

        Ok(Raw { h, m, times, x_right, x_left, u_right, u_left })
    }
}

fn admissible(g: &Graph, p: &ConsensusParams) -> Result<bool> {
    let spec = Spectrum::of_graph(g)?;
    let lambda_max = spec.lambda_max();
    if lambda_max <= 0.0 {
        return Ok(true);
    }
    let ok = match mode_admissible_delay(lambda_max, p.alpha, p.k) {
        Landmark::Finite(tb) => p.tau < tb,
        _ => true,
    };
    if !ok {
        log::warn!("delay {} is outside the admissible range for k = {}; the run will diverge", p.tau, p.k);
    }
    Ok(ok)
}

fn run(
    g: &Graph,
    p: &ConsensusParams,
    r: &dyn Reference,
    horizon: f64,
    dt_max: f64,
    forcing: Forcing,
) -> Result<Trajectory> {
    let l = laplacian(g);
    let problem = Problem { inst: &l * (p.alpha * (1.0 - p.k)), delayed: &l * (p.alpha * p.k), reference: r, forcing };
    let raw = problem.integrate(p.tau, horizon, dt_max)?;
    let divergent = !admissible(g, p)?;
    let n = g.n();
    Ok(Trajectory {
        dt: raw.h,
        params: *p,
        delay_steps: raw.m,
        history_times: (0..raw.m).map(|j| -p.tau + j as f64 * raw.h).collect(),
        times: raw.times,
        states: raw.x_right,
        left_states: raw.x_left,
        controls: raw.u_right,
        left_controls: raw.u_left,
        divergent: divergent || n == 0,
    })
}

/// Integrates `ẋ = −α(1−k)Lx(t) − αkLx(t−τ) + ṙ`.
pub fn simulate(g: &Graph, p: &ConsensusParams, r: &dyn Reference, horizon: f64, dt_max: f64) -> Result<Trajectory> {
    run(g, p, r, horizon, dt_max, Forcing::Derivative)
}

/// Integrates `ẏ = −α(1−k)Lx(t) − αkLx(t−τ)` with `x = y + r`, `y(0) = 0`.
pub fn simulate_derivative_free(
    g: &Graph,
    p: &ConsensusParams,
    r: &dyn Reference,
    horizon: f64,
    dt_max: f64,
) -> Result<Trajectory> {
    run(g, p, r, horizon, dt_max, Forcing::DerivativeFree)
}

/// Static consensus from `x(0) = x0` with zero history.
pub fn zero_input_simulate(
    g: &Graph,
    p: &ConsensusParams,
    x0: &[f64],
    horizon: f64,
    dt_max: f64,
) -> Result<Trajectory> {
    if x0.len() != g.n() {
        return Err(Error::Dimension { expected: g.n(), found: x0.len() });
    }
    let r = StaticReference::new(x0.to_vec())?;
    simulate(g, p, &r, horizon, dt_max)
}

/// Scalar `ẋ = a x(t−τ) + b x(t)` with `x(0) = x0` and zero history.
///
/// Returns the grid and the right-continuous values.
pub fn simulate_scalar(a: f64, b: f64, tau: f64, x0: f64, horizon: f64, dt_max: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = StaticReference::new(vec![x0])?;
    let problem = Problem {
        inst: DMatrix::from_element(1, 1, -b),
        delayed: DMatrix::from_element(1, 1, -a),
        reference: &r,
        forcing: Forcing::Derivative,
    };
    let raw = problem.integrate(tau, horizon, dt_max)?;
    Ok((raw.times, raw.x_right.iter().map(|x| x[0]).collect()))
}

/// `sup_t |u(t)|∞` over both one-sided values at every grid point.
pub fn control_effort(traj: &Trajectory) -> f64 {
    traj.controls.iter().chain(&traj.left_controls).map(|u| u.amax()).fold(0.0, f64::max)
}

/// Running maximum of `|u(t)|∞`.
pub fn running_effort(traj: &Trajectory) -> Vec<f64> {
    let mut acc = 0.0f64;
    traj.controls
        .iter()
        .zip(&traj.left_controls)
        .map(|(u, ul)| {
            acc = acc.max(u.amax()).max(ul.amax());
            acc
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `max_i |x_i(t_n) − r_avg(t_n)|` per grid point.
pub fn tracking_error(traj: &Trajectory, r: &dyn Reference) -> Vec<f64> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| {
            let avg = mean(&r.value(t));
            x.iter().map(|xi| (xi - avg).abs()).fold(0.0, f64::max)
        })
        .collect()
}

/// Like [`tracking_error`] but with left limits, e.g. just before a new sample.
pub fn tracking_error_left(traj: &Trajectory, r: &dyn Reference) -> Vec<f64> {
    traj.times
        .iter()
        .zip(&traj.left_states)
        .map(|(&t, x)| {
            let avg = mean(&r.left_value(t));
            x.iter().map(|xi| (xi - avg).abs()).fold(0.0, f64::max)
        })
        .collect()
}

/// Distance from consensus `‖(I − 11ᵀ/N)x‖` per grid point.
pub fn disagreement(traj: &Trajectory) -> Vec<f64> {
    traj.states
        .iter()
        .map(|x| {
            let m = x.mean();
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

/// Decay rate of a zero-input run from its disagreement norm.
pub fn estimate_decay_rate(traj: &Trajectory) -> Result<f64> {
    estimate_decay_rate_from_series(&traj.times, &disagreement(traj))
}

/// Least-squares decay rate of a positive signal.
///
/// Samples after the signal first drops below `1e−12` of its start are
/// discarded. In the final 60% of what remains, only points that dominate
/// every later point are fitted, which picks the envelope of an oscillating
/// decay and every point of a monotone one.
pub fn estimate_decay_rate_from_series(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::Dimension { expected: times.len(), found: values.len() });
    }
    let first = values.first().copied().unwrap_or(0.0);
    if first.is_nan() || first <= 0.0 {
        return Err(Error::InsufficientData("signal starts at zero".into()));
    }
    let end = values.iter().position(|&v| v.is_nan() || v < SETTLING_FLOOR * first).unwrap_or(values.len());
    let start = end - ((end as f64) * FIT_FRACTION).floor() as usize;

    let mut points = Vec::new();
    let mut suffix_max = f64::NEG_INFINITY;
    for i in (start..end).rev() {
        if values[i] >= suffix_max {
            suffix_max = values[i];
            points.push((times[i], values[i].ln()));
        }
    }
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable points in the fit window, need {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let (st, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    if sxx == 0.0 {
        return Err(Error::InsufficientData("fit points share one time".into()));
    }
    Ok(-sxy / sxx)
}

/// Exact zero-input solution of one mode on `[−τ, 2τ]`.
///
/// `z = 0` before 0, `z0 e^{−ct}` on `[0, τ)` and
/// `z0 e^{−ct}(1 − d e^{cτ}(t − τ))` on `[τ, 2τ]`, with `c = α(1−k)λ`,
/// `d = αkλ`.
pub fn modal_closed_form(lambda: f64, p: &ConsensusParams, z0: f64, t: f64) -> Result<f64> {
    let tau = p.tau;
    // Grid times carry rounding from repeated steps.
    let slack = 1e-12 * tau.max(f64::MIN_POSITIVE);
    if !(t >= -tau - slack && t <= 2.0 * tau + slack) {
        return Err(Error::Domain(format!("t = {t} is outside [−τ, 2τ] = [{}, {}]", -tau, 2.0 * tau)));
    }
    let c = p.alpha * (1.0 - p.k) * lambda;
    let d = p.alpha * p.k * lambda;
    Ok(if t < 0.0 {
        0.0
    } else if t < tau {
        z0 * (-c * t).exp()
    } else {
        z0 * (-c * t).exp() * (1.0 - d * (c * tau).exp() * (t - tau))
    })
}

/// Characteristic roots `S_j` and residues `C_j` of one mode for `|j| ≤ J`.
pub fn mode_series_terms(lambda: f64, p: &ConsensusParams, j_max: u32) -> Result<Vec<(Complex64, Complex64)>> {
    let c = p.alpha * (1.0 - p.k) * lambda;
    let d = p.alpha * p.k * lambda;
    let tau = p.tau;
    if tau == 0.0 || d == 0.0 {
        return Ok(vec![(Complex64::new(-(c + d), 0.0), Complex64::new(1.0, 0.0))]);
    }
    let arg = Complex64::new(-d * tau * (c * tau).exp(), 0.0);
    let j_max = j_max as i32;
    let mut terms = Vec::with_capacity(2 * j_max as usize + 1);
    for j in -j_max..=j_max {
        let w = lambert_w(j, arg)?;
        let s = w / tau - c;
        let denom = Complex64::new(1.0, 0.0) - d * tau * (-s * tau).exp();
        if denom.norm() < SERIES_DENOM_MIN {
            log::debug!("skipping branch {j}: residue denominator {:e}", denom.norm());
            continue;
        }
        terms.push((s, denom.inv()));
    }
    Ok(terms)
}

/// Truncated characteristic-root expansion of the zero-input solution, in
/// modal coordinates. `z0[0]` (the average mode) is carried unchanged.
pub fn series_solution(spec: &Spectrum, p: &ConsensusParams, z0: &[f64], t: f64, j_max: u32) -> Result<Vec<f64>> {
    if z0.len() != spec.n() {
        return Err(Error::Dimension { expected: spec.n(), found: z0.len() });
    }
    if j_max < 1 {
        return Err(Error::Validation("at least one branch on each side is required".into()));
    }
    let mut out = Vec::with_capacity(z0.len());
    for (i, (&lambda, &z)) in spec.eigenvalues.iter().zip(z0).enumerate() {
        if i == 0 {
            out.push(z);
            continue;
        }
        let sum: Complex64 = mode_series_terms(lambda, p, j_max)?.iter().map(|(s, c)| (s * t).exp() * c).sum();
        out.push(sum.re * z);
    }
    Ok(out)
}

/// `Σ_{|j|≤J} C_j / S_j` for one mode.
pub fn series_resolvent_sum(lambda: f64, p: &ConsensusParams, j_max: u32) -> Result<Complex64> {
    Ok(mode_series_terms(lambda, p, j_max)?.iter().map(|(s, c)| c / s).sum())
}
