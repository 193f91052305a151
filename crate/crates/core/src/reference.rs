//! Reference inputs `r(t)`, one per agent, zero before `t = 0`.
//!
//! Signals may be piecewise smooth. The simulator needs the right-continuous
//! value, the left limit, the regular part of the derivative and the sum of
//! jumps over a step; a zero-order-hold signal has no regular derivative and
//! all of its variation lives in the jumps.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub trait Reference: Send + Sync {
    fn agents(&self) -> usize;

    /// Right-continuous value; zero for `t < 0`.
    fn value(&self, t: f64) -> Vec<f64>;

    /// Left limit `r(t⁻)`; zero for `t ≤ 0`.
    fn left_value(&self, t: f64) -> Vec<f64>;

    /// Regular part of `ṙ(t)` for `t ≥ 0` (jumps excluded).
    fn derivative(&self, t: f64) -> Vec<f64>;

    /// Sum of jumps at times in `(t0, t1]`, for `0 ≤ t0 < t1`.
    fn jump(&self, _t0: f64, _t1: f64) -> Vec<f64> {
        vec![0.0; self.agents()]
    }

    /// `sup_t ‖(I − 11ᵀ/N) ṙ(t)‖₂`, or `None` when `ṙ` is impulsive.
    fn gamma(&self) -> Option<f64>;
}

fn centered_norm(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt()
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} contains non-finite values")))
    }
}

/// Constant inputs switched on at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticReference {
    values: Vec<f64>,
}

impl StaticReference {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("static reference", &values)?;
        Ok(StaticReference { values })
    }
}

impl Reference for StaticReference {
    fn agents(&self) -> usize {
        self.values.len()
    }

    fn value(&self, t: f64) -> Vec<f64> {
        if t >= 0.0 {
            self.values.clone()
        } else {
            vec![0.0; self.values.len()]
        }
    }

    fn left_value(&self, t: f64) -> Vec<f64> {
        if t > 0.0 {
            self.values.clone()
        } else {
            vec![0.0; self.values.len()]
        }
    }

    fn derivative(&self, _t: f64) -> Vec<f64> {
        vec![0.0; self.values.len()]
    }

    fn gamma(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `r_i(t) = b_i + s_i sin(ωt)` for `t ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSinusoid {
    pub offsets: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub omega: f64,
}

impl SmoothSinusoid {
    pub fn new(offsets: Vec<f64>, amplitudes: Vec<f64>, omega: f64) -> Result<Self> {
        if offsets.len() != amplitudes.len() {
            return Err(Error::Dimension { expected: offsets.len(), found: amplitudes.len() });
        }
        check_finite("offsets", &offsets)?;
        check_finite("amplitudes", &amplitudes)?;
        if !omega.is_finite() {
            return Err(Error::Validation("omega must be finite".into()));
        }
        Ok(SmoothSinusoid { offsets, amplitudes, omega })
    }
}

impl Reference for SmoothSinusoid {
    fn agents(&self) -> usize {
        self.offsets.len()
    }

    fn value(&self, t: f64) -> Vec<f64> {
        if t < 0.0 {
            return vec![0.0; self.agents()];
        }
        let s = (self.omega * t).sin();
        self.offsets.iter().zip(&self.amplitudes).map(|(b, a)| b + a * s).collect()
    }

    fn left_value(&self, t: f64) -> Vec<f64> {
        if t <= 0.0 {
            vec![0.0; self.agents()]
        } else {
            self.value(t)
        }
    }

    fn derivative(&self, t: f64) -> Vec<f64> {
        let c = self.omega * (self.omega * t.max(0.0)).cos();
        self.amplitudes.iter().map(|a| a * c).collect()
    }

    fn gamma(&self) -> Option<f64> {
        Some(self.omega.abs() * centered_norm(&self.amplitudes))
    }
}

/// Zero-order-hold samples of a randomly re-drawn sinusoid.
///
/// At sample `m` (time `m/rate`) a fresh `ω ~ N(0, σ_ω²)` and
/// `φ ~ N(0, σ_φ²)` are drawn and agent `i` holds
/// `a_i (2 + sin(ω m/rate + φ)) + b_i` until the next sample. Draws depend
/// only on `(seed, m)`, so any time can be evaluated independently.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSinusoid {
    pub gains: Vec<f64>,
    pub biases: Vec<f64>,
    pub sample_rate: f64,
    pub omega_std: f64,
    pub phase_std: f64,
    pub seed: u64,
}

const EPOCH_EPS: f64 = 1e-9;

impl SampledSinusoid {
    pub fn new(gains: Vec<f64>, biases: Vec<f64>, sample_rate: f64, seed: u64) -> Result<Self> {
        if gains.len() != biases.len() {
            return Err(Error::Dimension { expected: gains.len(), found: biases.len() });
        }
        check_finite("gains", &gains)?;
        check_finite("biases", &biases)?;
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Validation(format!("sample rate must be positive, got {sample_rate}")));
        }
        Ok(SampledSinusoid { gains, biases, sample_rate, omega_std: 0.5, phase_std: FRAC_PI_2, seed })
    }

    /// The five-sensor example: gains `[1.1, 1, 0.9, 1.05, 0.96]`, biases
    /// `[−0.55, 1, 0.6, −0.9, −0.6]`, 2 Hz sampling.
    pub fn example(seed: u64) -> Self {
        SampledSinusoid::new(vec![1.1, 1.0, 0.9, 1.05, 0.96], vec![-0.55, 1.0, 0.6, -0.9, -0.6], 2.0, seed)
            .expect("static parameters are valid")
    }

    pub fn period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Index of the sample held at time `t ≥ 0`.
    pub fn epoch(&self, t: f64) -> u64 {
        (t * self.sample_rate + EPOCH_EPS).floor().max(0.0) as u64
    }

    /// `(ω, φ)` drawn for sample `m`, via Box–Muller.
    pub fn draws(&self, m: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(m);
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let (z0, z1) = (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin());
        (self.omega_std * z0, self.phase_std * z1)
    }

    pub fn sample(&self, m: u64) -> Vec<f64> {
        let (omega, phi) = self.draws(m);
        let t = m as f64 / self.sample_rate;
        let s = 2.0 + (omega * t + phi).sin();
        self.gains.iter().zip(&self.biases).map(|(a, b)| a * s + b).collect()
    }
}

impl Reference for SampledSinusoid {
    fn agents(&self) -> usize {
        self.gains.len()
    }

    fn value(&self, t: f64) -> Vec<f64> {
        if t < 0.0 {
            vec![0.0; self.agents()]
        } else {
            self.sample(self.epoch(t))
        }
    }

    fn left_value(&self, t: f64) -> Vec<f64> {
        if t <= 0.0 {
            return vec![0.0; self.agents()];
        }
        let m = (t * self.sample_rate - EPOCH_EPS).ceil().max(1.0) as u64 - 1;
        self.sample(m)
    }

    fn derivative(&self, _t: f64) -> Vec<f64> {
        vec![0.0; self.agents()]
    }

    fn jump(&self, t0: f64, t1: f64) -> Vec<f64> {
        let (m0, m1) = (self.epoch(t0.max(0.0)), self.epoch(t1));
        if m1 == m0 {
            return vec![0.0; self.agents()];
        }
        let (a, b) = (self.sample(m0), self.sample(m1));
        b.iter().zip(&a).map(|(x, y)| x - y).collect()
    }

    fn gamma(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_is_one_sided() {
        let r = StaticReference::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(r.value(-1e-12), vec![0.0, 0.0]);
        assert_eq!(r.value(0.0), vec![1.0, 2.0]);
        assert_eq!(r.left_value(0.0), vec![0.0, 0.0]);
        assert_eq!(r.left_value(0.3), vec![1.0, 2.0]);
        assert_eq!(r.gamma(), Some(0.0));
        assert!(StaticReference::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn smooth_gamma_bounds_centered_derivative() {
        let r = SmoothSinusoid::new(vec![0.0, 1.0, 2.0], vec![1.0, -0.5, 0.2], 0.7).unwrap();
        let g = r.gamma().unwrap();
        let mut max = 0.0f64;
        for i in 0..2000 {
            let d = r.derivative(i as f64 * 0.01);
            max = max.max(centered_norm(&d));
        }
        assert!(max <= g * (1.0 + 1e-12));
        assert!(max >= g * (1.0 - 1e-6));
        // Central difference of the value.
        let t = 1.3;
        let h = 1e-6;
        let (p, m) = (r.value(t + h), r.value(t - h));
        for (i, d) in r.derivative(t).iter().enumerate() {
            assert!(((p[i] - m[i]) / (2.0 * h) - d).abs() < 1e-8);
        }
    }

    #[test]
    fn sampled_holds_within_epochs() {
        let r = SampledSinusoid::example(42);
        assert_eq!(r.agents(), 5);
        assert_eq!(r.value(0.0), r.sample(0));
        assert_eq!(r.value(0.49), r.sample(0));
        assert_eq!(r.value(0.5), r.sample(1));
        assert_eq!(r.left_value(0.5), r.sample(0));
        assert_eq!(r.left_value(0.51), r.sample(1));
        assert_eq!(r.left_value(0.0), vec![0.0; 5]);
        assert_eq!(r.value(-0.1), vec![0.0; 5]);
        // Float accumulation near a sample time still lands on the new sample.
        let t: f64 = (0..50).map(|_| 0.01).sum();
        assert_eq!(r.value(t), r.sample(1));
    }

    #[test]
    fn sampled_jumps_telescope() {
        let r = SampledSinusoid::example(7);
        let j = r.jump(0.2, 1.7);
        let expected: Vec<f64> = r.sample(3).iter().zip(r.sample(0)).map(|(a, b)| a - b).collect();
        assert_eq!(j, expected);
        assert_eq!(r.jump(0.1, 0.4), vec![0.0; 5]);
        assert_eq!(r.jump(0.5, 0.7), vec![0.0; 5]);
        assert_ne!(r.jump(0.4, 0.5), vec![0.0; 5]);
        assert_eq!(r.gamma(), None);
    }

    #[test]
    fn sampled_is_deterministic_per_seed() {
        let a = SampledSinusoid::example(1);
        let b = SampledSinusoid::example(1);
        let c = SampledSinusoid::example(2);
        assert_eq!(a.sample(5), b.sample(5));
        assert_ne!(a.sample(5), c.sample(5));
        assert_ne!(a.sample(5), a.sample(6));
    }

    #[test]
    fn draw_statistics() {
        let r = SampledSinusoid::example(3);
        let n = 20_000u64;
        let (mut sw, mut sw2, mut sp2) = (0.0, 0.0, 0.0);
        for m in 0..n {
            let (w, p) = r.draws(m);
            sw += w;
            sw2 += w * w;
            sp2 += p * p;
        }
        let n = n as f64;
        assert!((sw / n).abs() < 0.02);
        assert!((sw2 / n - 0.25).abs() < 0.02);
        assert!((sp2 / n - FRAC_PI_2.powi(2)).abs() < 0.1);
    }
}
