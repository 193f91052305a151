//! Delay-accelerated dynamic average consensus.
//!
//! The consensus law studied here splits the Laplacian disagreement feedback
//! into an immediate part and an outdated part:
//!
//! ```text
//! ẋ(t) = −α(1−k) L x(t) − α k L x(t−τ) + ṙ(t)
//! ```
//!
//! The crate computes the exact convergence rate of this law through the
//! principal branch of the Lambert W function, locates the delays that make
//! it converge faster than the delay-free algorithm, and checks all of that
//! against a fixed-step delay-differential-equation simulator.
//!
//! Module map:
//!
//! * [`lambertw`] – multi-branch complex Lambert W.
//! * [`graph`] – undirected weighted graphs, Laplacians, spectral transform.
//! * [`gain`] – the delay gain `g(γ, x)` and its landmarks.
//! * [`scalar`] – rate analysis of `ẋ = a x(t−τ) + b x(t)`.
//! * [`network`] – network-level admissible delay, rate profile, optimal delay.
//! * [`reference`] – reference input signals.
//! * [`dde`] – time-domain simulation and series/closed-form oracles.
//! * [`experiment`] – the experiment drivers behind the `delaycons` CLI.

pub mod dde;
pub mod error;
pub mod experiment;
pub mod gain;
pub mod graph;
pub mod lambertw;
pub mod network;
pub mod reference;
pub mod roots;
pub mod scalar;

pub use error::{Error, Result};

/// A delay landmark that may not exist as a finite number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Landmark {
    Finite(f64),
    /// No finite bound exists (stable or accelerated for every delay).
    Unbounded,
    /// The landmark is meaningless for this configuration (e.g. `k = 0`).
    NotApplicable,
}

impl Landmark {
    pub fn finite(self) -> Option<f64> {
        match self {
            Landmark::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Landmark::Unbounded)
    }

    /// `true` when `tau` lies strictly inside the range `[0, self)`.
    pub fn admits(self, tau: f64) -> bool {
        match self {
            Landmark::Finite(v) => tau < v,
            Landmark::Unbounded | Landmark::NotApplicable => true,
        }
    }
}

impl From<Option<f64>> for Landmark {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Landmark::NotApplicable, Landmark::Finite)
    }
}
