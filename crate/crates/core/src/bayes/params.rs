use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Dephasing time of the sensor. `Infinite` gives a contrast factor of exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceTime {
    Finite(f64),
    Infinite,
}

impl CoherenceTime {
    pub fn finite(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(CoherenceTime::Finite(t))
        } else if t == f64::INFINITY {
            Ok(CoherenceTime::Infinite)
        } else {
            Err(Error::invalid("coherence_time", format!("must be > 0, got {t}")))
        }
    }

    /// Contrast factor `exp(-tau / T)`.
    #[inline]
    pub fn decay(&self, tau: f64) -> f64 {
        match *self {
            CoherenceTime::Infinite => 1.0,
            CoherenceTime::Finite(t) => (-tau / t).exp(),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CoherenceTime::Infinite)
    }
}

impl fmt::Display for CoherenceTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoherenceTime::Infinite => write!(f, "inf"),
            CoherenceTime::Finite(t) => write!(f, "{t}"),
        }
    }
}

/// Controls and constants of a single Ramsey measurement.
///
/// `theta` is wrapped into `[0, 2π)` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyParams {
    tau: f64,
    theta: f64,
    coherence: CoherenceTime,
    mu: f64,
}

impl RamseyParams {
    /// Natural units (`mu = 1`).
    pub fn new(tau: f64, theta: f64, coherence: CoherenceTime) -> Result<Self> {
        Self::with_mu(tau, theta, coherence, 1.0)
    }

    pub fn with_mu(tau: f64, theta: f64, coherence: CoherenceTime, mu: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::invalid("tau", format!("must be finite and >= 0, got {tau}")));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        if let CoherenceTime::Finite(t) = coherence {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid("coherence_time", format!("must be > 0, got {t}")));
            }
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::invalid("mu", format!("must be finite and > 0, got {mu}")));
        }
        Ok(Self { tau, theta: wrap_phase(theta), coherence, mu })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn coherence(&self) -> CoherenceTime {
        self.coherence
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Contrast factor `exp(-tau / T)`.
    #[inline]
    pub fn decay(&self) -> f64 {
        self.coherence.decay(self.tau)
    }

    /// Angular frequency in `b` of the likelihood fringe, `2 mu tau`.
    #[inline]
    pub fn fringe_frequency(&self) -> f64 {
        2.0 * self.mu * self.tau
    }

    #[inline]
    pub fn phase_at(&self, b: f64) -> f64 {
        self.fringe_frequency() * b + self.theta
    }
}

/// Binary result of a Ramsey readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// The `1/2 + ...` branch.
    Zero,
    /// The `1/2 - ...` branch.
    One,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Zero, Outcome::One];

    pub fn value(self) -> u8 {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }

    pub fn from_value(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Outcome::Zero),
            1 => Ok(Outcome::One),
            _ => Err(Error::invalid("outcome", format!("must be 0 or 1, got {v}"))),
        }
    }

    /// `pi * x`, the phase offset this outcome adds to the fringe.
    pub fn phase_offset(self) -> f64 {
        PI * self.value() as f64
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}
