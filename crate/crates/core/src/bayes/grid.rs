use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default grid: b in [-20, 20] sampled at 2^14 points.
pub const DEFAULT_B_MIN: f64 = -20.0;
pub const DEFAULT_B_MAX: f64 = 20.0;
pub const DEFAULT_N_POINTS: usize = 1 << 14;

/// Uniformly spaced samples of the field axis, `b_min` and `b_max` inclusive.
///
/// All integrals over a grid use the composite trapezoidal rule, so the
/// quadrature weights are `spacing` in the interior and `spacing / 2` at
/// the two end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    b_min: f64,
    b_max: f64,
    n_points: usize,
}

impl FieldGrid {
    pub fn new(b_min: f64, b_max: f64, n_points: usize) -> Result<Self> {
        if !b_min.is_finite() || !b_max.is_finite() {
            return Err(Error::invalid("grid", "bounds must be finite"));
        }
        if b_min >= b_max {
            return Err(Error::invalid("grid", format!("b_min ({b_min}) must be below b_max ({b_max})")));
        }
        if n_points < 2 {
            return Err(Error::invalid("grid", format!("n_points must be >= 2, got {n_points}")));
        }
        Ok(Self { b_min, b_max, n_points })
    }

    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn width(&self) -> f64 {
        self.b_max - self.b_min
    }

    pub fn spacing(&self) -> f64 {
        self.width() / (self.n_points - 1) as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.b_max
        } else {
            self.b_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let h = self.spacing();
        let last = self.n_points - 1;
        (0..self.n_points).map(move |i| if i == last { self.b_max } else { self.b_min + i as f64 * h })
    }

    /// Trapezoidal quadrature weight of sample `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n_points {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.weight(i)).collect()
    }

    /// Trapezoidal integral of samples taken at the grid points.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        let n = values.len();
        let inner: f64 = values[1..n - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[n - 1]))
    }

    /// Index of the grid point closest to `b` (clamped to the grid).
    pub fn nearest_index(&self, b: f64) -> usize {
        let raw = ((b - self.b_min) / self.spacing()).round();
        raw.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    pub fn contains(&self, b: f64) -> bool {
        b >= self.b_min && b <= self.b_max
    }
}

impl Default for FieldGrid {
    fn default() -> Self {
        Self { b_min: DEFAULT_B_MIN, b_max: DEFAULT_B_MAX, n_points: DEFAULT_N_POINTS }
    }
}
