use std::io::Write;

use crate::error::{Error, Result};

use super::grid::FieldGrid;

/// `v ln v` with the `0 ln 0 = 0` convention.
#[inline]
pub(crate) fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

/// Probability density over the field, sampled on a [`FieldGrid`].
///
/// Densities are non-negative and normalised to unit trapezoidal mass at
/// construction. Values are never mutated afterwards; updates produce new
/// distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDistribution {
    grid: FieldGrid,
    density: Vec<f64>,
}

impl FieldDistribution {
    /// Normalises `density` (which must be non-negative with positive mass).
    pub fn from_density(grid: FieldGrid, mut density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.n_points() {
            return Err(Error::invalid(
                "density",
                format!("expected {} samples, got {}", grid.n_points(), density.len()),
            ));
        }
        if let Some(v) = density.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid("density", format!("samples must be finite and >= 0, found {v}")));
        }
        let mass = grid.integrate(&density);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("density", format!("total mass must be positive, got {mass}")));
        }
        density.iter_mut().for_each(|v| *v /= mass);
        Ok(Self { grid, density })
    }

    /// Flat density over the whole grid.
    pub fn uniform(grid: FieldGrid) -> Self {
        let density = vec![1.0 / grid.width(); grid.n_points()];
        Self { grid, density }
    }

    /// Flat density on `[lo, hi]` and zero elsewhere.
    pub fn uniform_on(grid: FieldGrid, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid("uniform_on", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        let density = grid.points().map(|b| if b >= lo && b <= hi { 1.0 } else { 0.0 }).collect();
        Self::from_density(grid, density)
    }

    pub fn gaussian(grid: FieldGrid, mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::invalid("prior_std", format!("must be finite and > 0, got {std}")));
        }
        if !mean.is_finite() {
            return Err(Error::invalid("prior_mean", "must be finite"));
        }
        let inv = 1.0 / (2.0 * std * std);
        let density = grid.points().map(|b| (-(b - mean) * (b - mean) * inv).exp()).collect();
        Self::from_density(grid, density)
    }

    /// All mass on the grid point nearest `b`.
    pub fn spike(grid: FieldGrid, b: f64) -> Self {
        let mut density = vec![0.0; grid.n_points()];
        let i = grid.nearest_index(b);
        density[i] = 1.0 / grid.weight(i);
        Self { grid, density }
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Trapezoidal integral of the density (one, up to rounding).
    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.density)
    }

    /// Trapezoidal integral of `f(b) * density(b)`.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.weighted().map(|(b, wp)| wp * f(b)).sum()
    }

    /// `(b_i, w_i * density_i)` pairs, `w_i` being the trapezoid weight.
    pub(crate) fn weighted(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let g = &self.grid;
        self.density.iter().enumerate().map(move |(i, p)| (g.point(i), g.weight(i) * p))
    }

    pub fn mean(&self) -> f64 {
        self.expect(|b| b)
    }

    /// Differential entropy in nats, `-∫ p ln p`.
    pub fn entropy(&self) -> f64 {
        let g = &self.grid;
        -self.density.iter().enumerate().map(|(i, &p)| g.weight(i) * xlogx(p)).sum::<f64>()
    }

    /// `<B^2> - <B>^2`, clamped at zero.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        // centred second moment equals <B^2> - <B>^2 with less cancellation
        self.expect(|b| (b - mean) * (b - mean)).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Builds the distribution without renormalising. Callers guarantee unit mass.
    pub(crate) fn from_normalized_parts(grid: FieldGrid, density: Vec<f64>) -> Self {
        Self { grid, density }
    }

    /// Two-column CSV (`b,density`) with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "b,density")?;
        for (b, p) in self.grid.points().zip(&self.density) {
            writeln!(out, "{},{}", crate::report::fmt_f64(b), crate::report::fmt_f64(*p))?;
        }
        Ok(())
    }
}

/// Free-function form of [`FieldDistribution::entropy`].
pub fn entropy(d: &FieldDistribution) -> f64 {
    d.entropy()
}

/// Free-function form of [`FieldDistribution::variance`].
pub fn variance(d: &FieldDistribution) -> f64 {
    d.variance()
}
