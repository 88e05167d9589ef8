//! Fourier-cosine coefficients of the pointwise conditional entropy of a
//! full-contrast Ramsey measurement.
//!
//! As a function of the fringe phase `u = 2 mu b tau + theta` the pointwise
//! entropy is π-periodic and even, so
//!
//! ```text
//! H_p(u) = alpha_0 + Σ_{j>=1} alpha_j cos(2 j u)
//! ```
//!
//! `alpha_0` is the mean pointwise entropy (`2 ln 2 - 1`) and the `alpha_j`
//! for `j >= 1` are negative and increase towards zero. Two independent
//! routes are provided: a binomial series obtained from a Laurent expansion
//! of `ln(1 + cos x)` and direct quadrature of the defining integral.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terms smaller than this end the binomial series.
pub const TERM_TOLERANCE: f64 = 1e-15;
/// A series stopped by the cap with a last term above this did not converge.
pub const UNCONVERGED_TERM: f64 = 1e-12;
/// Default hard cap on the number of binomial terms.
///
/// Terms decay like `m^{-5/2}`, so reaching [`TERM_TOLERANCE`] takes roughly
/// 4.6e5 terms for every `j`.
pub const DEFAULT_TERM_CAP: usize = 1 << 20;
/// Default number of Gauss-Legendre panels per half period.
pub const DEFAULT_QUADRATURE_PANELS: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesMethod {
    ClosedSeries,
    Quadrature,
}

impl SeriesMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesMethod::ClosedSeries => "closed_series",
            SeriesMethod::Quadrature => "quadrature",
        }
    }
}

/// Coefficients `alpha_0 ..= alpha_{j_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSeries {
    coefficients: Vec<f64>,
    method: SeriesMethod,
}

impl AlphaSeries {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn method(&self) -> SeriesMethod {
        self.method
    }

    pub fn j_max(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn get(&self, j: usize) -> Option<f64> {
        self.coefficients.get(j).copied()
    }

    /// `alpha_0 > 0`, `alpha_j < 0` and strictly increasing for `j >= 1`.
    pub fn invariant_violations(&self) -> Vec<String> {
        let c = &self.coefficients;
        let mut out = Vec::new();
        if !(c[0] > 0.0) {
            out.push(format!("alpha_0 = {} is not positive", c[0]));
        }
        for j in 1..c.len() {
            if !(c[j] < 0.0) {
                out.push(format!("alpha_{j} = {} is not negative", c[j]));
            }
            if j >= 2 && !(c[j] > c[j - 1]) {
                out.push(format!("alpha_{j} = {} does not exceed alpha_{} = {}", c[j], j - 1, c[j - 1]));
            }
        }
        out
    }

    pub fn satisfies_invariants(&self) -> bool {
        self.invariant_violations().is_empty()
    }

    /// CSV rows `j,value,method`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "j,value,method")?;
        for (j, v) in self.coefficients.iter().enumerate() {
            writeln!(out, "{j},{},{}", crate::report::fmt_f64(*v), self.method.as_str())?;
        }
        Ok(())
    }
}

/// Which trigonometric kernel multiplies the entropy integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Cos,
    Sin,
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// `sin^2(t/2) ln sin^2(t/2)`, i.e. `q ln q` at `q = (1 - cos t)/2`.
#[inline]
fn half_angle_xlogx(t: f64) -> f64 {
    let s = (0.5 * t).sin();
    let q = s * s;
    if q > 0.0 {
        q * q.ln()
    } else {
        0.0
    }
}

/// `-(2/π) ∫_0^{2π} q(x) ln q(x) K(2 j x) dx` with `q = (1 + cos x)/2`.
///
/// The integrand has a `t^2 ln|t|` singularity at `x = π`. The period is
/// shifted to `t = x - π ∈ [-π, π]` and each half is mapped with
/// `t = ±π u^3`, which smooths the singularity, before applying composite
/// Gauss-Legendre with `panels` panels per half.
pub fn entropy_kernel_moment(j: usize, kernel: Kernel, panels: usize) -> f64 {
    let panels = panels.max(1);
    let freq = 2.0 * j as f64;
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for sign in [1.0, -1.0] {
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * h;
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
                for u in [mid - 0.5 * h * node, mid + 0.5 * h * node] {
                    let t = sign * PI * u * u * u;
                    let jac = 3.0 * PI * u * u;
                    // cos(2j(π + t)) = cos(2jt), sin(2j(π + t)) = sin(2jt)
                    let trig = match kernel {
                        Kernel::Cos => (freq * t).cos(),
                        Kernel::Sin => (freq * t).sin(),
                    };
                    acc += 0.5 * h * weight * jac * half_angle_xlogx(t) * trig;
                }
            }
        }
    }
    -2.0 / PI * acc
}

/// Coefficients by direct quadrature of the defining integral.
pub fn alpha_series_quadrature(j_max: usize) -> AlphaSeries {
    alpha_series_quadrature_with_panels(j_max, DEFAULT_QUADRATURE_PANELS)
}

pub fn alpha_series_quadrature_with_panels(j_max: usize, panels: usize) -> AlphaSeries {
    let coefficients = (0..=j_max)
        .map(|j| {
            let v = entropy_kernel_moment(j, Kernel::Cos, panels);
            // the integral at j = 0 is twice the constant term of a cosine series
            if j == 0 {
                0.5 * v
            } else {
                v
            }
        })
        .collect();
    AlphaSeries { coefficients, method: SeriesMethod::Quadrature }
}

/// `alpha_j` for `j >= 1` from the binomial series.
///
/// With `p_m = C(2m, m+j) / 4^m`,
///
/// ```text
/// alpha_j = Σ_{m>=j} 4^{-m} [ C(2m,m+j)/m - 2 C(2m-1,m+j-1)/(2m-1) - C(2m+1,m+j+1)/(2(2m+1)) ]
///         = Σ_{m>=j} p_m [ (m-j-1)/(m(2m-1)) - 1/(2(m+j+1)) ]
/// ```
///
/// Early terms are negative; from some `m` on they are positive and decay
/// like `m^{-5/2}`. Summation stops at the first term in that regime below
/// [`TERM_TOLERANCE`].
pub fn closed_series_term_sum(j: usize, term_cap: usize) -> Result<(f64, usize)> {
    if j == 0 {
        return Err(Error::invalid("j", "the binomial series is defined for j >= 1"));
    }
    let jf = j as f64;
    let mut p = 0.25f64.powi(j as i32);
    let mut sum = 0.0;
    let mut prev = 0.0f64;
    let mut last = f64::INFINITY;
    let mut m = j;
    let mut terms = 0;
    while terms < term_cap {
        let mf = m as f64;
        let term = p * ((mf - jf - 1.0) / (mf * (2.0 * mf - 1.0)) - 0.5 / (mf + jf + 1.0));
        sum += term;
        terms += 1;
        last = term;
        // positive, past the peak and small
        if term > 0.0 && prev > 0.0 && term < prev && term < TERM_TOLERANCE {
            return Ok((sum, terms));
        }
        prev = term;
        p *= (2.0 * mf + 2.0) * (2.0 * mf + 1.0) / (4.0 * (mf + jf + 1.0) * (mf - jf + 1.0));
        m += 1;
    }
    if last.abs() > UNCONVERGED_TERM {
        Err(Error::TruncationNotConverged { j, last_term: last, terms })
    } else {
        Ok((sum, terms))
    }
}

/// Coefficients from the binomial series; `alpha_0` always comes from quadrature.
pub fn alpha_series_closed(j_max: usize, term_cap: usize) -> Result<AlphaSeries> {
    if term_cap < j_max + 10 {
        return Err(Error::invalid("term_cap", format!("must be >= j_max + 10 = {}, got {term_cap}", j_max + 10)));
    }
    let mut coefficients = Vec::with_capacity(j_max + 1);
    coefficients.push(0.5 * entropy_kernel_moment(0, Kernel::Cos, DEFAULT_QUADRATURE_PANELS));
    for j in 1..=j_max {
        coefficients.push(closed_series_term_sum(j, term_cap)?.0);
    }
    Ok(AlphaSeries { coefficients, method: SeriesMethod::ClosedSeries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::pointwise_entropy;

    // Reference values from 30-digit adaptive quadrature (mpmath) of the
    // defining integral. They coincide with -1/(j (4j^2 - 1)).
    const REFERENCE: [(usize, f64); 5] = [
        (1, -0.333_333_333_333_333_3),
        (2, -0.033_333_333_333_333_33),
        (3, -0.009_523_809_523_809_524),
        (5, -0.002_020_202_020_202_02),
        (32, -7.631_257_631_257_631e-6),
    ];

    #[test]
    fn quadrature_matches_reference_values() {
        let q = alpha_series_quadrature(32);
        for (j, v) in REFERENCE {
            assert!((q.coefficients()[j] - v).abs() < 1e-12, "j={j}: {}", q.coefficients()[j]);
        }
        // alpha_0 = (4 ln 2 - 2) / 2
        assert!((q.coefficients()[0] - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_is_mean_pointwise_entropy() {
        // independent check: plain Riemann average of the pointwise entropy over a period
        let n = 1 << 16;
        let mean: f64 = (0..n).map(|i| pointwise_entropy((2.0 * PI * i as f64 / n as f64).cos())).sum::<f64>() / n as f64;
        let a0 = alpha_series_quadrature(0).coefficients()[0];
        assert!((a0 - mean).abs() < 1e-9);
        assert!(a0 > 0.0 && a0 < 2f64.ln());
    }

    #[test]
    fn quadrature_is_resolution_stable() {
        let coarse = alpha_series_quadrature_with_panels(32, 1 << 12);
        let fine = alpha_series_quadrature_with_panels(32, 1 << 14);
        for (a, b) in coarse.coefficients().iter().zip(fine.coefficients()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sine_moments_vanish() {
        for j in [0, 1, 4, 17] {
            assert!(entropy_kernel_moment(j, Kernel::Sin, DEFAULT_QUADRATURE_PANELS).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_series_agrees_with_quadrature() {
        let closed = alpha_series_closed(32, DEFAULT_TERM_CAP).unwrap();
        let quad = alpha_series_quadrature(32);
        for j in 1..=32 {
            let d = (closed.coefficients()[j] - quad.coefficients()[j]).abs();
            assert!(d < 1e-8, "j={j}: diff {d}");
        }
        assert_eq!(closed.coefficients()[0], quad.coefficients()[0]);
    }

    #[test]
    fn coefficients_are_negative_and_increasing() {
        let closed = alpha_series_closed(32, DEFAULT_TERM_CAP).unwrap();
        assert!(closed.satisfies_invariants(), "{:?}", closed.invariant_violations());
        let c = closed.coefficients();
        assert!(c[20].abs() < c[5].abs());
        assert!(alpha_series_quadrature(32).satisfies_invariants());
    }

    #[test]
    fn short_cap_reports_truncation() {
        let err = alpha_series_closed(4, 500).unwrap_err();
        assert!(matches!(err, Error::TruncationNotConverged { j: 1, terms: 500, .. }), "{err:?}");
        assert!(alpha_series_closed(4, 10).is_err());
    }

    #[test]
    fn invariant_checker_flags_bad_series() {
        let bad = AlphaSeries { coefficients: vec![-0.3, -0.1, -0.2, 0.01], method: SeriesMethod::Quadrature };
        assert_eq!(bad.invariant_violations().len(), 3);
    }
}
