//! Sparse Fourier ("delta comb") representation of periodic densities.
//!
//! Transform convention: `F[p](xi) = ∫ p(b) e^{-i xi b} db`. A fringe
//! `cos(2 mu tau b + phi)` therefore contributes `e^{+i phi}/2` at
//! `xi = +2 mu tau` and `e^{-i phi}/2` at `xi = -2 mu tau`.

use num_complex::Complex64;
use crate::bayes::{pointwise_entropy, FieldDistribution, Outcome, RamseyParams};
use crate::error::{Error, Result};

use super::alpha::AlphaSeries;

/// Peaks closer than this in frequency are merged.
pub const MERGE_TOLERANCE: f64 = 1e-9;
/// Peaks with smaller magnitude are dropped.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub xi: f64,
    pub amplitude: Complex64,
}

/// Sorted, merged and pruned list of Fourier point masses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaComb {
    peaks: Vec<Peak>,
}

impl DeltaComb {
    pub fn from_peaks(peaks: impl IntoIterator<Item = (f64, Complex64)>) -> Self {
        let mut raw: Vec<Peak> = peaks.into_iter().map(|(xi, amplitude)| Peak { xi, amplitude }).collect();
        raw.sort_by(|a, b| a.xi.total_cmp(&b.xi));
        let mut merged: Vec<Peak> = Vec::with_capacity(raw.len());
        for p in raw {
            match merged.last_mut() {
                Some(last) if p.xi - last.xi <= MERGE_TOLERANCE => last.amplitude += p.amplitude,
                _ => merged.push(p),
            }
        }
        merged.retain(|p| p.amplitude.norm() >= PRUNE_TOLERANCE);
        Self { peaks: merged }
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Amplitude of the peak within [`MERGE_TOLERANCE`] of `xi`, or zero.
    pub fn amplitude_at(&self, xi: f64) -> Complex64 {
        let idx = self.peaks.partition_point(|p| p.xi < xi - MERGE_TOLERANCE);
        match self.peaks.get(idx) {
            Some(p) if (p.xi - xi).abs() <= MERGE_TOLERANCE => p.amplitude,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Every peak `(xi, a)` has a partner `(-xi, conj a)`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.peaks.iter().all(|p| (self.amplitude_at(-p.xi) - p.amplitude.conj()).norm() <= tol)
    }

    /// Amplitude one at the origin, as for a normalised density.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.amplitude_at(0.0) - Complex64::new(1.0, 0.0)).norm() <= tol
    }

    /// Comb of the density translated by `+shift`: `a(xi) -> a(xi) e^{-i xi shift}`.
    pub fn shifted(&self, shift: f64) -> Self {
        let peaks = self.peaks.iter().map(|p| (p.xi, p.amplitude * Complex64::from_polar(1.0, -p.xi * shift)));
        Self::from_peaks(peaks)
    }

    /// CSV rows `xi,re,im`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        use crate::report::fmt_f64;
        writeln!(out, "xi,re,im")?;
        for p in &self.peaks {
            writeln!(out, "{},{},{}", fmt_f64(p.xi), fmt_f64(p.amplitude.re), fmt_f64(p.amplitude.im))?;
        }
        Ok(())
    }
}

/// Trapezoidal `∫ p(b) e^{-i xi b} db`.
pub fn fourier_amplitude(d: &FieldDistribution, xi: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    let g = d.grid();
    for (i, &p) in d.density().iter().enumerate() {
        let wp = g.weight(i) * p;
        let (s, c) = (xi * g.point(i)).sin_cos();
        re += wp * c;
        im -= wp * s;
    }
    Complex64::new(re, im)
}

/// Comb of `d` sampled at `frequencies`, their negatives and zero.
pub fn comb_from_distribution(d: &FieldDistribution, frequencies: &[f64]) -> DeltaComb {
    let mut xs: Vec<f64> = frequencies.iter().map(|x| x.abs()).filter(|x| *x > MERGE_TOLERANCE).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOLERANCE);
    let mut peaks = vec![(0.0, fourier_amplitude(d, 0.0))];
    for xi in xs {
        let a = fourier_amplitude(d, xi);
        peaks.push((xi, a));
        peaks.push((-xi, a.conj()));
    }
    DeltaComb::from_peaks(peaks)
}

/// Comb of the likelihood `Pr(X = x | B)` as a function of `b`.
pub fn measurement_comb(p: &RamseyParams, x: Outcome) -> DeltaComb {
    let side = 0.25 * p.decay();
    let phase = p.theta() + x.phase_offset();
    let w = p.fringe_frequency();
    DeltaComb::from_peaks([
        (0.0, Complex64::new(0.5, 0.0)),
        (w, Complex64::from_polar(side, phase)),
        (-w, Complex64::from_polar(side, -phase)),
    ])
}

/// `|Pr(X = 0) - 1/2|` from the comb of the prior.
pub fn bias_from_comb(c: &DeltaComb, p: &RamseyParams) -> f64 {
    let a = c.amplitude_at(p.fringe_frequency());
    let rot = Complex64::from_polar(1.0, -p.theta());
    (0.5 * p.decay() * (rot * a).re).abs()
}

/// `H(X|B)` from the comb of the prior and the alpha series.
///
/// Only full-contrast measurements are supported; with `tau = 0` the
/// likelihood is flat and the pointwise entropy is returned directly.
pub fn conditional_entropy_from_comb(c: &DeltaComb, p: &RamseyParams, a: &AlphaSeries) -> Result<f64> {
    let decay = p.decay();
    if p.tau() == 0.0 {
        return Ok(pointwise_entropy(p.theta().cos()) * c.amplitude_at(0.0).re);
    }
    if decay < 1.0 {
        return Err(Error::FiniteCoherence { decay });
    }
    let spacing = 2.0 * p.fringe_frequency();
    let alpha = a.coefficients();
    let mut h = alpha[0] * c.amplitude_at(0.0).re;
    for peak in c.peaks().iter().filter(|pk| pk.xi > MERGE_TOLERANCE) {
        let k = (peak.xi / spacing).round();
        if k < 1.0 || (peak.xi - k * spacing).abs() > MERGE_TOLERANCE {
            continue;
        }
        let k = k as usize;
        let coeff = *alpha.get(k).ok_or(Error::InsufficientSeries { required: k, available: a.j_max() })?;
        let rot = Complex64::from_polar(1.0, -2.0 * k as f64 * p.theta());
        h += coeff * (rot * peak.amplitude).re;
    }
    Ok(h)
}

/// Comb of the rezeroed posterior after `n` KPE measurements on a diffuse
/// prior without decoherence: weights `1 - |j|/2^n` at `xi = 2^{2-n} tau1 j`.
pub fn kpe_posterior_comb(n: u32, tau1: f64) -> Result<DeltaComb> {
    if n < 1 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if n > 30 {
        return Err(Error::invalid("n", format!("at most 30 measurements supported, got {n}")));
    }
    if !(tau1 > 0.0 && tau1.is_finite()) {
        return Err(Error::invalid("tau1", format!("must be finite and > 0, got {tau1}")));
    }
    let top = 1i64 << n;
    let spacing = tau1 * 2f64.powi(2 - n as i32);
    Ok(DeltaComb::from_peaks(
        (-top + 1..top).map(|j| (spacing * j as f64, Complex64::new(1.0 - j.abs() as f64 / top as f64, 0.0))),
    ))
}

/// Translation that rezeroes a KPE posterior whose latest measurement was
/// `last` with outcome `x`, so that every fringe in the product has zero phase.
///
/// Along the KPE schedule each phase `theta_i + pi x_i` is congruent to half
/// the previous one, so the shift fixed by the latest fringe works for all.
pub fn kpe_rezero_shift(last: &RamseyParams, x: Outcome) -> f64 {
    (last.theta() + x.phase_offset()) / last.fringe_frequency()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{bayes_update, predictive_prob, CoherenceTime, FieldGrid};
    use crate::fourier::alpha_series_quadrature;
    use std::f64::consts::PI;

    fn inf(tau: f64, theta: f64) -> RamseyParams {
        RamseyParams::new(tau, theta, CoherenceTime::Infinite).unwrap()
    }

    /// Grid of width 40: frequencies that are multiples of 2π/40 integrate exactly.
    fn periodic_grid() -> FieldGrid {
        FieldGrid::new(-20.0, 20.0, 1 << 14).unwrap()
    }

    const BASE: f64 = PI / 20.0;

    #[test]
    fn merges_and_prunes() {
        let c = DeltaComb::from_peaks([
            (1.0, Complex64::new(0.5, 0.0)),
            (1.0 + 1e-10, Complex64::new(0.25, 0.0)),
            (0.0, Complex64::new(1.0, 0.0)),
            (2.0, Complex64::new(1e-13, 0.0)),
        ]);
        assert_eq!(c.len(), 2);
        assert_eq!(c.peaks()[0].xi, 0.0);
        assert!((c.amplitude_at(1.0).re - 0.75).abs() < 1e-15);
        assert_eq!(c.amplitude_at(2.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn diffuse_distribution_has_no_frequency_content() {
        let d = FieldDistribution::uniform(periodic_grid());
        let xs = [BASE, 7.0 * BASE, 33.0 * BASE];
        let c = comb_from_distribution(&d, &xs);
        assert!(c.is_normalized(1e-10));
        for xi in xs {
            assert!(c.amplitude_at(xi).norm() < 1e-12);
        }
    }

    #[test]
    fn fringe_density_has_half_amplitude_peak() {
        // oracle: (1 + cos(w b + theta)) / W has amplitude e^{i theta}/2 at +w
        let g = periodic_grid();
        let (w, theta) = (8.0 * BASE, 0.9);
        let dens = g.points().map(|b| 1.0 + (w * b + theta).cos()).collect();
        let d = FieldDistribution::from_density(g, dens).unwrap();
        let c = comb_from_distribution(&d, &[w]);
        let a = c.amplitude_at(w);
        assert!((a - Complex64::from_polar(0.5, theta)).norm() < 1e-3);
        assert!((a.norm() - 0.5).abs() < 1e-3);
        assert!(c.is_hermitian(1e-10));
    }

    #[test]
    fn gaussian_characteristic_function() {
        let sigma = 1.3;
        let d = FieldDistribution::gaussian(periodic_grid(), 0.0, sigma).unwrap();
        for xi in [0.2, 0.9, 2.0] {
            let a = fourier_amplitude(&d, xi);
            assert!((a.re - (-(sigma * xi).powi(2) / 2.0).exp()).abs() < 1e-6);
            assert!(a.im.abs() < 1e-6);
        }
    }

    #[test]
    fn measurement_comb_shape() {
        let c = measurement_comb(&inf(0.8, 0.0), Outcome::Zero);
        assert_eq!(c.len(), 3);
        assert_eq!(c.amplitude_at(0.0), Complex64::new(0.5, 0.0));
        assert!((c.amplitude_at(1.6).norm() - 0.25).abs() < 1e-15);
        assert!((c.amplitude_at(-1.6).norm() - 0.25).abs() < 1e-15);

        let p = inf(0.8, 0.4);
        let a0 = measurement_comb(&p, Outcome::Zero).amplitude_at(1.6);
        let a1 = measurement_comb(&p, Outcome::One).amplitude_at(1.6);
        let dphi = (a1.arg() - a0.arg()).rem_euclid(2.0 * PI);
        assert!((dphi - PI).abs() < 1e-12);

        let collapsed = measurement_comb(&inf(0.0, 0.3), Outcome::Zero);
        assert_eq!(collapsed.len(), 1);
        assert!((collapsed.amplitude_at(0.0).re - (0.5 + 0.5 * 0.3f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn measurement_comb_matches_likelihood_transform() {
        let g = periodic_grid();
        let p = RamseyParams::new(6.0 * BASE / 2.0, 1.2, CoherenceTime::Finite(3.0)).unwrap();
        for x in Outcome::BOTH {
            let lik: Vec<f64> = g.points().map(|b| crate::bayes::likelihood(x, b, &p)).collect();
            // scale: a density proportional to the likelihood has F(0) = 1
            let d = FieldDistribution::from_density(g, lik).unwrap();
            let from_grid = comb_from_distribution(&d, &[p.fringe_frequency()]);
            let analytic = measurement_comb(&p, x);
            for xi in [0.0, p.fringe_frequency(), -p.fringe_frequency()] {
                assert!((from_grid.amplitude_at(xi) - analytic.amplitude_at(xi) * 2.0).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn diffuse_prior_has_no_bias() {
        let c = DeltaComb::from_peaks([(0.0, Complex64::new(1.0, 0.0))]);
        for tau in [0.1, 1.0, 4.0] {
            assert_eq!(bias_from_comb(&c, &inf(tau, 1.0)), 0.0);
        }
    }

    #[test]
    fn off_resonance_and_off_phase_have_no_bias() {
        let g = periodic_grid();
        let tau1 = 8.0 * BASE;
        let post = bayes_update(&FieldDistribution::uniform(g), &inf(tau1, 0.7), Outcome::One).unwrap();
        let c = comb_from_distribution(&post, &[2.0 * tau1, tau1]);
        // off resonance: no peak at 2 tau
        assert!(bias_from_comb(&c, &inf(tau1 / 2.0, 0.0)) < MERGE_TOLERANCE);
        // off phase: theta = arg F(2 tau) + π/2 at the matching peak
        let a = c.amplitude_at(2.0 * tau1);
        let p = inf(tau1, a.arg() + PI / 2.0);
        let b = bias_from_comb(&c, &p);
        assert!(b < 1e-8);
        assert!((predictive_prob(&post, &p, Outcome::Zero) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn bias_matches_grid_predictive() {
        let d = FieldDistribution::gaussian(periodic_grid(), 0.4, 0.8).unwrap();
        for (tau, theta) in [(0.3, 0.0), (0.7, 2.0), (1.9, 4.0)] {
            let p = RamseyParams::new(tau, theta, CoherenceTime::Finite(5.0)).unwrap();
            let c = comb_from_distribution(&d, &[p.fringe_frequency()]);
            let grid_bias = (predictive_prob(&d, &p, Outcome::Zero) - 0.5).abs();
            assert!((bias_from_comb(&c, &p) - grid_bias).abs() < 1e-8);
        }
    }

    #[test]
    fn conditional_entropy_cases() {
        let alpha = alpha_series_quadrature(16);
        let a = alpha.coefficients();
        let diffuse = DeltaComb::from_peaks([(0.0, Complex64::new(1.0, 0.0))]);
        assert_eq!(conditional_entropy_from_comb(&diffuse, &inf(1.3, 0.2), &alpha).unwrap(), a[0]);

        let g = periodic_grid();
        let tau1 = 8.0 * BASE;
        let (theta1, x1) = (0.6, Outcome::One);
        let post = bayes_update(&FieldDistribution::uniform(g), &inf(tau1, theta1), x1).unwrap();
        let c = comb_from_distribution(&post, &[2.0 * tau1]);
        // matched second measurement: alpha_0 + alpha_1 * (1/2) cos(0)
        let matched = inf(tau1 / 2.0, (theta1 + PI) / 2.0);
        let h = conditional_entropy_from_comb(&c, &matched, &alpha).unwrap();
        assert!((h - (a[0] + 0.5 * a[1])).abs() < 1e-10);
        assert!((h - crate::bayes::conditional_entropy(&post, &matched)).abs() < 1e-6);
        // off the comb
        let off = inf(0.37 * tau1, 0.0);
        assert!((conditional_entropy_from_comb(&c, &off, &alpha).unwrap() - a[0]).abs() < MERGE_TOLERANCE);
    }

    #[test]
    fn conditional_entropy_errors() {
        let alpha = alpha_series_quadrature(2);
        let c = kpe_posterior_comb(3, 1.0).unwrap();
        // peaks at multiples of 0.5; 4 tau = 0.5 puts k up to 14 on the comb
        assert!(matches!(
            conditional_entropy_from_comb(&c, &inf(0.125, 0.0), &alpha),
            Err(Error::InsufficientSeries { available: 2, .. })
        ));
        let finite = RamseyParams::new(1.0, 0.0, CoherenceTime::Finite(2.0)).unwrap();
        assert!(matches!(conditional_entropy_from_comb(&c, &finite, &alpha), Err(Error::FiniteCoherence { .. })));
    }

    #[test]
    fn kpe_comb_shapes() {
        let c1 = kpe_posterior_comb(1, 1.5).unwrap();
        assert_eq!(c1.len(), 3);
        assert!((c1.amplitude_at(-3.0).re - 0.5).abs() < 1e-15);
        assert_eq!(c1.amplitude_at(0.0).re, 1.0);
        assert!((c1.amplitude_at(3.0).re - 0.5).abs() < 1e-15);

        let c2 = kpe_posterior_comb(2, 1.5).unwrap();
        assert_eq!(c2.len(), 7);
        for j in -3i32..=3 {
            assert!((c2.amplitude_at(1.5 * j as f64).re - (1.0 - j.abs() as f64 / 4.0)).abs() < 1e-15);
        }
        for n in 1..=6 {
            let c = kpe_posterior_comb(n, 0.7).unwrap();
            assert!(c.is_normalized(1e-15) && c.is_hermitian(1e-15));
            assert_eq!(c.len(), (1 << (n + 1)) - 1);
            assert!(c.peaks().iter().all(|p| p.amplitude.norm() <= 1.0));
        }
        assert!(kpe_posterior_comb(0, 1.0).is_err());
        assert!(kpe_posterior_comb(2, 0.0).is_err());
    }

    #[test]
    fn shifting_moves_phase_only() {
        let c = kpe_posterior_comb(2, 1.0).unwrap().shifted(0.3);
        assert!((c.amplitude_at(1.0).norm() - 0.75).abs() < 1e-15);
        assert!((c.amplitude_at(1.0).arg() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        kpe_posterior_comb(1, 1.0).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("xi,re,im"));
        assert_eq!(text.lines().count(), 4);
    }
}
