//! Ramsey likelihoods, Bayes updates and the information functionals built on them.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::distribution::{xlogx, FieldDistribution};
use super::params::{Outcome, RamseyParams};

/// Evidence at or below this is treated as an impossible outcome.
pub const MIN_EVIDENCE: f64 = 1e-300;

/// Both outcome probabilities for a fringe value `c = decay * cos(phase)`.
///
/// The smaller branch is computed directly and the larger as its complement,
/// which makes the two sum to exactly one in floating point.
#[inline]
pub(crate) fn outcome_pair(c: f64) -> (f64, f64) {
    let small = 0.5 - 0.5 * c.abs();
    let large = 1.0 - small;
    if c >= 0.0 {
        (large, small)
    } else {
        (small, large)
    }
}

/// Binary entropy (nats) of the outcome distribution at fringe value `c`.
#[inline]
pub(crate) fn pointwise_entropy(c: f64) -> f64 {
    let (l0, l1) = outcome_pair(c);
    -(xlogx(l0) + xlogx(l1))
}

/// Entropy (nats) of a two-outcome distribution given unnormalised masses.
#[inline]
pub(crate) fn binary_entropy_of_masses(m0: f64, m1: f64) -> f64 {
    let total = m0 + m1;
    -(xlogx(m0 / total) + xlogx(m1 / total))
}

/// `Pr(X = x | B = b)` for a Ramsey measurement.
pub fn likelihood(x: Outcome, b: f64, p: &RamseyParams) -> f64 {
    let (l0, l1) = outcome_pair(p.decay() * p.phase_at(b).cos());
    match x {
        Outcome::Zero => l0,
        Outcome::One => l1,
    }
}

/// Pointwise binary entropy of the measurement outcome at field `b`.
pub fn pointwise_conditional_entropy(b: f64, p: &RamseyParams) -> f64 {
    pointwise_entropy(p.decay() * p.phase_at(b).cos())
}

/// Unnormalised outcome masses `(∫ L0 p, ∫ L1 p)` by trapezoidal quadrature.
fn outcome_masses(d: &FieldDistribution, p: &RamseyParams) -> (f64, f64) {
    let decay = p.decay();
    let (mut m0, mut m1) = (0.0, 0.0);
    for (b, wp) in d.weighted() {
        let (l0, l1) = outcome_pair(decay * p.phase_at(b).cos());
        m0 += wp * l0;
        m1 += wp * l1;
    }
    (m0, m1)
}

/// Marginal probability of outcome `x` under `d`.
pub fn predictive_prob(d: &FieldDistribution, p: &RamseyParams, x: Outcome) -> f64 {
    let (m0, m1) = outcome_masses(d, p);
    let total = m0 + m1;
    match x {
        Outcome::Zero => m0 / total,
        Outcome::One => m1 / total,
    }
}

/// Posterior after observing `x`, renormalised to unit mass on the same grid.
pub fn bayes_update(d: &FieldDistribution, p: &RamseyParams, x: Outcome) -> Result<FieldDistribution> {
    let grid = *d.grid();
    let decay = p.decay();
    let mut density: Vec<f64> = grid
        .points()
        .zip(d.density())
        .map(|(b, &prior)| {
            let (l0, l1) = outcome_pair(decay * p.phase_at(b).cos());
            prior * if x == Outcome::Zero { l0 } else { l1 }
        })
        .collect();
    let evidence = grid.integrate(&density);
    if !(evidence > MIN_EVIDENCE) {
        return Err(Error::ZeroEvidence { evidence });
    }
    density.iter_mut().for_each(|v| *v /= evidence);
    Ok(FieldDistribution::from_normalized_parts(grid, density))
}

/// `I(B; X) = H(X) - H(X|B)` evaluated directly from the prior and the likelihoods.
pub fn mutual_information(d: &FieldDistribution, p: &RamseyParams) -> f64 {
    let decay = p.decay();
    let (mut m0, mut m1, mut cond) = (0.0, 0.0, 0.0);
    for (b, wp) in d.weighted() {
        let (l0, l1) = outcome_pair(decay * p.phase_at(b).cos());
        m0 += wp * l0;
        m1 += wp * l1;
        cond -= wp * (xlogx(l0) + xlogx(l1));
    }
    let total = m0 + m1;
    binary_entropy_of_masses(m0, m1) - cond / total
}

/// `H(X)`, the entropy of the predictive outcome distribution.
pub fn outcome_entropy(d: &FieldDistribution, p: &RamseyParams) -> f64 {
    let (m0, m1) = outcome_masses(d, p);
    binary_entropy_of_masses(m0, m1)
}

/// `H(X|B)`, the prior average of the pointwise binary entropy.
pub fn conditional_entropy(d: &FieldDistribution, p: &RamseyParams) -> f64 {
    d.expect(|b| pointwise_conditional_entropy(b, p)) / d.mass()
}

/// Functional whose post-measurement expectation a policy minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Entropy,
    Variance,
}

/// `Σ_x Pr(X = x) G[Pr(B | X = x)]`.
///
/// Outcomes with zero evidence contribute nothing; an error is returned
/// only if neither outcome is possible.
pub fn expected_posterior_functional(d: &FieldDistribution, p: &RamseyParams, g: Functional) -> Result<f64> {
    match g {
        Functional::Entropy => {
            let mut acc = 0.0;
            let mut any = false;
            for x in Outcome::BOTH {
                let px = predictive_prob(d, p, x);
                if px <= MIN_EVIDENCE {
                    continue;
                }
                acc += px * bayes_update(d, p, x)?.entropy();
                any = true;
            }
            if any {
                Ok(acc)
            } else {
                Err(Error::ZeroEvidence { evidence: 0.0 })
            }
        }
        Functional::Variance => expected_posterior_variance(d, p),
    }
}

/// Expected posterior variance from outcome-conditional moments.
///
/// Algebraically identical to updating on each outcome and taking the
/// variance, but needs no intermediate distributions. Moments are taken
/// about the prior mean.
pub(crate) fn expected_posterior_variance(d: &FieldDistribution, p: &RamseyParams) -> Result<f64> {
    let centre = d.mean();
    let decay = p.decay();
    let mut m = [[0.0f64; 3]; 2];
    for (b, wp) in d.weighted() {
        let (l0, l1) = outcome_pair(decay * p.phase_at(b).cos());
        let db = b - centre;
        for (row, l) in m.iter_mut().zip([l0, l1]) {
            let w = wp * l;
            row[0] += w;
            row[1] += w * db;
            row[2] += w * db * db;
        }
    }
    let total = m[0][0] + m[1][0];
    let mut acc = 0.0;
    let mut any = false;
    for row in &m {
        let px = row[0] / total;
        if px <= MIN_EVIDENCE {
            continue;
        }
        let mean = row[1] / row[0];
        acc += px * (row[2] / row[0] - mean * mean).max(0.0);
        any = true;
    }
    if any {
        Ok(acc)
    } else {
        Err(Error::ZeroEvidence { evidence: 0.0 })
    }
}

/// Upper bound of the mutual information of one binary measurement.
pub const MAX_MUTUAL_INFORMATION: f64 = LN_2;
