//! Randomised invariants of the inference and Fourier layers.

use std::f64::consts::{LN_2, PI};

use proptest::prelude::*;

use ramsey_sched::bayes::{
    bayes_update, expected_posterior_functional, likelihood, mutual_information, predictive_prob, CoherenceTime,
    FieldDistribution, FieldGrid, Functional, Outcome, RamseyParams,
};
use ramsey_sched::fourier::{bias_from_comb, comb_from_distribution, kpe_posterior_comb};

fn grid() -> FieldGrid {
    FieldGrid::new(-20.0, 20.0, 1 << 11).unwrap()
}

fn mixture() -> impl Strategy<Value = FieldDistribution> {
    prop::collection::vec((0.1f64..1.0, -5.0f64..5.0, 0.4f64..3.0), 1..4).prop_map(|parts| {
        let g = grid();
        let density = g
            .points()
            .map(|b| parts.iter().map(|&(w, m, s)| w * (-(b - m).powi(2) / (2.0 * s * s)).exp()).sum())
            .collect();
        FieldDistribution::from_density(g, density).unwrap()
    })
}

fn coherence() -> impl Strategy<Value = CoherenceTime> {
    prop_oneof![Just(CoherenceTime::Infinite), (0.2f64..50.0).prop_map(CoherenceTime::Finite)]
}

fn params() -> impl Strategy<Value = RamseyParams> {
    (0.0f64..5.0, 0.0f64..2.0 * PI, coherence()).prop_map(|(tau, theta, c)| RamseyParams::new(tau, theta, c).unwrap())
}

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::Zero), Just(Outcome::One)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutual_information_is_expected_entropy_drop(d in mixture(), p in params()) {
        let mi = mutual_information(&d, &p);
        let after = expected_posterior_functional(&d, &p, Functional::Entropy).unwrap();
        prop_assert!((mi - (d.entropy() - after)).abs() < 1e-8);
    }

    #[test]
    fn mutual_information_is_bounded(d in mixture(), p in params()) {
        let mi = mutual_information(&d, &p);
        prop_assert!((-1e-15..=LN_2 + 1e-15).contains(&mi));
    }

    #[test]
    fn likelihoods_are_complete(b in -20.0f64..20.0, p in params()) {
        let (l0, l1) = (likelihood(Outcome::Zero, b, &p), likelihood(Outcome::One, b, &p));
        prop_assert_eq!(l0 + l1, 1.0);
        prop_assert!((0.0..=1.0).contains(&l0));
    }

    #[test]
    fn posteriors_are_normalised(d in mixture(), p in params(), x in outcome()) {
        let post = bayes_update(&d, &p, x).unwrap();
        prop_assert!((post.mass() - 1.0).abs() < 1e-9);
        prop_assert!(post.density().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn updates_commute(d in mixture(), p in params(), q in params(), x in outcome(), y in outcome()) {
        let ab = bayes_update(&bayes_update(&d, &p, x).unwrap(), &q, y).unwrap();
        let ba = bayes_update(&bayes_update(&d, &q, y).unwrap(), &p, x).unwrap();
        for (u, v) in ab.density().iter().zip(ba.density()) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn predictive_probabilities_sum_to_one(d in mixture(), p in params()) {
        let s = predictive_prob(&d, &p, Outcome::Zero) + predictive_prob(&d, &p, Outcome::One);
        prop_assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decoherence_never_adds_information(d in mixture(), tau in 0.0f64..5.0, theta in 0.0f64..2.0 * PI, t in 0.2f64..20.0, k in 1.0f64..10.0) {
        let short = RamseyParams::new(tau, theta, CoherenceTime::Finite(t)).unwrap();
        let long = RamseyParams::new(tau, theta, CoherenceTime::Finite(t * k)).unwrap();
        let none = RamseyParams::new(tau, theta, CoherenceTime::Infinite).unwrap();
        let (a, b, c) = (mutual_information(&d, &short), mutual_information(&d, &long), mutual_information(&d, &none));
        prop_assert!(a <= b + 1e-12 && b <= c + 1e-12);
    }

    #[test]
    fn phase_shift_by_pi_swaps_outcomes(d in mixture(), p in params()) {
        let q = RamseyParams::new(p.tau(), p.theta() + PI, p.coherence()).unwrap();
        prop_assert!((mutual_information(&d, &p) - mutual_information(&d, &q)).abs() < 1e-12);
        prop_assert!((predictive_prob(&d, &p, Outcome::Zero) - predictive_prob(&d, &q, Outcome::One)).abs() < 1e-12);
    }

    #[test]
    fn comb_bias_matches_grid(d in mixture(), p in params()) {
        let comb = comb_from_distribution(&d, &[p.fringe_frequency()]);
        let grid_bias = (predictive_prob(&d, &p, Outcome::Zero) - 0.5).abs();
        prop_assert!((bias_from_comb(&comb, &p) - grid_bias).abs() < 1e-10);
    }

    #[test]
    fn kpe_combs_are_normalised_and_hermitian(n in 1u32..8, tau1 in 0.01f64..10.0) {
        let c = kpe_posterior_comb(n, tau1).unwrap();
        prop_assert!(c.is_normalized(1e-15));
        prop_assert!(c.is_hermitian(1e-15));
        prop_assert_eq!(c.len(), (1usize << (n + 1)) - 1);
    }
}
