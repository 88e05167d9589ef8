//! Grid-based inference of a static field from Ramsey measurements.

mod distribution;
mod grid;
mod inference;
mod params;

pub use distribution::{entropy, variance, FieldDistribution};
pub use grid::{FieldGrid, DEFAULT_B_MAX, DEFAULT_B_MIN, DEFAULT_N_POINTS};
pub use inference::{
    bayes_update, conditional_entropy, expected_posterior_functional, likelihood, mutual_information,
    outcome_entropy, pointwise_conditional_entropy, predictive_prob, Functional, MAX_MUTUAL_INFORMATION,
    MIN_EVIDENCE,
};
pub use params::{wrap_phase, CoherenceTime, Outcome, RamseyParams};

pub(crate) use distribution::xlogx;
pub(crate) use inference::{binary_entropy_of_masses, outcome_pair, pointwise_entropy};
