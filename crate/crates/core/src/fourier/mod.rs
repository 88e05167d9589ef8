//! Fourier-domain view of the inference problem: delta combs of periodic
//! densities and the coefficient series of the pointwise conditional entropy.

mod alpha;
mod comb;

pub use alpha::{
    alpha_series_closed, alpha_series_quadrature, alpha_series_quadrature_with_panels, closed_series_term_sum,
    entropy_kernel_moment, AlphaSeries, Kernel, SeriesMethod, DEFAULT_QUADRATURE_PANELS, DEFAULT_TERM_CAP,
    TERM_TOLERANCE, UNCONVERGED_TERM,
};
pub use comb::{
    bias_from_comb, comb_from_distribution, conditional_entropy_from_comb, fourier_amplitude, kpe_posterior_comb,
    kpe_rezero_shift, measurement_comb, DeltaComb, Peak, MERGE_TOLERANCE, PRUNE_TOLERANCE,
};
