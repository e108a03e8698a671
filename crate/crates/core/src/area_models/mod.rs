//! Analytical CC/CE area laws of a typical cell: exact moments, event
//! probabilities, conditional moments, moment-matched fits and the mixed
//! atom-plus-continuous distributions.

mod events;
mod fit;
mod mixed;
mod moments;

pub use events::{normalized_circumradii, prob_e1, prob_e3, E3Method, E3_SAMPLE_CELLS};
pub use fit::{
    conditional_from_parts, conditional_moments, fit_cc_truncated_beta, fit_ce_weibull,
    fit_truncated_beta, fit_weibull, truncated_beta_moments, BETA_SHAPE_RANGE, BETA_SUPPORT_FACTOR,
    WEIBULL_SHAPE_RANGE,
};
pub use mixed::{
    eval_mixed, weibull_inverse_moment, ContinuousPart, EvalKind, InverseMoment,
    MixedAreaDistribution,
};
pub use moments::{moments_cc, moments_ce, second_moment_scaled, RADIAL_CUTOFF};
