//! Quantitative evaluation: qubit efficiency, the intercept-resend tolerance
//! threshold, information measures and Monte-Carlo statistics.

mod efficiency;
mod info;
mod stats;

pub use efficiency::{efficiency, EfficiencyResult};
pub use info::{
    binary_entropy, eve_success_curve, mutual_information, solve_threshold, threshold_balance,
    ThresholdResult,
};
pub use stats::{
    aggregate_detection, binomial_two_sided_p, normal_half_width, wilson_interval, DetectionSummary,
};
