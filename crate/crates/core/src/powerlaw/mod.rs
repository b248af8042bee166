//! Heavy-tail statistics for integer-valued observations.

mod concentration;
mod fit;
mod sampler;
mod two_sample;

pub use concentration::{ccdf, lorenz_curve, top_share, Ccdf};
pub use fit::{
    fit_power_law, gof_p_value, ks_distance, mle_gamma, select_xmin, FitOptions, PowerLawFit, GAMMA_LOWER,
    GAMMA_UPPER, MIN_BOOTSTRAP, MIN_TAIL_FOR_SELECTION,
};
pub use sampler::DiscretePowerLaw;
pub use two_sample::{kolmogorov_survival, two_sample_ks, TwoSampleKs};
