//! Adaptive (KLD-sampling) Monte-Carlo localization against a fixed map.

mod kld;
mod mcl;
mod motion;

pub use kld::{kld_resample, kld_sample_size, KldConfig};
pub use mcl::{
    estimate, measurement_update, motion_update, write_particles_csv, McParticle, MonteCarloLocalizer,
    PoseCovariance,
};
pub use motion::{sample_delta, sample_odometry, OdomAlphas};
