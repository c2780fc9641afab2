//! Occupancy-grid SLAM with a Rao-Blackwellized particle filter.

mod export;
mod grid;
mod likelihood;
mod matcher;
mod rbpf;

pub use export::{read_map_metadata, read_pgm, write_map_metadata, write_pgm, MapMetadata};
pub use grid::{CellClass, OccupancyGrid, SensorModel};
pub use likelihood::{beam_loglik, scan_likelihood, ScanPoints};
pub use matcher::{scan_match, MatchParams};
pub(crate) use rbpf::normalize_log_weights;
pub use rbpf::{
    best_map, best_particle_index, effective_sample_size, low_variance_resample, rbpf_update,
    RbpfConfig, RbpfStats, SlamParticle,
};
