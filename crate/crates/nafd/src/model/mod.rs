//! Configuration, deployment geometry, correlation construction and channel
//! sampling.

mod config;
mod correlation;
mod geometry;
mod realization;

pub use config::{db_to_linear, CsiQuality, SystemConfig};
pub use correlation::{exponential_profile, pathloss_correlation, pathloss_gain, CorrelationSet};
pub use geometry::{
    build_geometry, correlations_from_layout, distance, rau_positions, sample_users, DuplexMode,
    GeometryScenario, Layout, Point, MAX_PLACEMENT_ATTEMPTS,
};
pub use realization::{sample_realization, ChannelRealization, ChannelSampler};
