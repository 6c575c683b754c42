//! Planar dynamics of an object held by elastic cables from N fixed robots.
//!
//! Each robot reels its own cable in or out by commanding a voltage. A cable
//! pulls the object toward its robot with tension `k · max(0, d − ℓ)`, where
//! `d` is the robot-object distance and `ℓ` the robot-controlled free length.
//! An episode ends at the horizon or as soon as any cable is stretched past
//! the break length.

mod config;
mod episode;
mod vec2;
mod world;

pub use config::WorldConfig;
pub use episode::{
    episode_cost, run_episode, settle_and_success, Controller, EpisodeOutcome, Sample, Scenario,
    Termination, Trajectory, EARLY_STOP_PENALTY,
};
pub use vec2::Vec2;
pub use world::{
    cable_tension, regular_polygon_anchors, CableReading, Features, ObjectState, World,
    GEOMETRY_EPS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate geometry: object or target coincides with robot {robot}'s anchor")]
    DegenerateGeometry { robot: usize },
    #[error("controller for robot {robot} returned non-finite voltage {value}")]
    ControllerFault { robot: usize, value: f64 },
}
