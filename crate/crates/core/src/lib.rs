//! Simulation and reconstruction toolkit for RIS-aided single-frequency 3D
//! radio imaging.
//!
//! All lengths are in wavelengths (λ = 1).

pub mod channel;
pub mod cli;
pub mod coherence;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod rcs;
pub mod rng;
pub mod scene;
pub mod solvers;

pub use channel::{
    build_sensing_matrices, calibrate_noise, freespace_subpath, synthesize_measurements, ChannelSet, FixedChannels,
    MeasurementSet, PhaseCodebook, PhaseMode, SensingMatrixSet, C64,
};
pub use error::{Error, Result};
pub use geometry::{PlanarArray, Point3, SceneGeometry, VoxelGrid};
pub use scene::{MultiViewScene, PriorParams};
