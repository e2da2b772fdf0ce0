//! Deterministic CPU simulation of deformable-object manipulation tasks:
//! a position-based dynamics engine, ten benchmark tasks with procedural
//! variations, evaluation metrics, a CEM planner and a software renderer.

pub mod actuation;
pub mod assets;
pub mod cem;
pub mod env;
pub mod error;
pub mod metrics;
pub mod pbd;
pub mod render;
pub mod tasks;
pub mod variation;

pub type Vec3 = glam::DVec3;

pub use env::{EnvConfig, EnvHandle, ObsMode, Observation, VariationSource};
pub use error::{Error, Result};
pub use tasks::{ParticleScale, TaskKind, TaskState};
