//! Red/blue particle processes on `Z^d`.

pub mod config;
pub mod engine;
pub mod queue;
pub mod trajectory;
pub mod zone;

pub use config::{FieldMode, RbConfig, SampleGrid};
pub use engine::{run_rb, Color, Particle, RbSim};
pub use queue::EventQueue;
pub use trajectory::{ParticleSnapshot, RbTrajectory, RunStats, TraceSample};
pub use zone::RedZone;
