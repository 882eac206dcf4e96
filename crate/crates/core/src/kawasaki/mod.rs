//! Kawasaki lattice gas on a 2-D torus and its red/blue infection variant.

pub mod cloud;
pub mod concentration;
pub mod config;
pub mod rbk;
pub mod state;
pub mod two_box;

pub use cloud::cloud_partition;
pub use concentration::{detect_concentration, ConcentrationReport};
pub use config::{KawasakiConfig, LambdaFn};
pub use rbk::{run_rbk, RbkTrajectory};
pub use state::{propagate_red, ClusterDecomposition, KawasakiState, StepOutcome, Tint};
pub use two_box::{box_distance, two_box_experiment, EventSpec, TwoBoxReport};
