//! Simulation and bound-checking toolkit for two-type (red/blue)
//! reaction-diffusion particle systems: the frog model, the
//! Kesten-Sidoravicius family with general bistochastic blue motion, and the
//! red/blue Kawasaki lattice gas.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod kawasaki;
pub mod kernels;
pub mod lattice;
pub mod rb;
pub mod rng;
pub mod unionfind;

pub use error::{Error, Result};
pub use lattice::{BoxSpec, Dim, Site, TorusSite};
pub use rb::{run_rb, RbConfig, RbTrajectory};
pub use rng::RngStream;
