//! Randomness, initial fields, single-particle processes and exact oracles.

pub mod blue;
pub mod field;
pub mod oracle;

pub use blue::{blue_step, red_step, BlueProcessSpec, Jump, RateSchedule, StepEvent};
pub use field::{sample_poisson_field, seed_particle_and_recenter, PoissonField, SeedRule, SeededConfiguration};
pub use oracle::{exact_ctrw_kernel, exact_poisson_tail, Tail};
