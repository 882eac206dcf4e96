//! Closed-form and series bounds: Poisson large deviations, random-walk
//! kernel estimates, the generation series and front-speed thresholds.

pub mod kernel;
pub mod ld;
pub mod series;
pub mod velocity;

pub use kernel::{calibrate_kernel_constants, calibration_grid, kernel_bound, KernelConstants};
pub use ld::{poisson_ld, ratio_level, LdKind};
pub use series::{q1_series, q2_series, QSeriesParams, QSeriesValue};
pub use velocity::{prop_pf1_bound, rbk_bound, theorem1_bound, write_bound_curve, BoundValue, VelocityBound};
