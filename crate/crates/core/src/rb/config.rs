use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{BlueProcessSpec, SeedRule};
use crate::lattice::Dim;

/// Where the initial blue particles come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FieldMode {
    /// Poisson field on all of `Z^d`, sampled on demand when a particle first
    /// touches the red zone.
    Lazy,
    /// Poisson field sampled up front on a box of side `2 half_width + 1`.
    /// Blue motion wraps periodically inside the (recentred) box; the replica
    /// aborts when a red particle leaves it.
    Window { half_width: u32 },
}

/// Observation times for the trajectory traces; always contains 0 and `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "kebab-case")]
pub enum SampleGrid {
    /// Geometric spacing from `start` with `per_decade` points per factor of 10.
    Geometric { per_decade: u32, start: f64 },
    Linear { step: f64 },
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid::Geometric {
            per_decade: 40,
            start: 1.0,
        }
    }
}

impl SampleGrid {
    pub fn times(&self, t_max: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        match *self {
            SampleGrid::Geometric { per_decade, start } => {
                let ratio = 10f64.powf(1.0 / per_decade as f64);
                let mut k = 0;
                loop {
                    let t = start * ratio.powi(k);
                    if t >= t_max {
                        break;
                    }
                    out.push(t);
                    k += 1;
                }
            }
            SampleGrid::Linear { step } => {
                let mut k = 1;
                while (k as f64) * step < t_max {
                    out.push(k as f64 * step);
                    k += 1;
                }
            }
        }
        if t_max > 0.0 {
            out.push(t_max);
        }
        out
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SampleGrid::Geometric { per_decade, start } if per_decade == 0 || !(start > 0.0) => Err(
                Error::InvalidConfig("geometric grid needs per_decade >= 1 and start > 0".into()),
            ),
            SampleGrid::Linear { step } if !(step > 0.0) => {
                Err(Error::InvalidConfig("linear grid step must be > 0".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub dim: Dim,
    pub density: f64,
    pub blue: BlueProcessSpec,
    pub t_max: f64,
    pub field: FieldMode,
    #[serde(default)]
    pub seed_rule: SeedRule,
    #[serde(default)]
    pub grid: SampleGrid,
    /// Upper bound on the number of live (tracked) particles.
    pub particle_budget: usize,
    /// Keep a per-particle snapshot at the end of the run.
    #[serde(default)]
    pub record_particles: bool,
    /// Check red containment at every sample time.
    #[serde(default)]
    pub check_invariants: bool,
}

impl RbConfig {
    pub fn new(dim: Dim, density: f64, blue: BlueProcessSpec, t_max: f64) -> Self {
        RbConfig {
            dim,
            density,
            blue,
            t_max,
            field: FieldMode::Lazy,
            seed_rule: SeedRule::UniformParticle,
            grid: SampleGrid::default(),
            particle_budget: 20_000_000,
            record_particles: false,
            check_invariants: false,
        }
    }

    pub fn frog(dim: Dim, density: f64, t_max: f64) -> Self {
        Self::new(dim, density, BlueProcessSpec::Frozen, t_max)
    }

    pub fn ks(dim: Dim, density: f64, blue_rate: f64, t_max: f64) -> Self {
        Self::new(dim, density, BlueProcessSpec::SimpleWalk { rate: blue_rate }, t_max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidConfig(format!("density must be > 0, got {}", self.density)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_max must be finite and >= 0, got {}", self.t_max)));
        }
        if matches!(self.field, FieldMode::Lazy) && self.seed_rule != SeedRule::UniformParticle {
            return Err(Error::InvalidConfig(
                "the lazy infinite field only supports the uniform-particle seed rule".into(),
            ));
        }
        self.blue.validate(self.dim)?;
        self.grid.validate()
    }
}
