use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::RbConfig;
use super::engine::Color;
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::rng::RngStream;

/// Red-zone observables at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time: f64,
    pub max_radius: f64,
    pub n_red: u64,
    pub visited: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub events: u64,
    pub red_moves: u64,
    pub blue_moves: u64,
    pub infections: u64,
    pub growth_candidates: u64,
    pub growth_accepted: u64,
    pub flux_candidates: u64,
    pub flux_accepted: u64,
    pub max_generation: u32,
    pub live_particles: u64,
    pub tracked_blue: u64,
}

/// End-of-run state of one particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSnapshot {
    pub id: u32,
    pub position: Site,
    pub color: Color,
    pub generation: u32,
    pub parent: Option<u32>,
    pub first_site: Site,
    pub first_time: f64,
    pub infected_site: Option<Site>,
    pub infected_at: Option<f64>,
    pub displacement: Site,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbTrajectory {
    pub samples: Vec<TraceSample>,
    /// `t_max`, or the abort time when a red particle left the window.
    pub final_time: f64,
    pub aborted: bool,
    pub config: RbConfig,
    pub stream: RngStream,
    pub stats: RunStats,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub particles: Option<Vec<ParticleSnapshot>>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a RbConfig,
    stream: &'a RngStream,
    final_time: f64,
    aborted: bool,
    stats: &'a RunStats,
}

impl RbTrajectory {
    /// Observables at the last grid point `<= t`.
    pub fn sample_red_zone(&self, t: f64) -> Result<TraceSample> {
        if !(t >= 0.0) || t > self.final_time {
            return Err(Error::OutOfRange {
                t,
                final_time: self.final_time,
            });
        }
        let i = self.samples.partition_point(|s| s.time <= t);
        if i == 0 {
            return Err(Error::OutOfRange {
                t,
                final_time: self.final_time,
            });
        }
        Ok(self.samples[i - 1])
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    /// `(time, max_radius)` pairs.
    pub fn radius_trace(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.time, s.max_radius)).collect()
    }

    /// `(time, n(t))` pairs.
    pub fn red_count_trace(&self) -> Vec<(f64, u64)> {
        self.samples.iter().map(|s| (s.time, s.n_red)).collect()
    }

    /// Writes `time,max_radius,n,visited_count` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,max_radius,n,visited_count")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{}", s.time, s.max_radius, s.n_red, s.visited)?;
        }
        Ok(())
    }

    /// JSON sidecar with the config, seed, abort flag and counters.
    pub fn sidecar_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&Sidecar {
            config: &self.config,
            stream: &self.stream,
            final_time: self.final_time,
            aborted: self.aborted,
            stats: &self.stats,
        })
    }
}
